#include "laeo/approx.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace laeo {

void MlpParams::set_zero() {
  for (auto& w : W) w.setZero();
  for (auto& v : b) v.setZero();
}

bool MlpParams::all_finite() const {
  for (const auto& w : W)
    if (!w.allFinite()) return false;
  for (const auto& v : b)
    if (!v.allFinite()) return false;
  return true;
}

long MlpParams::size() const {
  long n = 0;
  for (const auto& w : W) n += w.size();
  for (const auto& v : b) n += v.size();
  return n;
}

Vec MlpParams::to_flat() const {
  Vec out(size());
  long k = 0;
  for (const auto& w : W) {
    out.segment(k, w.size()) = Eigen::Map<const Vec>(w.data(), w.size());
    k += w.size();
  }
  for (const auto& v : b) {
    out.segment(k, v.size()) = v;
    k += v.size();
  }
  return out;
}

void MlpParams::from_flat(const Vec& flat) {
  if (flat.size() != size()) throw std::invalid_argument("from_flat: size mismatch");
  long k = 0;
  for (auto& w : W) {
    Eigen::Map<Vec>(w.data(), w.size()) = flat.segment(k, w.size());
    k += w.size();
  }
  for (auto& v : b) {
    v = flat.segment(k, v.size());
    k += v.size();
  }
}

MlpParams& MlpParams::operator+=(const MlpParams& o) {
  for (size_t i = 0; i < W.size(); ++i) W[i] += o.W[i];
  for (size_t i = 0; i < b.size(); ++i) b[i] += o.b[i];
  return *this;
}

MlpParams& MlpParams::operator*=(double c) {
  for (auto& w : W) w *= c;
  for (auto& v : b) v *= c;
  return *this;
}

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need at least [in, out]");
  for (int s : sizes_)
    if (s <= 0) throw std::invalid_argument("Mlp: nonpositive layer size");
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    params_.W.emplace_back(Mat::Zero(sizes_[l + 1], sizes_[l]));
    params_.b.emplace_back(Vec::Zero(sizes_[l + 1]));
  }
}

void Mlp::init(Rng& rng) {
  for (auto& w : params_.W) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.cols()));
    for (long j = 0; j < w.cols(); ++j)
      for (long i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-bound, bound);
  }
  for (auto& v : params_.b) v.setZero();
}

Mat Mlp::forward(const Mat& X) const {
  Cache cache;
  return forward(X, cache);
}

Mat Mlp::forward(const Mat& X, Cache& cache) const {
  if (X.cols() != in_dim()) throw std::invalid_argument("Mlp::forward: input width mismatch");
  cache.input = X;
  cache.pre.clear();
  Mat h = X;
  const size_t L = params_.W.size();
  for (size_t l = 0; l < L; ++l) {
    Mat z = h * params_.W[l].transpose();
    z.rowwise() += params_.b[l].transpose();
    cache.pre.push_back(z);
    if (l + 1 < L)
      h = z.cwiseMax(0.0);
    else
      h = z;
  }
  return h;
}

Mat Mlp::backward(const Cache& cache, const Mat& dY, MlpParams& grads) const {
  const size_t L = params_.W.size();
  if (cache.pre.size() != L) throw std::invalid_argument("Mlp::backward: bad cache");
  Mat delta = dY;
  for (size_t l = L; l-- > 0;) {
    if (l + 1 < L) {
      // ReLU mask of this layer's pre-activation
      delta = delta.cwiseProduct((cache.pre[l].array() > 0.0).cast<double>().matrix());
    }
    const Mat& prev = (l == 0) ? cache.input : Mat(cache.pre[l - 1].cwiseMax(0.0));
    grads.W[l] += delta.transpose() * prev;
    grads.b[l] += delta.colwise().sum().transpose();
    delta = delta * params_.W[l];
  }
  return delta;  // dL/dX
}

MlpParams Mlp::zero_like() const {
  MlpParams g;
  for (const auto& w : params_.W) g.W.emplace_back(Mat::Zero(w.rows(), w.cols()));
  for (const auto& v : params_.b) g.b.emplace_back(Vec::Zero(v.size()));
  return g;
}

void AdamState::init(const MlpParams& shape) {
  m.W.clear();
  m.b.clear();
  v.W.clear();
  v.b.clear();
  for (const auto& w : shape.W) {
    m.W.emplace_back(Mat::Zero(w.rows(), w.cols()));
    v.W.emplace_back(Mat::Zero(w.rows(), w.cols()));
  }
  for (const auto& vb : shape.b) {
    m.b.emplace_back(Vec::Zero(vb.size()));
    v.b.emplace_back(Vec::Zero(vb.size()));
  }
  step = 0;
}

void AdamState::update(MlpParams& params, const MlpParams& grads) {
  ++step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (size_t i = 0; i < params.W.size(); ++i) {
    m.W[i] = beta1 * m.W[i] + (1.0 - beta1) * grads.W[i];
    v.W[i] = beta2 * v.W[i].array().matrix() + (1.0 - beta2) * grads.W[i].cwiseProduct(grads.W[i]);
    params.W[i].array() -= lr * (m.W[i].array() / bc1) / ((v.W[i].array() / bc2).sqrt() + eps);
  }
  for (size_t i = 0; i < params.b.size(); ++i) {
    m.b[i] = beta1 * m.b[i] + (1.0 - beta1) * grads.b[i];
    v.b[i] = beta2 * v.b[i] + (1.0 - beta2) * grads.b[i].cwiseProduct(grads.b[i]);
    params.b[i].array() -= lr * (m.b[i].array() / bc1) / ((v.b[i].array() / bc2).sqrt() + eps);
  }
}

namespace {
constexpr char kMagic[8] = {'L', 'A', 'E', 'O', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ofstream& f, std::uint32_t x) { f.write(reinterpret_cast<const char*>(&x), 4); }
std::uint32_t read_u32(std::ifstream& f) {
  std::uint32_t x = 0;
  f.read(reinterpret_cast<char*>(&x), 4);
  if (!f) throw std::runtime_error("checkpoint: truncated file");
  return x;
}
}  // namespace

void save_checkpoint(const std::string& path, const std::vector<CheckpointEntry>& entries) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open for write: " + path);
  f.write(kMagic, 8);
  write_u32(f, kVersion);
  write_u32(f, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    write_u32(f, static_cast<std::uint32_t>(e.name.size()));
    f.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    write_u32(f, static_cast<std::uint32_t>(e.params.W.size()));
    for (size_t l = 0; l < e.params.W.size(); ++l) {
      write_u32(f, static_cast<std::uint32_t>(e.params.W[l].rows()));
      write_u32(f, static_cast<std::uint32_t>(e.params.W[l].cols()));
      f.write(reinterpret_cast<const char*>(e.params.W[l].data()),
              static_cast<std::streamsize>(sizeof(double) * e.params.W[l].size()));
      f.write(reinterpret_cast<const char*>(e.params.b[l].data()),
              static_cast<std::streamsize>(sizeof(double) * e.params.b[l].size()));
    }
  }
  if (!f) throw std::runtime_error("checkpoint: write failed: " + path);
}

std::vector<CheckpointEntry> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::string(magic, 8) != std::string(kMagic, 8))
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const std::uint32_t version = read_u32(f);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  const std::uint32_t n = read_u32(f);
  std::vector<CheckpointEntry> out(n);
  for (auto& e : out) {
    const std::uint32_t name_len = read_u32(f);
    e.name.resize(name_len);
    f.read(e.name.data(), name_len);
    const std::uint32_t layers = read_u32(f);
    for (std::uint32_t l = 0; l < layers; ++l) {
      const std::uint32_t rows = read_u32(f);
      const std::uint32_t cols = read_u32(f);
      Mat w(rows, cols);
      f.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(sizeof(double) * w.size()));
      Vec b(rows);
      f.read(reinterpret_cast<char*>(b.data()), static_cast<std::streamsize>(sizeof(double) * b.size()));
      if (!f) throw std::runtime_error("checkpoint: truncated file " + path);
      e.params.W.push_back(std::move(w));
      e.params.b.push_back(std::move(b));
    }
  }
  return out;
}

}  // namespace laeo
