#include "laeo/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace laeo {

bool Trajectory::successful() const {
  for (bool f : success_flags)
    if (f) return true;
  return false;
}

void Trajectory::validate() const {
  if (states.size() != actions.size() + 1 || success_flags.size() != actions.size())
    throw std::invalid_argument("Trajectory: inconsistent lengths");
  for (const auto& s : states)
    if (!s.allFinite()) throw std::invalid_argument("Trajectory: non-finite state");
  for (const auto& a : actions)
    if (!a.allFinite()) throw std::invalid_argument("Trajectory: non-finite action");
}

int TrajectoryDataset::state_dim() const {
  return trajectories.empty() ? 0 : static_cast<int>(trajectories.front().states.front().size());
}
int TrajectoryDataset::action_dim() const {
  return trajectories.empty() ? 0 : static_cast<int>(trajectories.front().actions.front().size());
}
int TrajectoryDataset::horizon() const {
  return trajectories.empty() ? 0 : trajectories.front().length();
}
long TrajectoryDataset::total_states() const {
  long n = 0;
  for (const auto& t : trajectories) n += static_cast<long>(t.states.size());
  return n;
}
double TrajectoryDataset::success_rate() const {
  if (trajectories.empty()) return 0.0;
  long n = 0;
  for (const auto& t : trajectories) n += t.successful() ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(trajectories.size());
}

void TrajectoryDataset::validate() const {
  if (trajectories.empty()) throw std::invalid_argument("TrajectoryDataset: empty");
  const int sd = state_dim();
  const int ad = action_dim();
  for (const auto& t : trajectories) {
    t.validate();
    if (static_cast<int>(t.states.front().size()) != sd ||
        static_cast<int>(t.actions.front().size()) != ad)
      throw std::invalid_argument("TrajectoryDataset: mixed dimensionality");
  }
}

void SuccessSet::validate(int expected_dim) const {
  if (states.empty()) throw std::invalid_argument("SuccessSet: empty");
  for (const auto& s : states)
    if (static_cast<int>(s.size()) != expected_dim)
      throw std::invalid_argument("SuccessSet: dimensionality mismatch");
}

std::pair<Vec, int> sample_future_state(const Trajectory& traj, int t, double gamma, Rng& rng) {
  const int T = traj.length();
  if (t < 0 || t > T - 1) throw std::out_of_range("sample_future_state: t out of range");
  if (gamma <= 0.0 || gamma >= 1.0) throw std::invalid_argument("sample_future_state: gamma");
  const int L = T - t;  // max offset; states[t+L] is the final state
  // Inverse-CDF draw from P(k) = gamma^k (1-gamma) / (1 - gamma^{L+1}).
  const double tail = 1.0 - std::pow(gamma, static_cast<double>(L + 1));
  const double u = rng.uniform();
  int k = static_cast<int>(std::floor(std::log1p(-u * tail) / std::log(gamma)));
  if (k < 0) k = 0;
  if (k > L) k = L;
  return {traj.states[static_cast<size_t>(t + k)], k};
}

ContrastiveBatch sample_batch(const TrajectoryDataset& data, int batch_size, int negatives_per_anchor,
                              double gamma, Rng& rng) {
  if (data.trajectories.empty()) throw std::invalid_argument("sample_batch: empty dataset");
  if (batch_size < 2 && negatives_per_anchor >= 1)
    throw std::invalid_argument("sample_batch: need B >= 2 when K >= 1");
  const long n_traj = static_cast<long>(data.trajectories.size());
  ContrastiveBatch batch;
  batch.anchor_states.reserve(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    const int ti = static_cast<int>(rng.uniform_int(n_traj));
    const Trajectory& traj = data.trajectories[ti];
    const int t = static_cast<int>(rng.uniform_int(traj.length()));
    auto [future, k] = sample_future_state(traj, t, gamma, rng);
    batch.anchor_states.push_back(traj.states[t]);
    batch.anchor_actions.push_back(traj.actions[t]);
    batch.positives.push_back(std::move(future));
    batch.anchor_traj.push_back(ti);
    batch.anchor_t.push_back(t);
    batch.positive_offset.push_back(k);
    std::vector<Vec> negs;
    negs.reserve(negatives_per_anchor);
    for (int kk = 0; kk < negatives_per_anchor; ++kk) {
      // Negatives are independent draws from the empirical state marginal.
      const int tj = static_cast<int>(rng.uniform_int(n_traj));
      const Trajectory& tr = data.trajectories[tj];
      const int idx = static_cast<int>(rng.uniform_int(static_cast<long>(tr.states.size())));
      negs.push_back(tr.states[idx]);
    }
    batch.negatives.push_back(std::move(negs));
  }
  return batch;
}

namespace {

void append_vec(std::string& line, const Vec& v) {
  char buf[40];
  for (long i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), " %.17g", v[i]);
    line += buf;
  }
}

[[noreturn]] void parse_fail(const std::string& path, int line_no, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": parse error: " + what);
}

std::map<std::string, std::string> parse_header_fields(const std::string& line) {
  std::map<std::string, std::string> fields;
  std::istringstream ss(line);
  std::string tok;
  ss >> tok;  // format tag
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    fields[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return fields;
}

}  // namespace

void save_dataset(const TrajectoryDataset& data, const std::string& path) {
  data.validate();
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_dataset: cannot open " + path);
  f << "laeo-dataset version=1 env_id=" << data.env_id << " state_dim=" << data.state_dim()
    << " action_dim=" << data.action_dim() << " horizon=" << data.horizon()
    << " n_traj=" << data.trajectories.size() << "\n";
  for (const auto& [k, v] : data.metadata) f << "meta " << k << " " << v << "\n";
  for (const auto& traj : data.trajectories) {
    std::string line = "traj " + std::to_string(traj.length());
    for (const auto& s : traj.states) append_vec(line, s);
    for (const auto& a : traj.actions) append_vec(line, a);
    for (bool b : traj.success_flags) line += b ? " 1" : " 0";
    f << line << "\n";
  }
  if (!f) throw std::runtime_error("save_dataset: write failed " + path);
}

TrajectoryDataset load_dataset(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_dataset: cannot open " + path);
  std::string line;
  int line_no = 0;
  if (!std::getline(f, line)) parse_fail(path, 1, "empty file");
  ++line_no;
  if (line.rfind("laeo-dataset", 0) != 0) parse_fail(path, line_no, "missing dataset header");
  auto fields = parse_header_fields(line);
  if (fields["version"] != "1")
    throw std::runtime_error(path + ": unsupported dataset version '" + fields["version"] + "'");
  TrajectoryDataset data;
  data.env_id = fields["env_id"];
  const int sd = std::stoi(fields.at("state_dim"));
  const int ad = std::stoi(fields.at("action_dim"));
  const long n_traj = std::stol(fields.at("n_traj"));

  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "meta") {
      std::string key;
      ss >> key;
      std::string value;
      std::getline(ss, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      data.metadata[key] = value;
      continue;
    }
    if (tag != "traj") parse_fail(path, line_no, "unexpected record '" + tag + "'");
    int T = -1;
    ss >> T;
    if (!ss || T <= 0) parse_fail(path, line_no, "bad trajectory length");
    Trajectory traj;
    auto read_vec = [&](int dim) {
      Vec v(dim);
      for (int i = 0; i < dim; ++i) {
        if (!(ss >> v[i])) parse_fail(path, line_no, "truncated numeric record");
      }
      return v;
    };
    for (int t = 0; t <= T; ++t) traj.states.push_back(read_vec(sd));
    for (int t = 0; t < T; ++t) traj.actions.push_back(read_vec(ad));
    for (int t = 0; t < T; ++t) {
      int b = -1;
      if (!(ss >> b) || (b != 0 && b != 1)) parse_fail(path, line_no, "bad success flag");
      traj.success_flags.push_back(b == 1);
    }
    double extra;
    if (ss >> extra) parse_fail(path, line_no, "trailing data in trajectory record");
    data.trajectories.push_back(std::move(traj));
  }
  if (static_cast<long>(data.trajectories.size()) != n_traj)
    throw std::runtime_error(path + ": header promises " + std::to_string(n_traj) +
                             " trajectories, found " + std::to_string(data.trajectories.size()));
  data.validate();
  return data;
}

void save_success_set(const SuccessSet& set, int state_dim, const std::string& path) {
  set.validate(state_dim);
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_success_set: cannot open " + path);
  f << "laeo-success-set version=1 env_id=" << set.env_id << " state_dim=" << state_dim
    << " n=" << set.states.size() << "\n";
  for (const auto& s : set.states) {
    std::string line = "state";
    append_vec(line, s);
    f << line << "\n";
  }
  if (!f) throw std::runtime_error("save_success_set: write failed " + path);
}

SuccessSet load_success_set(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_success_set: cannot open " + path);
  std::string line;
  int line_no = 0;
  if (!std::getline(f, line)) parse_fail(path, 1, "empty file");
  ++line_no;
  if (line.rfind("laeo-success-set", 0) != 0) parse_fail(path, line_no, "missing success-set header");
  auto fields = parse_header_fields(line);
  if (fields["version"] != "1")
    throw std::runtime_error(path + ": unsupported success-set version '" + fields["version"] + "'");
  const int sd = std::stoi(fields.at("state_dim"));
  const long n = std::stol(fields.at("n"));
  SuccessSet set;
  set.env_id = fields["env_id"];
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag != "state") parse_fail(path, line_no, "unexpected record '" + tag + "'");
    Vec v(sd);
    for (int i = 0; i < sd; ++i)
      if (!(ss >> v[i])) parse_fail(path, line_no, "truncated state record");
    set.states.push_back(std::move(v));
  }
  if (static_cast<long>(set.states.size()) != n)
    throw std::runtime_error(path + ": header promises " + std::to_string(n) + " states, found " +
                             std::to_string(set.states.size()));
  set.validate(sd);
  return set;
}

StateBinning StateBinning::for_gridworld(int n_states) {
  StateBinning b;
  b.tabular = true;
  b.n_tabular_states = n_states;
  b.state_dim = 1;
  return b;
}

StateBinning StateBinning::grid(int state_dim, int resolution) {
  if (resolution < 1) throw std::invalid_argument("StateBinning: resolution >= 1 required");
  StateBinning b;
  b.resolution = resolution;
  b.state_dim = state_dim;
  return b;
}

int StateBinning::n_bins() const {
  if (tabular) return n_tabular_states;
  int n = 1;
  for (int d = 0; d < state_dim; ++d) n *= resolution;
  return n;
}

int StateBinning::bin_of(const Vec& state) const {
  if (tabular) return static_cast<int>(state[0]);
  int bin = 0;
  for (int d = 0; d < state_dim; ++d) {
    int i = static_cast<int>(std::floor(state[d] * resolution));
    if (i < 0) i = 0;
    if (i >= resolution) i = resolution - 1;
    bin = bin * resolution + i;
  }
  return bin;
}

Vec empirical_state_density(const TrajectoryDataset& data, const StateBinning& binning) {
  Vec counts = Vec::Zero(binning.n_bins());
  double total = 0.0;
  for (const auto& traj : data.trajectories) {
    for (const auto& s : traj.states) {
      counts[binning.bin_of(s)] += 1.0;
      total += 1.0;
    }
  }
  if (total > 0.0) counts /= total;
  return counts;
}

Trajectory rollout(const Env& env, const BehaviorPolicy& policy, Rng& rng) {
  Trajectory traj;
  Vec s = env.reset(rng);
  traj.states.push_back(s);
  for (int t = 0; t < env.horizon(); ++t) {
    Vec a = scripted_policy_action(env, policy, s, rng);
    auto [next, success] = env.step(s, a, rng);
    traj.actions.push_back(std::move(a));
    traj.success_flags.push_back(success);
    traj.states.push_back(next);
    s = std::move(next);
  }
  return traj;
}

TrajectoryDataset collect_dataset(const Env& env, const BehaviorPolicy& policy, int n_trajectories,
                                  std::uint64_t seed) {
  if (n_trajectories <= 0) throw std::invalid_argument("collect_dataset: n_trajectories");
  TrajectoryDataset data;
  data.env_id = env.id();
  Rng root(seed);
  for (int i = 0; i < n_trajectories; ++i) {
    Rng rng = root.split(static_cast<std::uint64_t>(i));
    data.trajectories.push_back(rollout(env, policy, rng));
  }
  data.validate();
  return data;
}

}  // namespace laeo
