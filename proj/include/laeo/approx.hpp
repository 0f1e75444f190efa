#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "laeo/rng.hpp"

namespace laeo {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Parameters of a feedforward net: W[l] is (out x in), b[l] is (out).
struct MlpParams {
  std::vector<Mat> W;
  std::vector<Vec> b;

  void set_zero();
  bool all_finite() const;
  long size() const;  // total scalar count

  // Flat views, used by the optimizer and by finite-difference tests.
  Vec to_flat() const;
  void from_flat(const Vec& flat);

  MlpParams& operator+=(const MlpParams& o);
  MlpParams& operator*=(double c);
};

// Plain MLP with ReLU hidden activations and identity output, 64-bit floats.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> layer_sizes);

  int in_dim() const { return sizes_.front(); }
  int out_dim() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }

  // He-uniform weights (bound sqrt(6/fan_in)), zero biases.
  void init(Rng& rng);

  // X is (batch x in_dim); returns (batch x out_dim).
  Mat forward(const Mat& X) const;

  struct Cache {
    Mat input;
    std::vector<Mat> pre;  // pre-activation per layer
  };
  Mat forward(const Mat& X, Cache& cache) const;

  // Backprop: dY is (batch x out_dim). Accumulates parameter gradients into
  // `grads` (must be shaped like params) and returns dL/dX.
  Mat backward(const Cache& cache, const Mat& dY, MlpParams& grads) const;

  MlpParams& params() { return params_; }
  const MlpParams& params() const { return params_; }
  MlpParams zero_like() const;

 private:
  std::vector<int> sizes_;
  MlpParams params_;
};

// Standard Adam with bias correction; moments mirror the parameter layout.
struct AdamState {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  MlpParams m, v;

  void init(const MlpParams& shape);
  void update(MlpParams& params, const MlpParams& grads);
};

// Checkpoint I/O: flat binary file with a shape manifest header, exact
// round-trip. Each entry is a named parameter set.
struct CheckpointEntry {
  std::string name;
  MlpParams params;
};
void save_checkpoint(const std::string& path, const std::vector<CheckpointEntry>& entries);
std::vector<CheckpointEntry> load_checkpoint(const std::string& path);

}  // namespace laeo
