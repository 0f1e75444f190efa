#pragma once

#include <functional>

#include "laeo/dataset.hpp"

namespace laeo {

// Implicit dynamics model f(s, a, s_f) = <phi(s, a), psi(s_f)> with
// unnormalized features. phi consumes the concatenated encoded state and
// action; psi consumes the encoded future state.
struct ContrastiveCritic {
  Mlp phi;
  Mlp psi;
  int rep_dim = 16;

  double f_value(const Vec& state_action, const Vec& future) const;
  // Row-wise pairs: SA is (n x phi_in), SF is (n x psi_in).
  Vec f_batch(const Mat& SA, const Mat& SF) const;
};

struct CriticTrainConfig {
  int batch_size = 256;
  int negatives_per_anchor = 1;
  double gamma = 0.95;
  double lr = 3e-4;
  int steps = 20000;
  std::uint64_t seed = 0;
  int eval_every = 500;
  std::vector<int> hidden = {64, 64};
  int rep_dim = 16;
};

struct NceLoss {
  double loss = 0.0;
  MlpParams grad_phi;
  MlpParams grad_psi;
};

// Binary NCE objective, minimized:
//   -mean_i log sigmoid(f_i+) - mean_{i,k} log(1 - sigmoid(f_{i,k}-)).
// The positive and negative means are weighted equally regardless of K.
// SA_pos pairs with SF_pos (B rows); SA_neg pairs with SF_neg (B*K rows,
// anchors repeated).
NceLoss nce_loss(const ContrastiveCritic& critic, const Mat& SA_pos, const Mat& SF_pos,
                 const Mat& SA_neg, const Mat& SF_neg);

using StepCallback = std::function<void(int step, double loss)>;

// Adam on nce_loss over sample_batch draws; deterministic given the seed.
// Non-finite losses abort with diagnostics.
ContrastiveCritic train_critic(const TrajectoryDataset& data, const Env& env,
                               const CriticTrainConfig& cfg, const StepCallback& on_log = nullptr);

// Q estimate from the critic, with the unidentifiable scale constant fixed to 1:
//   Q(s, a) = 1/(1-gamma) * mean_{s* in D_*} exp(f(s, a, s*)).
// Computed via log-sum-exp; overflow past the guard is an error.
double estimate_q(const ContrastiveCritic& critic, const Env& env, const Vec& state, const Vec& action,
                  const SuccessSet& success, double gamma);

// ---- Tabular NCE (verification path) ------------------------------------

// Exact per-triple weights of the contrastive objective over a dataset:
// pos[a](s, s') accumulates the truncated-geometric positive mass of each
// anchor, anchor_weight(s, a) the anchor marginal, p_tau the state marginal.
// All three are normalized to sum to 1.
struct TripleWeights {
  std::vector<Mat> pos;
  Mat anchor_weight;
  Vec p_tau;
};
TripleWeights nce_triple_weights(const TrajectoryDataset& data, int n_states, int n_actions,
                                 double gamma);

// Full-batch NCE on a one-parameter-per-triple table; converges to
// sigmoid(f) = W_pos / (W_pos + W_neg) with W_neg(s,a,s') =
// anchor_weight(s,a) * p_tau(s').
std::vector<Mat> train_tabular_nce(const TripleWeights& w, int steps, double lr);

// Reconstruction of the occupancy measure from a trained MLP critic:
// rho_hat(s'|s,a) = exp(f(s,a,s')) * p_tau(s') over a gridworld.
std::vector<Mat> reconstruct_occupancy(const ContrastiveCritic& critic, const GridWorld& env,
                                       const Vec& p_tau);

}  // namespace laeo
