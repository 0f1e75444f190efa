#pragma once

#include "laeo/critic.hpp"

namespace laeo {

// Diagonal-Gaussian policy with a tanh squash onto the action box. The net
// maps a state to per-dimension (mean, log_std); log_std is clamped to
// [-5, 2]. Sampled actions always lie inside the box.
struct GaussianPolicy {
  Mlp net;  // state -> [mu (A), log_std (A)]
  Vec act_low;
  Vec act_high;
  int action_dim = 0;
  bool squash = true;
  double log_std_min = -5.0;
  double log_std_max = 2.0;

  Vec center() const { return 0.5 * (act_low + act_high); }
  Vec half_width() const { return 0.5 * (act_high - act_low); }

  // Network head evaluated on a state batch (B x state_dim).
  void head(const Mat& S, Mat& mu, Mat& log_std) const;

  Vec mean_action(const Vec& state) const;             // deterministic evaluation action
  Vec sample_action(const Vec& state, Rng& rng) const;
  // Log-density of an in-box action, with the tanh change-of-variables
  // correction when squashing is enabled. Out-of-box actions are an error.
  double log_prob(const Vec& state, const Vec& action) const;
};

enum class PolicyObjective { exp_mean, log_mean_exp, jensen_mean_f };

struct PolicyTrainConfig {
  double lambda = 0.5;  // BC weight in [0, 1]
  PolicyObjective mode = PolicyObjective::jensen_mean_f;
  int batch_size = 256;
  double lr = 3e-4;
  int steps = 10000;
  std::uint64_t seed = 0;
  int eval_every = 500;
  std::vector<int> hidden = {64, 64};
};

// Interface for the critic term of the policy objective: scores a batch of
// (state, action) pairs and exposes the gradient with respect to the action.
// log_domain() distinguishes critics reporting f (so the value is e^f) from
// critics reporting plain action values.
class ActionValue {
 public:
  virtual ~ActionValue() = default;
  virtual bool log_domain() const = 0;
  virtual void score(const Mat& states, const Mat& actions, Rng& rng, Vec& values,
                     Mat& dvalue_daction) const = 0;
};

// LAEO critic term: value_i = f(s_i, a_i, s*_i) with s*_i drawn uniformly
// from the success set per row.
class LaeoActionValue : public ActionValue {
 public:
  LaeoActionValue(const ContrastiveCritic& critic, const Env& env, const SuccessSet& success);
  bool log_domain() const override { return true; }
  void score(const Mat& states, const Mat& actions, Rng& rng, Vec& values,
             Mat& dvalue_daction) const override;

 private:
  const ContrastiveCritic& critic_;
  const Env& env_;
  Mat success_states_;  // encoded
  Vec mean_psi_;        // mean example embedding
};

struct PolicyLossResult {
  double loss = 0.0;
  MlpParams grads;
};

// Full policy objective, minimized:
//   (1-lambda) * critic term per `mode` + lambda * (-mean log pi(a_data|s)).
// Actions for the critic term use the reparameterization a = squash(mu +
// std * eps) with the caller-supplied noise matrix `eps` (B x A), so the
// loss is deterministic given (params, batch, eps) and gradients flow
// through the critic's action input. qfn may be null only when lambda == 1.
PolicyLossResult policy_loss(const GaussianPolicy& policy, const ActionValue* qfn, const Mat& states,
                             const Mat& data_actions, const Mat& eps, double lambda,
                             PolicyObjective mode, Rng& rng);

using PolicyEvalCallback = std::function<void(int step, double loss, const GaussianPolicy& policy)>;

GaussianPolicy make_policy(const Env& env, const std::vector<int>& hidden, std::uint64_t seed);

// Adam on policy_loss over uniformly sampled dataset transitions.
// Deterministic per seed. qfn may be null when cfg.lambda == 1.
GaussianPolicy train_policy(const TrajectoryDataset& data, const ActionValue* qfn, const Env& env,
                            const PolicyTrainConfig& cfg, const PolicyEvalCallback& on_log = nullptr);

// train_policy with lambda = 1 (the critic is ignored entirely).
GaussianPolicy bc_baseline(const TrajectoryDataset& data, const Env& env, const PolicyTrainConfig& cfg,
                           const PolicyEvalCallback& on_log = nullptr);

// Success rate of the deterministic mean policy over `episodes` rollouts.
double evaluate_policy(const Env& env, const GaussianPolicy& policy, int episodes, std::uint64_t seed);

}  // namespace laeo
