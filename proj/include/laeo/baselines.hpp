#pragma once

#include "laeo/policy.hpp"

namespace laeo {

// State-only reward classifier; predicted reward is sigmoid(logit).
struct RewardClassifier {
  Mlp net;  // state -> logit

  Vec logits(const Mat& states) const;
  double reward(const Vec& state) const;  // sigmoid(logit) in (0,1)
};

enum class ClassifierLoss { bce, pu };

struct ClassifierTrainConfig {
  ClassifierLoss loss_kind = ClassifierLoss::bce;
  double eta = 0.5;  // class prior for the PU loss
  int batch_size = 256;
  double lr = 1e-4;
  int steps = 4000;
  std::uint64_t seed = 0;
  std::vector<int> hidden = {64, 64};
};

struct ClassifierLossResult {
  double loss = 0.0;
  MlpParams grads;
};

// ORIL objective: positives labeled 1, unlabeled labeled 0, the two class
// means weighted equally.
ClassifierLossResult bce_loss(const RewardClassifier& clf, const Mat& positives, const Mat& unlabeled);

// Non-negative PU risk with BCE as the surrogate loss:
//   eta * E_P[l(g,1)] + max(0, E_U[l(g,0)] - eta * E_P[l(g,0)]).
// Gradients skip the second term while the clamp is active.
ClassifierLossResult pu_loss(const RewardClassifier& clf, const Mat& positives, const Mat& unlabeled,
                             double eta);

RewardClassifier train_classifier(const SuccessSet& success, const TrajectoryDataset& data,
                                  const Env& env, const ClassifierTrainConfig& cfg,
                                  const StepCallback& on_log = nullptr);

// Dataset plus per-transition synthetic rewards r_hat[traj][t] = r(s_{t+1}).
struct LabeledDataset {
  const TrajectoryDataset* data = nullptr;
  std::vector<Vec> rewards;
};

// Annotates every transition with the classifier reward of its next state;
// the original dataset is not modified.
LabeledDataset relabel_rewards(const RewardClassifier& clf, const TrajectoryDataset& data,
                               const Env& env);

// Monte-Carlo behavior-Q: Q_hat(s_t, a_t) regressed onto the empirical
// discounted return of the relabeled rewards along each trajectory.
struct McCritic {
  Mlp net;  // (encoded s, encoded a) -> Q_hat

  double value(const Env& env, const Vec& state, const Vec& action) const;
};

struct McCriticTrainConfig {
  int batch_size = 256;
  double lr = 3e-4;
  int steps = 6000;
  std::uint64_t seed = 0;
  std::vector<int> hidden = {64, 64};
};

// Discounted-return targets per trajectory, computed by a backward pass.
std::vector<Vec> mc_targets(const LabeledDataset& labeled, double gamma);

McCritic train_mc_critic(const LabeledDataset& labeled, const Env& env, double gamma,
                         const McCriticTrainConfig& cfg, const StepCallback& on_log = nullptr);

// Adapter so the MC critic can drive the shared policy-extraction objective.
class McActionValue : public ActionValue {
 public:
  McActionValue(const McCritic& critic, const Env& env);
  bool log_domain() const override { return false; }
  void score(const Mat& states, const Mat& actions, Rng& rng, Vec& values,
             Mat& dvalue_daction) const override;

 private:
  const McCritic& critic_;
  const Env& env_;
};

enum class BaselineKind { oril, purl };

struct BaselineConfig {
  BaselineKind kind = BaselineKind::oril;
  ClassifierTrainConfig classifier;
  McCriticTrainConfig mc_critic;
  PolicyTrainConfig policy;
  double gamma = 0.95;
};

// Full pipeline: train classifier -> relabel -> MC critic -> policy
// extraction with the shared lambda-BC objective (Q_hat in place of e^f).
GaussianPolicy train_baseline_policy(const TrajectoryDataset& data, const SuccessSet& success,
                                     const Env& env, const BaselineConfig& cfg,
                                     const PolicyEvalCallback& on_log = nullptr);

}  // namespace laeo
