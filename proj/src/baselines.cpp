#include "laeo/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace laeo {

namespace {
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }
}  // namespace

Vec RewardClassifier::logits(const Mat& states) const { return net.forward(states).col(0); }

double RewardClassifier::reward(const Vec& state) const {
  return sigmoid(net.forward(state.transpose())(0, 0));
}

ClassifierLossResult bce_loss(const RewardClassifier& clf, const Mat& positives, const Mat& unlabeled) {
  if (positives.rows() == 0 || unlabeled.rows() == 0)
    throw std::invalid_argument("bce_loss: both sets must be nonempty");
  Mlp::Cache cp, cu;
  const Vec gp = clf.net.forward(positives, cp).col(0);
  const Vec gu = clf.net.forward(unlabeled, cu).col(0);
  if (!gp.allFinite() || !gu.allFinite()) throw std::runtime_error("bce_loss: non-finite logits");

  const double nP = static_cast<double>(gp.size());
  const double nU = static_cast<double>(gu.size());
  ClassifierLossResult res;
  // Class means weighted equally; positive sets can be tiny.
  for (long i = 0; i < gp.size(); ++i) res.loss += 0.5 * softplus(-gp[i]) / nP;
  for (long i = 0; i < gu.size(); ++i) res.loss += 0.5 * softplus(gu[i]) / nU;

  Mat dp(gp.size(), 1), du(gu.size(), 1);
  for (long i = 0; i < gp.size(); ++i) dp(i, 0) = -0.5 * (1.0 - sigmoid(gp[i])) / nP;
  for (long i = 0; i < gu.size(); ++i) du(i, 0) = 0.5 * sigmoid(gu[i]) / nU;
  res.grads = clf.net.zero_like();
  clf.net.backward(cp, dp, res.grads);
  clf.net.backward(cu, du, res.grads);
  return res;
}

ClassifierLossResult pu_loss(const RewardClassifier& clf, const Mat& positives, const Mat& unlabeled,
                             double eta) {
  if (eta <= 0.0 || eta >= 1.0) throw std::invalid_argument("pu_loss: eta in (0,1)");
  if (positives.rows() == 0 || unlabeled.rows() == 0)
    throw std::invalid_argument("pu_loss: both sets must be nonempty");
  Mlp::Cache cp, cu;
  const Vec gp = clf.net.forward(positives, cp).col(0);
  const Vec gu = clf.net.forward(unlabeled, cu).col(0);
  if (!gp.allFinite() || !gu.allFinite()) throw std::runtime_error("pu_loss: non-finite logits");

  const double nP = static_cast<double>(gp.size());
  const double nU = static_cast<double>(gu.size());
  double pos_risk = 0.0, pos_neg_risk = 0.0, unl_risk = 0.0;
  for (long i = 0; i < gp.size(); ++i) {
    pos_risk += softplus(-gp[i]) / nP;     // l(g, 1) on positives
    pos_neg_risk += softplus(gp[i]) / nP;  // l(g, 0) on positives
  }
  for (long i = 0; i < gu.size(); ++i) unl_risk += softplus(gu[i]) / nU;

  const double correction = unl_risk - eta * pos_neg_risk;
  const bool clamped = correction <= 0.0;

  ClassifierLossResult res;
  res.loss = eta * pos_risk + (clamped ? 0.0 : correction);
  res.grads = clf.net.zero_like();
  Mat dp(gp.size(), 1), du = Mat::Zero(gu.size(), 1);
  for (long i = 0; i < gp.size(); ++i) {
    dp(i, 0) = -eta * (1.0 - sigmoid(gp[i])) / nP;
    if (!clamped) dp(i, 0) += -eta * sigmoid(gp[i]) / nP;
  }
  if (!clamped)
    for (long i = 0; i < gu.size(); ++i) du(i, 0) = sigmoid(gu[i]) / nU;
  clf.net.backward(cp, dp, res.grads);
  if (!clamped) clf.net.backward(cu, du, res.grads);
  return res;
}

namespace {

Mat encode_success(const SuccessSet& success, const Env& env) {
  Mat P(static_cast<long>(success.states.size()), env.encoded_state_dim());
  for (size_t i = 0; i < success.states.size(); ++i)
    P.row(static_cast<long>(i)) = env.encode_state(success.states[i]);
  return P;
}

}  // namespace

RewardClassifier train_classifier(const SuccessSet& success, const TrajectoryDataset& data,
                                  const Env& env, const ClassifierTrainConfig& cfg,
                                  const StepCallback& on_log) {
  data.validate();
  success.validate(data.state_dim());
  RewardClassifier clf;
  std::vector<int> sizes = {env.encoded_state_dim()};
  for (int h : cfg.hidden) sizes.push_back(h);
  sizes.push_back(1);
  clf.net = Mlp(sizes);
  Rng root(cfg.seed);
  Rng init_rng = root.split(1);
  clf.net.init(init_rng);
  Rng batch_rng = root.split(2);

  const Mat all_pos = encode_success(success, env);
  AdamState adam;
  adam.lr = cfg.lr;
  adam.init(clf.net.params());

  const long n_traj = static_cast<long>(data.trajectories.size());
  const int half = std::max(1, cfg.batch_size / 2);
  for (int step = 1; step <= cfg.steps; ++step) {
    Mat P(half, all_pos.cols());
    for (int i = 0; i < half; ++i) P.row(i) = all_pos.row(batch_rng.uniform_int(all_pos.rows()));
    Mat U(half, all_pos.cols());
    for (int i = 0; i < half; ++i) {
      const Trajectory& traj = data.trajectories[batch_rng.uniform_int(n_traj)];
      const long idx = batch_rng.uniform_int(static_cast<long>(traj.states.size()));
      U.row(i) = env.encode_state(traj.states[idx]);
    }
    ClassifierLossResult res = cfg.loss_kind == ClassifierLoss::bce
                                   ? bce_loss(clf, P, U)
                                   : pu_loss(clf, P, U, cfg.eta);
    if (!std::isfinite(res.loss))
      throw std::runtime_error("train_classifier: diverged at step " + std::to_string(step));
    adam.update(clf.net.params(), res.grads);
    if (on_log && (step % 500 == 0 || step == 1 || step == cfg.steps)) on_log(step, res.loss);
  }
  return clf;
}

LabeledDataset relabel_rewards(const RewardClassifier& clf, const TrajectoryDataset& data,
                               const Env& env) {
  LabeledDataset out;
  out.data = &data;
  out.rewards.reserve(data.trajectories.size());
  for (const auto& traj : data.trajectories) {
    const int T = traj.length();
    Mat S(T, env.encoded_state_dim());
    for (int t = 0; t < T; ++t) S.row(t) = env.encode_state(traj.states[t + 1]);
    const Vec g = clf.logits(S);
    Vec r(T);
    for (int t = 0; t < T; ++t) r[t] = sigmoid(g[t]);
    out.rewards.push_back(std::move(r));
  }
  return out;
}

double McCritic::value(const Env& env, const Vec& state, const Vec& action) const {
  Vec sa(env.encoded_state_dim() + env.encoded_action_dim());
  sa << env.encode_state(state), env.encode_action(action);
  return net.forward(sa.transpose())(0, 0);
}

std::vector<Vec> mc_targets(const LabeledDataset& labeled, double gamma) {
  if (labeled.data == nullptr) throw std::invalid_argument("mc_targets: no dataset");
  std::vector<Vec> targets;
  targets.reserve(labeled.rewards.size());
  for (const auto& r : labeled.rewards) {
    Vec g(r.size());
    double acc = 0.0;
    for (long t = r.size() - 1; t >= 0; --t) {
      acc = r[t] + gamma * acc;
      g[t] = acc;
    }
    targets.push_back(std::move(g));
  }
  return targets;
}

McCritic train_mc_critic(const LabeledDataset& labeled, const Env& env, double gamma,
                         const McCriticTrainConfig& cfg, const StepCallback& on_log) {
  const TrajectoryDataset& data = *labeled.data;
  const std::vector<Vec> targets = mc_targets(labeled, gamma);

  McCritic critic;
  std::vector<int> sizes = {env.encoded_state_dim() + env.encoded_action_dim()};
  for (int h : cfg.hidden) sizes.push_back(h);
  sizes.push_back(1);
  critic.net = Mlp(sizes);
  Rng root(cfg.seed);
  Rng init_rng = root.split(1);
  critic.net.init(init_rng);
  Rng batch_rng = root.split(2);

  AdamState adam;
  adam.lr = cfg.lr;
  adam.init(critic.net.params());

  const long n_traj = static_cast<long>(data.trajectories.size());
  const int sd = env.encoded_state_dim();
  const int ad = env.encoded_action_dim();
  for (int step = 1; step <= cfg.steps; ++step) {
    Mat SA(cfg.batch_size, sd + ad);
    Vec G(cfg.batch_size);
    for (int i = 0; i < cfg.batch_size; ++i) {
      const long ti = batch_rng.uniform_int(n_traj);
      const Trajectory& traj = data.trajectories[ti];
      const int t = static_cast<int>(batch_rng.uniform_int(traj.length()));
      SA.row(i).head(sd) = env.encode_state(traj.states[t]);
      SA.row(i).tail(ad) = env.encode_action(traj.actions[t]);
      G[i] = targets[ti][t];
    }
    Mlp::Cache cache;
    const Vec q = critic.net.forward(SA, cache).col(0);
    const Vec err = q - G;
    const double loss = err.squaredNorm() / static_cast<double>(cfg.batch_size);
    if (!std::isfinite(loss))
      throw std::runtime_error("train_mc_critic: diverged at step " + std::to_string(step));
    MlpParams grads = critic.net.zero_like();
    Mat dq = (2.0 / static_cast<double>(cfg.batch_size)) * err;
    critic.net.backward(cache, dq, grads);
    adam.update(critic.net.params(), grads);
    if (on_log && (step % 500 == 0 || step == 1 || step == cfg.steps)) on_log(step, loss);
  }
  return critic;
}

McActionValue::McActionValue(const McCritic& critic, const Env& env)
    : critic_(critic), env_(env) {
  if (env.discrete_actions())
    throw std::invalid_argument("McActionValue: continuous action space required");
}

void McActionValue::score(const Mat& states, const Mat& actions, Rng& /*rng*/, Vec& values,
                          Mat& dvalue_daction) const {
  const long B = states.rows();
  const int sd = env_.encoded_state_dim();
  const int ad = env_.encoded_action_dim();
  Mat SA(B, sd + ad);
  for (long i = 0; i < B; ++i) {
    SA.row(i).head(sd) = env_.encode_state(states.row(i).transpose());
    SA.row(i).tail(ad) = env_.encode_action(actions.row(i).transpose());
  }
  Mlp::Cache cache;
  values = critic_.net.forward(SA, cache).col(0);
  if (!values.allFinite()) throw std::runtime_error("McActionValue: non-finite values");
  MlpParams scratch = critic_.net.zero_like();
  const Mat dSA = critic_.net.backward(cache, Mat::Ones(B, 1), scratch);
  // Chain rule through the action encoding back to raw action coordinates.
  dvalue_daction = dSA.rightCols(ad).array().rowwise() *
                   env_.action_encode_scale().transpose().array();
}

GaussianPolicy train_baseline_policy(const TrajectoryDataset& data, const SuccessSet& success,
                                     const Env& env, const BaselineConfig& cfg,
                                     const PolicyEvalCallback& on_log) {
  ClassifierTrainConfig clf_cfg = cfg.classifier;
  clf_cfg.loss_kind = cfg.kind == BaselineKind::oril ? ClassifierLoss::bce : ClassifierLoss::pu;
  const RewardClassifier clf = train_classifier(success, data, env, clf_cfg);
  const LabeledDataset labeled = relabel_rewards(clf, data, env);
  const McCritic mc = train_mc_critic(labeled, env, cfg.gamma, cfg.mc_critic);
  McActionValue qfn(mc, env);
  PolicyTrainConfig pol_cfg = cfg.policy;
  pol_cfg.mode = PolicyObjective::exp_mean;  // Q_hat enters the objective linearly
  return train_policy(data, &qfn, env, pol_cfg, on_log);
}

}  // namespace laeo
