#include "laeo/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace laeo {

namespace {
constexpr double kLogTwoPi = 1.8378770664093454836;  // log(2*pi)
constexpr double kAtanhClip = 1.0 - 1e-9;

double clip(double x, double lo, double hi) { return x < lo ? lo : (x > hi ? hi : x); }
}  // namespace

void GaussianPolicy::head(const Mat& S, Mat& mu, Mat& log_std) const {
  const Mat out = net.forward(S);
  mu = out.leftCols(action_dim);
  log_std = out.rightCols(action_dim).cwiseMax(log_std_min).cwiseMin(log_std_max);
}

Vec GaussianPolicy::mean_action(const Vec& state) const {
  Mat mu, ls;
  head(state.transpose(), mu, ls);
  Vec a(action_dim);
  const Vec c = center(), h = half_width();
  for (int j = 0; j < action_dim; ++j)
    a[j] = squash ? c[j] + h[j] * std::tanh(mu(0, j)) : mu(0, j);
  return a;
}

Vec GaussianPolicy::sample_action(const Vec& state, Rng& rng) const {
  Mat mu, ls;
  head(state.transpose(), mu, ls);
  Vec a(action_dim);
  const Vec c = center(), h = half_width();
  for (int j = 0; j < action_dim; ++j) {
    const double u = mu(0, j) + std::exp(ls(0, j)) * rng.normal();
    a[j] = squash ? c[j] + h[j] * std::tanh(u) : u;
    a[j] = clip(a[j], act_low[j], act_high[j]);
  }
  return a;
}

double GaussianPolicy::log_prob(const Vec& state, const Vec& action) const {
  for (int j = 0; j < action_dim; ++j)
    if (action[j] < act_low[j] - 1e-9 || action[j] > act_high[j] + 1e-9)
      throw std::invalid_argument("log_prob: action outside the action box");
  Mat mu, ls;
  head(state.transpose(), mu, ls);
  const Vec c = center(), h = half_width();
  double lp = 0.0;
  for (int j = 0; j < action_dim; ++j) {
    double u = action[j];
    double correction = 0.0;
    if (squash) {
      const double y = clip((action[j] - c[j]) / h[j], -kAtanhClip, kAtanhClip);
      u = std::atanh(y);
      correction = std::log(h[j] * (1.0 - y * y));
    }
    const double sigma = std::exp(ls(0, j));
    const double z = (u - mu(0, j)) / sigma;
    lp += -0.5 * z * z - ls(0, j) - 0.5 * kLogTwoPi - correction;
  }
  return lp;
}

LaeoActionValue::LaeoActionValue(const ContrastiveCritic& critic, const Env& env,
                                 const SuccessSet& success)
    : critic_(critic), env_(env) {
  if (env.discrete_actions())
    throw std::invalid_argument("LaeoActionValue: continuous action space required");
  success.validate(env.state_dim());
  success_states_ = Mat(static_cast<long>(success.states.size()), env.encoded_state_dim());
  for (size_t i = 0; i < success.states.size(); ++i)
    success_states_.row(static_cast<long>(i)) = env.encode_state(success.states[i]);
  // E_{s_f}[f(s, a, s_f)] is linear in the example embedding, so the mean
  // embedding evaluates the expectation over success examples exactly.
  mean_psi_ = critic.psi.forward(success_states_).colwise().mean();
}

void LaeoActionValue::score(const Mat& states, const Mat& actions, Rng& rng, Vec& values,
                            Mat& dvalue_daction) const {
  const long B = states.rows();
  const int sd = env_.encoded_state_dim();
  const int ad = env_.encoded_action_dim();
  Mat SA(B, sd + ad);
  for (long i = 0; i < B; ++i) {
    SA.row(i).head(sd) = env_.encode_state(states.row(i).transpose());
    SA.row(i).tail(ad) = env_.encode_action(actions.row(i).transpose());
  }
  (void)rng;
  const Mat Q = mean_psi_.transpose().replicate(B, 1);

  Mlp::Cache cache;
  const Mat P = critic_.phi.forward(SA, cache);
  values = P * mean_psi_;
  if (!values.allFinite()) throw std::runtime_error("LaeoActionValue: non-finite f values");
  MlpParams scratch = critic_.phi.zero_like();
  const Mat dSA = critic_.phi.backward(cache, Q, scratch);  // d f_i / d SA_i
  // Chain rule through the action encoding back to raw action coordinates.
  dvalue_daction = dSA.rightCols(ad).array().rowwise() *
                   env_.action_encode_scale().transpose().array();
}

PolicyLossResult policy_loss(const GaussianPolicy& policy, const ActionValue* qfn, const Mat& states,
                             const Mat& data_actions, const Mat& eps, double lambda,
                             PolicyObjective mode, Rng& rng) {
  if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("policy_loss: lambda in [0,1]");
  if (lambda < 1.0 && qfn == nullptr)
    throw std::invalid_argument("policy_loss: critic term requested but no critic given");
  const long B = states.rows();
  const int A = policy.action_dim;

  Mlp::Cache cache;
  const Mat out = policy.net.forward(states, cache);
  const Mat mu = out.leftCols(A);
  const Mat raw = out.rightCols(A);
  Mat log_std = raw.cwiseMax(policy.log_std_min).cwiseMin(policy.log_std_max);
  const Mat clamp_mask =
      ((raw.array() > policy.log_std_min) && (raw.array() < policy.log_std_max)).cast<double>();
  const Mat sigma = log_std.array().exp();
  const Vec c = policy.center(), h = policy.half_width();

  double loss = 0.0;
  Mat dout = Mat::Zero(B, 2 * A);  // [d/dmu | d/draw]

  // Behavioral-cloning term: -lambda * mean log pi(a_data | s).
  if (lambda > 0.0) {
    double bc = 0.0;
    for (long i = 0; i < B; ++i) {
      for (int j = 0; j < A; ++j) {
        double u = data_actions(i, j);
        double correction = 0.0;
        if (policy.squash) {
          const double y = clip((data_actions(i, j) - c[j]) / h[j], -kAtanhClip, kAtanhClip);
          u = std::atanh(y);
          correction = std::log(h[j] * (1.0 - y * y));
        }
        const double z = (u - mu(i, j)) / sigma(i, j);
        bc += -0.5 * z * z - log_std(i, j) - 0.5 * kLogTwoPi - correction;
        const double scale = lambda / static_cast<double>(B);
        dout(i, j) += -scale * z / sigma(i, j);
        dout(i, A + j) += -scale * (z * z - 1.0) * clamp_mask(i, j);
      }
    }
    loss += lambda * (-bc / static_cast<double>(B));
  }

  // Critic term with reparameterized actions.
  if (lambda < 1.0) {
    Mat actions(B, A);
    Mat tanh_u(B, A);
    for (long i = 0; i < B; ++i) {
      for (int j = 0; j < A; ++j) {
        const double u = mu(i, j) + sigma(i, j) * eps(i, j);
        const double t = std::tanh(u);
        tanh_u(i, j) = t;
        actions(i, j) = policy.squash ? c[j] + h[j] * t : u;
      }
    }
    Vec val;
    Mat dA;
    qfn->score(states, actions, rng, val, dA);
    if (!val.allFinite()) throw std::runtime_error("policy_loss: non-finite critic values");

    // Normalize the critic term by the mean action-gradient magnitude of the
    // critic at the data actions. This keeps the two loss terms on comparable
    // scales regardless of the critic's units, so one lambda works across
    // envs. The normalizer depends only on the batch (not on policy
    // parameters), so the objective stays exactly differentiable.
    double grad_scale = 1.0;
    {
      Vec val_data;
      Mat dA_data;
      qfn->score(states, data_actions, rng, val_data, dA_data);
      const double mean_norm = dA_data.rowwise().norm().mean();
      grad_scale = 1.0 / (mean_norm * policy.half_width().norm() + 1e-8);
    }

    double term;           // value of the critic objective (to be maximized)
    Vec w(B);              // d term / d val_i
    const double invB = 1.0 / static_cast<double>(B);
    if (qfn->log_domain()) {
      switch (mode) {
        case PolicyObjective::exp_mean: {
          term = 0.0;
          for (long i = 0; i < B; ++i) {
            const double e = std::exp(val[i]);
            if (!std::isfinite(e)) throw std::runtime_error("policy_loss: exp(f) overflow");
            term += invB * e;
            w[i] = invB * e;
          }
          break;
        }
        case PolicyObjective::jensen_mean_f:
          term = val.mean();
          w.setConstant(invB);
          break;
        case PolicyObjective::log_mean_exp: {
          const double mx = val.maxCoeff();
          double acc = 0.0;
          for (long i = 0; i < B; ++i) acc += std::exp(val[i] - mx);
          term = mx + std::log(acc * invB);
          for (long i = 0; i < B; ++i) w[i] = std::exp(val[i] - mx) / acc;
          break;
        }
      }
    } else {
      switch (mode) {
        case PolicyObjective::exp_mean:
          term = val.mean();
          w.setConstant(invB);
          break;
        case PolicyObjective::jensen_mean_f: {
          term = 0.0;
          for (long i = 0; i < B; ++i) {
            if (val[i] <= 0.0)
              throw std::runtime_error("policy_loss: log of nonpositive critic value");
            term += invB * std::log(val[i]);
            w[i] = invB / val[i];
          }
          break;
        }
        case PolicyObjective::log_mean_exp: {
          const double s = val.sum();
          if (s <= 0.0) throw std::runtime_error("policy_loss: log of nonpositive critic mean");
          term = std::log(s * invB);
          for (long i = 0; i < B; ++i) w[i] = 1.0 / s;
          break;
        }
      }
    }
    loss += (1.0 - lambda) * (-term * grad_scale);
    for (long i = 0; i < B; ++i) {
      for (int j = 0; j < A; ++j) {
        const double da_du = policy.squash ? h[j] * (1.0 - tanh_u(i, j) * tanh_u(i, j)) : 1.0;
        const double g = -(1.0 - lambda) * grad_scale * w[i] * dA(i, j) * da_du;
        dout(i, j) += g;
        dout(i, A + j) += g * sigma(i, j) * eps(i, j) * clamp_mask(i, j);
      }
    }
  }

  PolicyLossResult res;
  res.loss = loss;
  res.grads = policy.net.zero_like();
  policy.net.backward(cache, dout, res.grads);
  return res;
}

GaussianPolicy make_policy(const Env& env, const std::vector<int>& hidden, std::uint64_t seed) {
  GaussianPolicy pol;
  pol.action_dim = env.action_dim();
  pol.act_low = env.action_low();
  pol.act_high = env.action_high();
  std::vector<int> sizes = {env.state_dim()};
  for (int hdim : hidden) sizes.push_back(hdim);
  sizes.push_back(2 * pol.action_dim);
  pol.net = Mlp(sizes);
  Rng rng(seed);
  pol.net.init(rng);
  return pol;
}

GaussianPolicy train_policy(const TrajectoryDataset& data, const ActionValue* qfn, const Env& env,
                            const PolicyTrainConfig& cfg, const PolicyEvalCallback& on_log) {
  data.validate();
  if (cfg.lambda < 0.0 || cfg.lambda > 1.0) throw std::invalid_argument("train_policy: lambda");
  if (cfg.lambda < 1.0 && qfn == nullptr)
    throw std::invalid_argument("train_policy: critic required for lambda < 1");

  Rng root(cfg.seed);
  Rng init_rng = root.split(1);
  GaussianPolicy pol = make_policy(env, cfg.hidden, init_rng.seed());
  Rng batch_rng = root.split(2);
  Rng eps_rng = root.split(3);
  Rng star_rng = root.split(4);

  AdamState adam;
  adam.lr = cfg.lr;
  adam.init(pol.net.params());

  const long n_traj = static_cast<long>(data.trajectories.size());
  const int A = pol.action_dim;
  for (int step = 1; step <= cfg.steps; ++step) {
    Mat S(cfg.batch_size, env.state_dim());
    Mat Ad(cfg.batch_size, A);
    for (int i = 0; i < cfg.batch_size; ++i) {
      const Trajectory& traj = data.trajectories[batch_rng.uniform_int(n_traj)];
      const int t = static_cast<int>(batch_rng.uniform_int(traj.length()));
      S.row(i) = traj.states[t];
      Ad.row(i) = traj.actions[t];
    }
    Mat eps(cfg.batch_size, A);
    for (int i = 0; i < cfg.batch_size; ++i)
      for (int j = 0; j < A; ++j) eps(i, j) = eps_rng.normal();

    PolicyLossResult res = policy_loss(pol, qfn, S, Ad, eps, cfg.lambda, cfg.mode, star_rng);
    if (!std::isfinite(res.loss))
      throw std::runtime_error("train_policy: diverged (non-finite loss) at step " +
                               std::to_string(step));
    adam.update(pol.net.params(), res.grads);
    if (on_log && (step % cfg.eval_every == 0 || step == 1 || step == cfg.steps))
      on_log(step, res.loss, pol);
  }
  return pol;
}

GaussianPolicy bc_baseline(const TrajectoryDataset& data, const Env& env, const PolicyTrainConfig& cfg,
                           const PolicyEvalCallback& on_log) {
  PolicyTrainConfig bc_cfg = cfg;
  bc_cfg.lambda = 1.0;
  return train_policy(data, nullptr, env, bc_cfg, on_log);
}

double evaluate_policy(const Env& env, const GaussianPolicy& policy, int episodes, std::uint64_t seed) {
  if (episodes <= 0) throw std::invalid_argument("evaluate_policy: episodes");
  Rng root(seed);
  int successes = 0;
  for (int e = 0; e < episodes; ++e) {
    Rng rng = root.split(static_cast<std::uint64_t>(e));
    Vec s = env.reset(rng);
    bool ok = env.is_success(s);
    for (int t = 0; t < env.horizon() && !ok; ++t) {
      auto [next, success] = env.step(s, policy.mean_action(s), rng);
      ok = success;
      s = std::move(next);
    }
    if (ok) ++successes;
  }
  return static_cast<double>(successes) / static_cast<double>(episodes);
}

}  // namespace laeo
