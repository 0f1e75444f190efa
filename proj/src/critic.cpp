#include "laeo/critic.hpp"

#include <cmath>
#include <stdexcept>

namespace laeo {

namespace {
// log(sigmoid(x)) and log(1 - sigmoid(x)) without overflow.
double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }
double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }
}  // namespace

double ContrastiveCritic::f_value(const Vec& state_action, const Vec& future) const {
  const Vec p = phi.forward(state_action.transpose()).row(0);
  const Vec q = psi.forward(future.transpose()).row(0);
  return p.dot(q);
}

Vec ContrastiveCritic::f_batch(const Mat& SA, const Mat& SF) const {
  if (SA.rows() != SF.rows()) throw std::invalid_argument("f_batch: row count mismatch");
  const Mat P = phi.forward(SA);
  const Mat Q = psi.forward(SF);
  return (P.array() * Q.array()).rowwise().sum();
}

NceLoss nce_loss(const ContrastiveCritic& critic, const Mat& SA_pos, const Mat& SF_pos,
                 const Mat& SA_neg, const Mat& SF_neg) {
  const long B = SA_pos.rows();
  const long N = SA_neg.rows();
  if (B == 0 || N == 0) throw std::invalid_argument("nce_loss: empty batch");

  Mlp::Cache cp_pos, cq_pos, cp_neg, cq_neg;
  const Mat Pp = critic.phi.forward(SA_pos, cp_pos);
  const Mat Qp = critic.psi.forward(SF_pos, cq_pos);
  const Mat Pn = critic.phi.forward(SA_neg, cp_neg);
  const Mat Qn = critic.psi.forward(SF_neg, cq_neg);
  const Vec f_pos = (Pp.array() * Qp.array()).rowwise().sum();
  const Vec f_neg = (Pn.array() * Qn.array()).rowwise().sum();
  if (!f_pos.allFinite() || !f_neg.allFinite())
    throw std::runtime_error("nce_loss: non-finite activations");

  NceLoss out;
  for (long i = 0; i < B; ++i) out.loss -= log_sigmoid(f_pos[i]) / static_cast<double>(B);
  for (long j = 0; j < N; ++j) out.loss -= log_sigmoid(-f_neg[j]) / static_cast<double>(N);

  // dL/df+ = -(1 - sigma(f+)) / B, dL/df- = sigma(f-) / N.
  Vec df_pos(B), df_neg(N);
  for (long i = 0; i < B; ++i) df_pos[i] = -(1.0 - sigmoid(f_pos[i])) / static_cast<double>(B);
  for (long j = 0; j < N; ++j) df_neg[j] = sigmoid(f_neg[j]) / static_cast<double>(N);

  out.grad_phi = critic.phi.zero_like();
  out.grad_psi = critic.psi.zero_like();
  critic.phi.backward(cp_pos, df_pos.asDiagonal() * Qp, out.grad_phi);
  critic.psi.backward(cq_pos, df_pos.asDiagonal() * Pp, out.grad_psi);
  critic.phi.backward(cp_neg, df_neg.asDiagonal() * Qn, out.grad_phi);
  critic.psi.backward(cq_neg, df_neg.asDiagonal() * Pn, out.grad_psi);
  return out;
}

namespace {

Mat encode_states(const Env& env, const std::vector<Vec>& states) {
  Mat out(static_cast<long>(states.size()), env.encoded_state_dim());
  for (size_t i = 0; i < states.size(); ++i) out.row(static_cast<long>(i)) = env.encode_state(states[i]);
  return out;
}

Mat encode_state_actions(const Env& env, const std::vector<Vec>& states, const std::vector<Vec>& actions) {
  const int sd = env.encoded_state_dim();
  const int ad = env.encoded_action_dim();
  Mat out(static_cast<long>(states.size()), sd + ad);
  for (size_t i = 0; i < states.size(); ++i) {
    out.row(static_cast<long>(i)).head(sd) = env.encode_state(states[i]);
    out.row(static_cast<long>(i)).tail(ad) = env.encode_action(actions[i]);
  }
  return out;
}

}  // namespace

ContrastiveCritic train_critic(const TrajectoryDataset& data, const Env& env,
                               const CriticTrainConfig& cfg, const StepCallback& on_log) {
  data.validate();
  if (cfg.steps < 1 || cfg.batch_size < 2) throw std::invalid_argument("train_critic: bad config");
  if (cfg.gamma <= 0.0 || cfg.gamma >= 1.0) throw std::invalid_argument("train_critic: gamma");

  ContrastiveCritic critic;
  critic.rep_dim = cfg.rep_dim;
  std::vector<int> phi_sizes = {env.encoded_state_dim() + env.encoded_action_dim()};
  std::vector<int> psi_sizes = {env.encoded_state_dim()};
  for (int h : cfg.hidden) {
    phi_sizes.push_back(h);
    psi_sizes.push_back(h);
  }
  phi_sizes.push_back(cfg.rep_dim);
  psi_sizes.push_back(cfg.rep_dim);
  critic.phi = Mlp(phi_sizes);
  critic.psi = Mlp(psi_sizes);

  Rng rng(cfg.seed);
  Rng init_rng = rng.split(1);
  critic.phi.init(init_rng);
  critic.psi.init(init_rng);
  Rng batch_rng = rng.split(2);

  AdamState adam_phi, adam_psi;
  adam_phi.lr = cfg.lr;
  adam_psi.lr = cfg.lr;
  adam_phi.init(critic.phi.params());
  adam_psi.init(critic.psi.params());

  const int K = cfg.negatives_per_anchor;
  for (int step = 1; step <= cfg.steps; ++step) {
    ContrastiveBatch batch = sample_batch(data, cfg.batch_size, K, cfg.gamma, batch_rng);
    const Mat SA = encode_state_actions(env, batch.anchor_states, batch.anchor_actions);
    const Mat SF_pos = encode_states(env, batch.positives);
    Mat SA_neg(static_cast<long>(batch.anchor_states.size()) * K, SA.cols());
    Mat SF_neg(SA_neg.rows(), SF_pos.cols());
    long r = 0;
    for (size_t i = 0; i < batch.negatives.size(); ++i) {
      for (int k = 0; k < K; ++k, ++r) {
        SA_neg.row(r) = SA.row(static_cast<long>(i));
        SF_neg.row(r) = env.encode_state(batch.negatives[i][k]);
      }
    }
    NceLoss res = nce_loss(critic, SA, SF_pos, SA_neg, SF_neg);
    if (!std::isfinite(res.loss))
      throw std::runtime_error("train_critic: diverged (non-finite loss) at step " +
                               std::to_string(step));
    adam_phi.update(critic.phi.params(), res.grad_phi);
    adam_psi.update(critic.psi.params(), res.grad_psi);
    if (on_log && (step % cfg.eval_every == 0 || step == 1 || step == cfg.steps))
      on_log(step, res.loss);
  }
  return critic;
}

double estimate_q(const ContrastiveCritic& critic, const Env& env, const Vec& state, const Vec& action,
                  const SuccessSet& success, double gamma) {
  if (success.states.empty()) throw std::invalid_argument("estimate_q: empty success set");
  Vec sa(env.encoded_state_dim() + env.encoded_action_dim());
  sa.head(env.encoded_state_dim()) = env.encode_state(state);
  sa.tail(env.encoded_action_dim()) = env.encode_action(action);
  Mat SA(static_cast<long>(success.states.size()), sa.size());
  Mat SF(SA.rows(), env.encoded_state_dim());
  for (size_t i = 0; i < success.states.size(); ++i) {
    SA.row(static_cast<long>(i)) = sa;
    SF.row(static_cast<long>(i)) = env.encode_state(success.states[i]);
  }
  const Vec f = critic.f_batch(SA, SF);
  const double mx = f.maxCoeff();
  double acc = 0.0;
  for (long i = 0; i < f.size(); ++i) acc += std::exp(f[i] - mx);
  const double log_q = mx + std::log(acc) - std::log(static_cast<double>(f.size())) - std::log1p(-gamma);
  if (log_q > 700.0) throw std::overflow_error("estimate_q: overflow after log-sum-exp guard");
  return std::exp(log_q);
}

TripleWeights nce_triple_weights(const TrajectoryDataset& data, int n_states, int n_actions,
                                 double gamma) {
  TripleWeights w;
  w.pos.assign(n_actions, Mat::Zero(n_states, n_states));
  w.anchor_weight = Mat::Zero(n_states, n_actions);
  w.p_tau = Vec::Zero(n_states);

  double anchor_total = 0.0;
  double state_total = 0.0;
  for (const auto& traj : data.trajectories) {
    const int T = traj.length();
    for (const auto& sv : traj.states) {
      w.p_tau[static_cast<int>(sv[0])] += 1.0;
      state_total += 1.0;
    }
    for (int t = 0; t < T; ++t) {
      const int s = static_cast<int>(traj.states[t][0]);
      const int a = static_cast<int>(traj.actions[t][0]);
      w.anchor_weight(s, a) += 1.0;
      anchor_total += 1.0;
      // Exact truncated-geometric positive distribution over the suffix.
      const int L = T - t;
      const double z = (1.0 - std::pow(gamma, static_cast<double>(L + 1))) / (1.0 - gamma);
      double g = 1.0;
      for (int k = 0; k <= L; ++k) {
        w.pos[a](s, static_cast<int>(traj.states[t + k][0])) += g / z;
        g *= gamma;
      }
    }
  }
  if (anchor_total <= 0.0) throw std::invalid_argument("nce_triple_weights: empty dataset");
  for (auto& m : w.pos) m /= anchor_total;
  w.anchor_weight /= anchor_total;
  w.p_tau /= state_total;
  return w;
}

std::vector<Mat> train_tabular_nce(const TripleWeights& w, int steps, double lr) {
  const int A = static_cast<int>(w.pos.size());
  const int S = static_cast<int>(w.p_tau.size());
  std::vector<Mat> f(A, Mat::Zero(S, S));
  // Flatten the table into one parameter vector so Adam can drive it.
  MlpParams params;
  for (int a = 0; a < A; ++a) params.W.push_back(f[a]);
  AdamState adam;
  adam.lr = lr;
  adam.init(params);
  for (int step = 0; step < steps; ++step) {
    MlpParams grads;
    for (int a = 0; a < A; ++a) {
      Mat g(S, S);
      for (int s = 0; s < S; ++s) {
        for (int sp = 0; sp < S; ++sp) {
          const double sig = sigmoid(params.W[a](s, sp));
          const double wneg = w.anchor_weight(s, a) * w.p_tau[sp];
          g(s, sp) = -w.pos[a](s, sp) * (1.0 - sig) + wneg * sig;
        }
      }
      grads.W.push_back(std::move(g));
    }
    adam.update(params, grads);
  }
  for (int a = 0; a < A; ++a) f[a] = params.W[a];
  return f;
}

std::vector<Mat> reconstruct_occupancy(const ContrastiveCritic& critic, const GridWorld& env,
                                       const Vec& p_tau) {
  const int S = env.n_states();
  const int A = env.n_actions();
  std::vector<Mat> rho_hat(A, Mat::Zero(S, S));
  for (int a = 0; a < A; ++a) {
    Mat SA(S * S, env.encoded_state_dim() + env.encoded_action_dim());
    Mat SF(S * S, env.encoded_state_dim());
    long r = 0;
    Vec av(1);
    av[0] = a;
    for (int s = 0; s < S; ++s) {
      Vec sv(1);
      sv[0] = s;
      Vec sa(SA.cols());
      sa.head(S) = env.encode_state(sv);
      sa.tail(4) = env.encode_action(av);
      for (int sp = 0; sp < S; ++sp, ++r) {
        Vec spv(1);
        spv[0] = sp;
        SA.row(r) = sa;
        SF.row(r) = env.encode_state(spv);
      }
    }
    const Vec fv = critic.f_batch(SA, SF);
    r = 0;
    for (int s = 0; s < S; ++s)
      for (int sp = 0; sp < S; ++sp, ++r) rho_hat[a](s, sp) = std::exp(fv[r]) * p_tau[sp];
  }
  return rho_hat;
}

}  // namespace laeo
