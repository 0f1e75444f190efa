#include "laeo/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace laeo {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void TabularMdp::validate(double tol) const {
  if (n_states <= 0 || n_actions <= 0) throw std::invalid_argument("TabularMdp: empty");
  if (static_cast<int>(T.size()) != n_actions) throw std::invalid_argument("TabularMdp: T size");
  if (gamma <= 0.0 || gamma >= 1.0) throw std::invalid_argument("TabularMdp: gamma out of (0,1)");
  for (const auto& Ta : T) {
    if (Ta.rows() != n_states || Ta.cols() != n_states)
      throw std::invalid_argument("TabularMdp: T shape");
    for (int s = 0; s < n_states; ++s)
      if (std::abs(Ta.row(s).sum() - 1.0) > tol)
        throw std::invalid_argument("TabularMdp: transition row does not sum to 1");
  }
  if (behavior.rows() != n_states || behavior.cols() != n_actions)
    throw std::invalid_argument("TabularMdp: behavior shape");
  for (int s = 0; s < n_states; ++s)
    if (std::abs(behavior.row(s).sum() - 1.0) > tol)
      throw std::invalid_argument("TabularMdp: behavior row does not sum to 1");
  if (p0.size() != n_states || std::abs(p0.sum() - 1.0) > tol)
    throw std::invalid_argument("TabularMdp: p0 not a distribution");
}

Mat TabularMdp::behavior_transition() const {
  Mat P = Mat::Zero(n_states, n_states);
  for (int a = 0; a < n_actions; ++a) P += behavior.col(a).asDiagonal() * T[a];
  return P;
}

OccupancyTable occupancy(const TabularMdp& mdp) {
  const int S = mdp.n_states;
  const Mat P = mdp.behavior_transition();
  const Mat M = Mat::Identity(S, S) - mdp.gamma * P;
  Eigen::PartialPivLU<Mat> lu(M);
  // N = (I - gamma P)^-1
  const Mat N = lu.solve(Mat::Identity(S, S));
  const double residual = (M * N - Mat::Identity(S, S)).cwiseAbs().maxCoeff();
  if (residual > 1e-8)
    throw std::runtime_error("occupancy: linear solve residual " + std::to_string(residual));

  OccupancyTable occ;
  occ.rho.reserve(mdp.n_actions);
  for (int a = 0; a < mdp.n_actions; ++a) {
    Mat rho = mdp.gamma * (1.0 - mdp.gamma) * (mdp.T[a] * N);
    rho += (1.0 - mdp.gamma) * Mat::Identity(S, S);
    occ.rho.push_back(std::move(rho));
  }
  return occ;
}

OccupancyTable occupancy_power_series(const TabularMdp& mdp, int max_t) {
  const int S = mdp.n_states;
  const Mat P = mdp.behavior_transition();
  OccupancyTable occ;
  for (int a = 0; a < mdp.n_actions; ++a) {
    // p_t(.|s,a): t=0 is e_s, t>=1 is T[a] P^{t-1}.
    Mat acc = Mat::Identity(S, S);
    Mat pt = mdp.T[a];
    double g = mdp.gamma;
    for (int t = 1; t <= max_t; ++t) {
      acc += g * pt;
      pt = pt * P;
      g *= mdp.gamma;
    }
    occ.rho.push_back((1.0 - mdp.gamma) * acc);
  }
  return occ;
}

Mat exact_q(const TabularMdp& mdp, const Vec& reward) {
  if (reward.size() != mdp.n_states) throw std::invalid_argument("exact_q: reward size");
  if (!reward.allFinite()) throw std::invalid_argument("exact_q: non-finite reward");
  const int S = mdp.n_states;
  const Mat P = mdp.behavior_transition();
  const Vec V = (Mat::Identity(S, S) - mdp.gamma * P).partialPivLu().solve(reward);
  Mat Q(S, mdp.n_actions);
  for (int a = 0; a < mdp.n_actions; ++a) Q.col(a) = reward + mdp.gamma * (mdp.T[a] * V);
  return Q;
}

std::vector<Mat> exact_f_star(const TabularMdp& mdp, const OccupancyTable& occ, const Vec& p_tau) {
  if (p_tau.size() != mdp.n_states) throw std::invalid_argument("exact_f_star: p_tau size");
  std::vector<Mat> f;
  for (int a = 0; a < mdp.n_actions; ++a) {
    Mat fa(mdp.n_states, mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) {
      for (int sp = 0; sp < mdp.n_states; ++sp) {
        const double rho = occ.rho[a](s, sp);
        if (rho <= 0.0) {
          fa(s, sp) = kNegInf;
        } else if (p_tau[sp] <= 0.0) {
          throw std::runtime_error("exact_f_star: state " + std::to_string(sp) +
                                   " has positive occupancy but zero dataset density");
        } else {
          fa(s, sp) = std::log(rho) - std::log(p_tau[sp]);
        }
      }
    }
    f.push_back(std::move(fa));
  }
  return f;
}

Vec reward_from_examples(const Vec& success_counts, const Vec& p_tau) {
  if (success_counts.size() != p_tau.size())
    throw std::invalid_argument("reward_from_examples: size mismatch");
  const double total = success_counts.sum();
  if (total <= 0.0) throw std::invalid_argument("reward_from_examples: empty success counts");
  Vec r = Vec::Zero(success_counts.size());
  for (long s = 0; s < r.size(); ++s) {
    if (success_counts[s] <= 0.0) continue;
    if (p_tau[s] <= 0.0)
      throw std::runtime_error("reward_from_examples: state " + std::to_string(s) +
                               " has success mass but zero dataset density");
    r[s] = (success_counts[s] / total) / p_tau[s];
  }
  return r;
}

Mat occupancy_q_from_f(const std::vector<Mat>& f_table, const Vec& p_star, double gamma) {
  if (f_table.empty()) throw std::invalid_argument("occupancy_q_from_f: empty table");
  const int S = static_cast<int>(f_table[0].rows());
  const int A = static_cast<int>(f_table.size());
  if (p_star.size() != S) throw std::invalid_argument("occupancy_q_from_f: p_star size");
  Mat Q(S, A);
  for (int a = 0; a < A; ++a) {
    for (int s = 0; s < S; ++s) {
      // log-sum-exp over s* with weights p_star(s*); -inf entries drop out.
      double mx = kNegInf;
      for (int sp = 0; sp < S; ++sp)
        if (p_star[sp] > 0.0 && f_table[a](s, sp) > mx) mx = f_table[a](s, sp);
      if (mx == kNegInf) {
        Q(s, a) = 0.0;
        continue;
      }
      double acc = 0.0;
      for (int sp = 0; sp < S; ++sp) {
        const double f = f_table[a](s, sp);
        if (p_star[sp] > 0.0 && f > kNegInf) acc += p_star[sp] * std::exp(f - mx);
      }
      const double log_q = mx + std::log(acc) - std::log1p(-gamma);
      if (log_q > 700.0) throw std::overflow_error("occupancy_q_from_f: overflow after log-sum-exp guard");
      Q(s, a) = std::exp(log_q);
    }
  }
  return Q;
}

}  // namespace laeo
