#pragma once

#include <vector>

#include "laeo/approx.hpp"

namespace laeo {

// Explicit finite MDP with a known behavior policy. The verification backbone
// for the tabular identities: everything here is computed by exact linear
// algebra, no sampling.
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<Mat> T;  // T[a](s, s') = p(s' | s, a)
  Mat behavior;        // B(s, a) = beta(a | s)
  Vec p0;              // initial state distribution
  double gamma = 0.9;

  void validate(double tol = 1e-9) const;

  // State-to-state transition under the behavior policy:
  // P(s, s') = sum_a B(s, a) T[a](s, s').
  Mat behavior_transition() const;
};

// rho[a](s, s') = discounted probability of visiting s' at any future step
// (including t = 0) starting from (s, a); each (s, a) slice sums to 1.
struct OccupancyTable {
  std::vector<Mat> rho;

  double operator()(int s, int a, int sp) const { return rho[a](s, sp); }
};

// Exact occupancy via matrix solve:
// rho(.|s,a) = (1-gamma) e_s + gamma (1-gamma) T[a](s,:) (I - gamma P)^-1.
OccupancyTable occupancy(const TabularMdp& mdp);

// Independent route: truncated power series sum_{t<=max_t} gamma^t p_t.
OccupancyTable occupancy_power_series(const TabularMdp& mdp, int max_t);

// Bellman evaluation of the behavior policy for state reward r(s):
// Q(s,a) = r(s) + gamma sum_{s'} T[a](s,s') V(s'), V = (I - gamma P)^-1 r.
Mat exact_q(const TabularMdp& mdp, const Vec& reward);

// Optimal critic table f*(s,a,s') = log rho(s'|s,a) - log p_tau(s').
// Entries where rho = 0 carry -inf; a support violation (rho > 0 with
// p_tau = 0) is an error naming the offending state.
std::vector<Mat> exact_f_star(const TabularMdp& mdp, const OccupancyTable& occ, const Vec& p_tau);

// Assumption-1 reward: r(s) = p_*(s) / p_tau(s) with the scale constant
// fixed to 1. success_counts need not be normalized.
Vec reward_from_examples(const Vec& success_counts, const Vec& p_tau);

// Q from the optimal critic table, in exact-expectation form:
// Q(s,a) = 1/(1-gamma) sum_{s*} p_star(s*) exp(f(s,a,s*)).
// Computed via log-sum-exp; -inf table entries contribute zero mass.
Mat occupancy_q_from_f(const std::vector<Mat>& f_table, const Vec& p_star, double gamma);

}  // namespace laeo
