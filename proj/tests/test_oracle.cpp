#include <doctest.h>

#include <cmath>

#include "laeo/envs.hpp"
#include "laeo/oracle.hpp"

using namespace laeo;

namespace {

TabularMdp random_mdp(int S, int A, double gamma, Rng& rng) {
  TabularMdp mdp;
  mdp.n_states = S;
  mdp.n_actions = A;
  mdp.gamma = gamma;
  for (int a = 0; a < A; ++a) {
    Mat T(S, S);
    for (int s = 0; s < S; ++s) {
      double total = 0.0;
      for (int sp = 0; sp < S; ++sp) {
        T(s, sp) = -std::log(1.0 - rng.uniform());  // exponential -> Dirichlet-ish
        total += T(s, sp);
      }
      T.row(s) /= total;
    }
    mdp.T.push_back(T);
  }
  mdp.behavior = Mat(S, A);
  for (int s = 0; s < S; ++s) {
    double total = 0.0;
    for (int a = 0; a < A; ++a) {
      mdp.behavior(s, a) = rng.uniform() + 0.05;
      total += mdp.behavior(s, a);
    }
    mdp.behavior.row(s) /= total;
  }
  mdp.p0 = Vec::Constant(S, 1.0 / S);
  mdp.validate();
  return mdp;
}

// Independent route for Q: plain value iteration on the evaluation operator.
Mat value_iteration_q(const TabularMdp& mdp, const Vec& reward, int iters) {
  Vec v = Vec::Zero(mdp.n_states);
  for (int i = 0; i < iters; ++i) {
    Vec nv = reward;
    for (int s = 0; s < mdp.n_states; ++s) {
      double acc = 0.0;
      for (int a = 0; a < mdp.n_actions; ++a)
        acc += mdp.behavior(s, a) * mdp.T[a].row(s).dot(v);
      nv(s) += mdp.gamma * acc;
    }
    v = nv;
  }
  Mat q(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a)
      q(s, a) = reward(s) + mdp.gamma * mdp.T[a].row(s).dot(v);
  return q;
}

}  // namespace

TEST_CASE("tabular mdp: validation rejects broken inputs") {
  Rng rng(1);
  TabularMdp mdp = random_mdp(4, 2, 0.9, rng);
  CHECK_NOTHROW(mdp.validate());
  TabularMdp bad = mdp;
  bad.T[0](0, 0) += 0.1;  // row no longer stochastic
  CHECK_THROWS(bad.validate());
  bad = mdp;
  bad.gamma = 1.0;
  CHECK_THROWS(bad.validate());
  bad = mdp;
  bad.behavior(2, 0) += 0.5;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("occupancy: rows sum to 1 and match the power series") {
  Rng rng(2);
  for (int trial = 0; trial < 4; ++trial) {
    const TabularMdp mdp = random_mdp(6 + trial, 3, 0.5 + 0.1 * trial, rng);
    const OccupancyTable occ = occupancy(mdp);
    const OccupancyTable series = occupancy_power_series(mdp, 300);
    for (int a = 0; a < mdp.n_actions; ++a) {
      CHECK((occ.rho[a].rowwise().sum() - Vec::Ones(mdp.n_states)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((occ.rho[a] - series.rho[a]).cwiseAbs().maxCoeff() < 1e-8);
      CHECK(occ.rho[a].minCoeff() >= -1e-14);
    }
  }
}

TEST_CASE("exact_q: matches value iteration") {
  Rng rng(3);
  const TabularMdp mdp = random_mdp(8, 3, 0.85, rng);
  Vec reward(8);
  for (int s = 0; s < 8; ++s) reward(s) = rng.uniform();
  const Mat q = exact_q(mdp, reward);
  const Mat q_vi = value_iteration_q(mdp, reward, 400);
  CHECK((q - q_vi).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("f_star: -inf off support, error on support violation") {
  // Two-state chain 0 -> 1, 1 absorbing; state 0 is never revisited from 1.
  TabularMdp chain;
  chain.n_states = 2;
  chain.n_actions = 1;
  chain.gamma = 0.5;
  Mat T(2, 2);
  T << 0.0, 1.0, 0.0, 1.0;
  chain.T = {T};
  chain.behavior = Mat::Ones(2, 1);
  chain.p0 = Vec::Zero(2);
  chain.p0(0) = 1.0;
  chain.validate();

  const OccupancyTable occ = occupancy(chain);
  CHECK(occ(1, 0, 0) == 0.0);

  const Vec p_tau = Vec::Constant(2, 0.5);
  const auto f = exact_f_star(chain, occ, p_tau);
  CHECK(std::isinf(f[0](1, 0)));
  CHECK(f[0](1, 0) < 0.0);

  Vec bad_tau(2);
  bad_tau << 1.0, 0.0;  // rho(1|0) > 0 but p_tau(1) = 0
  CHECK_THROWS(exact_f_star(chain, occ, bad_tau));
}

TEST_CASE("q identity on the hand-computed chain") {
  TabularMdp chain;
  chain.n_states = 2;
  chain.n_actions = 1;
  chain.gamma = 0.5;
  Mat T(2, 2);
  T << 0.0, 1.0, 0.0, 1.0;
  chain.T = {T};
  chain.behavior = Mat::Ones(2, 1);
  chain.p0 = Vec::Zero(2);
  chain.p0(0) = 1.0;
  chain.validate();

  const OccupancyTable occ = occupancy(chain);
  // rho(1 | 0, a) = (1-g) * sum_{t>=1} g^t = g = 0.5
  CHECK(occ(0, 0, 1) == doctest::Approx(0.5).epsilon(1e-12));

  const Vec p_tau = Vec::Constant(2, 0.5);
  Vec p_star(2);
  p_star << 0.0, 1.0;
  const auto f = exact_f_star(chain, occ, p_tau);
  const Mat q_from_f = occupancy_q_from_f(f, p_star, chain.gamma);
  const Mat q_exact = exact_q(chain, reward_from_examples(p_star, p_tau));
  // Both routes give Q(0) = 2 exactly: r(1) = 2 collected from t = 1 on.
  CHECK(q_exact(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK((q_exact - q_from_f).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("q identity on random mdps and the gridworld") {
  Rng rng(4);
  for (int trial = 0; trial < 3; ++trial) {
    const TabularMdp mdp = random_mdp(5 + 3 * trial, 2 + trial % 2, 0.6 + 0.1 * trial, rng);
    const OccupancyTable occ = occupancy(mdp);
    Vec p_tau = Vec::Zero(mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) p_tau(s) = rng.uniform() + 0.1;
    p_tau /= p_tau.sum();
    Vec p_star = Vec::Zero(mdp.n_states);
    p_star(trial % mdp.n_states) = 0.7;
    p_star((trial + 2) % mdp.n_states) = 0.3;

    const auto f = exact_f_star(mdp, occ, p_tau);
    const Mat q_from_f = occupancy_q_from_f(f, p_star, mdp.gamma);
    const Mat q_exact = exact_q(mdp, reward_from_examples(p_star, p_tau));
    CHECK((q_exact - q_from_f).cwiseAbs().maxCoeff() < 1e-9);
  }

  const GridWorld grid{GridWorldConfig{}};
  const TabularMdp mdp = grid.to_tabular(grid.uniform_behavior());
  const OccupancyTable occ = occupancy(mdp);
  const Vec p_tau = Vec::Constant(25, 1.0 / 25.0);
  Vec p_star = Vec::Zero(25);
  p_star(grid.goal_cell()) = 1.0;
  const auto f = exact_f_star(mdp, occ, p_tau);
  const Mat q_from_f = occupancy_q_from_f(f, p_star, mdp.gamma);
  const Mat q_exact = exact_q(mdp, reward_from_examples(p_star, p_tau));
  CHECK((q_exact - q_from_f).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("reward_from_examples: normalizes counts, rejects empty support") {
  Vec counts(3), p_tau(3);
  counts << 2.0, 0.0, 6.0;
  p_tau << 0.25, 0.5, 0.25;
  const Vec r = reward_from_examples(counts, p_tau);
  CHECK(r(0) == doctest::Approx(1.0));   // 0.25 / 0.25
  CHECK(r(1) == doctest::Approx(0.0));
  CHECK(r(2) == doctest::Approx(3.0));   // 0.75 / 0.25
  CHECK_THROWS(reward_from_examples(Vec::Zero(3), p_tau));
}
