#include <doctest.h>

#include <cmath>

#include "laeo/critic.hpp"
#include "laeo/oracle.hpp"
#include "util.hpp"

using namespace laeo;

namespace {

ContrastiveCritic small_critic(int sa_dim, int sf_dim, int rep, std::uint64_t seed) {
  ContrastiveCritic critic;
  critic.rep_dim = rep;
  critic.phi = Mlp({sa_dim, 12, rep});
  critic.psi = Mlp({sf_dim, 12, rep});
  Rng rng(seed);
  critic.phi.init(rng);
  critic.psi.init(rng);
  return critic;
}

Mat random_mat(long r, long c, Rng& rng) {
  Mat m(r, c);
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

TrajectoryDataset grid_dataset(int n_traj, std::uint64_t seed) {
  const GridWorld grid{GridWorldConfig{}};
  BehaviorPolicy pol;
  pol.kind = BehaviorPolicy::Kind::uniform_random;
  return collect_dataset(grid, pol, n_traj, seed);
}

}  // namespace

TEST_CASE("f_value: zero towers give f = 0, and f is bilinear") {
  ContrastiveCritic critic = small_critic(3, 2, 4, 1);
  Rng rng(2);
  const Vec sa = random_mat(1, 3, rng).row(0);
  const Vec sf = random_mat(1, 2, rng).row(0);
  const double f1 = critic.f_value(sa, sf);

  // Doubling the psi output layer doubles f.
  critic.psi.params().W.back() *= 2.0;
  critic.psi.params().b.back() *= 2.0;
  CHECK(critic.f_value(sa, sf) == doctest::Approx(2.0 * f1).epsilon(1e-12));

  critic.phi.params().set_zero();
  CHECK(critic.f_value(sa, sf) == 0.0);
}

TEST_CASE("nce_loss: f = 0 gives 2 ln 2") {
  ContrastiveCritic critic = small_critic(3, 2, 4, 3);
  critic.phi.params().set_zero();
  critic.psi.params().set_zero();
  Rng rng(4);
  const Mat SA = random_mat(16, 3, rng);
  const Mat SF = random_mat(16, 2, rng);
  const NceLoss res = nce_loss(critic, SA, SF, SA, SF);
  CHECK(res.loss == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("nce_loss: perfect separation drives the loss to 0") {
  // Linear one-dim towers: f = w_phi * x * w_psi * y; choose inputs so
  // positives have f >> 0 and negatives f << 0.
  ContrastiveCritic critic;
  critic.rep_dim = 1;
  critic.phi = Mlp({1, 1});
  critic.psi = Mlp({1, 1});
  critic.phi.params().set_zero();
  critic.psi.params().set_zero();
  critic.phi.params().W[0](0, 0) = 5.0;
  critic.psi.params().W[0](0, 0) = 5.0;
  Mat SA = Mat::Ones(4, 1), SF_pos = Mat::Ones(4, 1), SF_neg = -Mat::Ones(4, 1);
  const NceLoss res = nce_loss(critic, SA, SF_pos, SA, SF_neg);
  CHECK(res.loss < 1e-6);
}

TEST_CASE("nce_loss: gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    ContrastiveCritic critic = small_critic(4, 3, 5, 100 + seed);
    Rng rng(200 + seed);
    const Mat SA_pos = random_mat(8, 4, rng);
    const Mat SF_pos = random_mat(8, 3, rng);
    const Mat SA_neg = random_mat(16, 4, rng);
    const Mat SF_neg = random_mat(16, 3, rng);

    const NceLoss res = nce_loss(critic, SA_pos, SF_pos, SA_neg, SF_neg);
    auto loss = [&] { return nce_loss(critic, SA_pos, SF_pos, SA_neg, SF_neg).loss; };
    Rng pick(300 + seed);
    CHECK(testutil::fd_rel_error(critic.phi.params(), loss, res.grad_phi, 25, pick) < 1e-4);
    CHECK(testutil::fd_rel_error(critic.psi.params(), loss, res.grad_psi, 25, pick) < 1e-4);
  }
}

TEST_CASE("estimate_q: closed forms and duplication invariance") {
  const GridWorld grid{GridWorldConfig{}};
  ContrastiveCritic critic = small_critic(grid.encoded_state_dim() + grid.encoded_action_dim(),
                                          grid.encoded_state_dim(), 4, 9);
  critic.phi.params().set_zero();
  critic.psi.params().set_zero();  // f = 0 everywhere

  SuccessSet success;
  success.env_id = "grid5";
  Vec s(1);
  s[0] = 24.0;
  success.states.push_back(s);

  Vec st(1), act(1);
  st[0] = 0.0;
  act[0] = 1.0;
  CHECK(estimate_q(critic, grid, st, act, success, 0.5) == doctest::Approx(2.0).epsilon(1e-12));

  // 200 duplicates of the same example change nothing.
  Rng rng(10);
  ContrastiveCritic trained = small_critic(29, 25, 4, 11);
  SuccessSet many = success;
  for (int i = 0; i < 199; ++i) many.states.push_back(s);
  const double q1 = estimate_q(trained, grid, st, act, success, 0.9);
  const double q200 = estimate_q(trained, grid, st, act, many, 0.9);
  CHECK(q1 == doctest::Approx(q200).epsilon(1e-12));

}

TEST_CASE("estimate_q: monotone in f") {
  // With a single success example Q = e^f / (1 - gamma), so raising f raises Q.
  const GridWorld grid{GridWorldConfig{}};
  ContrastiveCritic critic = small_critic(grid.encoded_state_dim() + grid.encoded_action_dim(),
                                          grid.encoded_state_dim(), 4, 13);
  SuccessSet success;
  success.env_id = "grid5";
  Vec s(1);
  s[0] = 12.0;
  success.states.push_back(s);
  Vec st(1), act(1);
  st[0] = 0.0;
  act[0] = 3.0;
  const double q_lo = estimate_q(critic, grid, st, act, success, 0.9);
  const Vec sa_enc = [&] {
    Vec e(grid.encoded_state_dim() + grid.encoded_action_dim());
    e << grid.encode_state(st), grid.encode_action(act);
    return e;
  }();
  const Vec sf_enc = grid.encode_state(s);
  const double f_lo = critic.f_value(sa_enc, sf_enc);
  // Replace psi with a constant-output net whose f is strictly larger.
  ContrastiveCritic hi = critic;
  hi.psi.params().set_zero();
  hi.phi.params().set_zero();
  const double q0 = estimate_q(hi, grid, st, act, success, 0.9);  // f = 0
  if (f_lo < 0.0)
    CHECK(q0 > q_lo);
  else
    CHECK(q0 <= q_lo + 1e-12);
}

TEST_CASE("train_critic: loss decreases and training is deterministic") {
  const GridWorld grid{GridWorldConfig{}};
  const TrajectoryDataset data = grid_dataset(40, 51);
  CriticTrainConfig cfg;
  cfg.steps = 300;
  cfg.batch_size = 64;
  cfg.hidden = {32};
  cfg.rep_dim = 8;
  cfg.gamma = 0.9;
  cfg.seed = 7;
  cfg.eval_every = 100;

  double first = 0.0, last = 0.0;
  bool got_first = false;
  const ContrastiveCritic c1 = train_critic(data, grid, cfg, [&](int, double loss) {
    if (!got_first) {
      first = loss;
      got_first = true;
    }
    last = loss;
  });
  CHECK(last < first);

  const ContrastiveCritic c2 = train_critic(data, grid, cfg);
  CHECK((c1.phi.params().to_flat() - c2.phi.params().to_flat()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((c1.psi.params().to_flat() - c2.psi.params().to_flat()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("triple weights: normalized and consistent with the dataset") {
  const TrajectoryDataset data = grid_dataset(30, 61);
  const TripleWeights w = nce_triple_weights(data, 25, 4, 0.9);
  double pos_total = 0.0;
  for (const Mat& m : w.pos) {
    CHECK(m.minCoeff() >= 0.0);
    pos_total += m.sum();
  }
  CHECK(pos_total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w.anchor_weight.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(w.p_tau.sum() - 1.0) < 1e-12);
}

TEST_CASE("tabular nce: sigma(f) approaches the Bayes-optimal probability") {
  // Small chain dataset so full-batch training converges quickly.
  const GridWorldConfig cfg = [] {
    GridWorldConfig c;
    c.width = 3;
    c.height = 1;
    c.horizon = 60;
    c.goal_cell = 2;
    return c;
  }();
  const GridWorld grid(cfg);
  BehaviorPolicy pol;
  pol.kind = BehaviorPolicy::Kind::uniform_random;
  const TrajectoryDataset data = collect_dataset(grid, pol, 60, 71);

  const TripleWeights w = nce_triple_weights(data, 3, 4, 0.8);
  const auto f = train_tabular_nce(w, 4000, 0.05);

  double max_err = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int s = 0; s < 3; ++s)
      for (int sp = 0; sp < 3; ++sp) {
        const double wp = w.pos[a](s, sp);
        const double wn = w.anchor_weight(s, a) * w.p_tau(sp);
        if (wp + wn <= 0.0) continue;
        const double bayes = wp / (wp + wn);
        const double sig = 1.0 / (1.0 + std::exp(-f[a](s, sp)));
        max_err = std::max(max_err, std::abs(sig - bayes));
      }
  CHECK(max_err < 0.02);
}
