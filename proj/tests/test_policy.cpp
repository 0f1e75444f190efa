#include <doctest.h>

#include <cmath>
#include <memory>

#include "laeo/envs.hpp"
#include "laeo/policy.hpp"
#include "util.hpp"

using namespace laeo;

namespace {

GaussianPolicy toy_policy(int state_dim, int action_dim, const Vec& lo, const Vec& hi,
                          std::uint64_t seed, bool squash = true) {
  GaussianPolicy pol;
  pol.net = Mlp({state_dim, 16, 2 * action_dim});
  Rng rng(seed);
  pol.net.init(rng);
  pol.action_dim = action_dim;
  pol.act_low = lo;
  pol.act_high = hi;
  pol.squash = squash;
  return pol;
}

Mat random_mat(long r, long c, Rng& rng, double scale = 1.0) {
  Mat m(r, c);
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
  return m;
}

// Linear critic on the action: value = w . a (plain domain).
class LinearActionValue : public ActionValue {
 public:
  explicit LinearActionValue(Vec w, bool log_domain) : w_(std::move(w)), log_(log_domain) {}
  bool log_domain() const override { return log_; }
  void score(const Mat&, const Mat& actions, Rng&, Vec& values, Mat& dvalue_daction) const override {
    values = actions * w_;
    dvalue_daction = Mat::Ones(actions.rows(), 1) * w_.transpose();
  }

 private:
  Vec w_;
  bool log_;
};

// Same critic plus a constant c in the log domain.
class ShiftedActionValue : public ActionValue {
 public:
  ShiftedActionValue(Vec w, double c) : w_(std::move(w)), c_(c) {}
  bool log_domain() const override { return true; }
  void score(const Mat&, const Mat& actions, Rng&, Vec& values, Mat& dvalue_daction) const override {
    values = (actions * w_).array() + c_;
    dvalue_daction = Mat::Ones(actions.rows(), 1) * w_.transpose();
  }

 private:
  Vec w_;
  double c_;
};

}  // namespace

TEST_CASE("log_prob: unsquashed standard normal density at the mean") {
  Vec lo(1), hi(1);
  lo[0] = -100.0;
  hi[0] = 100.0;
  GaussianPolicy pol = toy_policy(2, 1, lo, hi, 1, /*squash=*/false);
  pol.net.params().set_zero();  // mu = 0, log_std = 0 for every state
  Vec s(2);
  s << 0.3, -0.7;
  Vec a(1);
  a[0] = 0.0;
  CHECK(pol.log_prob(s, a) == doctest::Approx(-0.9189385332046727).epsilon(1e-9));
}

TEST_CASE("log_prob: squashed density integrates to 1 over the box") {
  Vec lo(1), hi(1);
  lo[0] = -2.0;
  hi[0] = 3.0;
  GaussianPolicy pol = toy_policy(2, 1, lo, hi, 5);
  Vec s(2);
  s << 0.1, 0.9;
  const int n = 20000;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    Vec a(1);
    a[0] = lo[0] + (hi[0] - lo[0]) * (i + 0.5) / n;
    total += std::exp(pol.log_prob(s, a)) * (hi[0] - lo[0]) / n;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("log_prob: out-of-box action is an error") {
  Vec lo(1), hi(1);
  lo[0] = -1.0;
  hi[0] = 1.0;
  GaussianPolicy pol = toy_policy(2, 1, lo, hi, 6);
  Vec s(2);
  s << 0.0, 0.0;
  Vec a(1);
  a[0] = 1.5;
  CHECK_THROWS(pol.log_prob(s, a));
}

TEST_CASE("sample_action stays inside the box") {
  Vec lo(2), hi(2);
  lo << -0.3, 0.1;
  hi << 0.3, 0.4;
  GaussianPolicy pol = toy_policy(3, 2, lo, hi, 7);
  Rng rng(8);
  Vec s(3);
  s << 0.2, -0.1, 0.5;
  for (int i = 0; i < 200; ++i) {
    const Vec a = pol.sample_action(s, rng);
    for (int d = 0; d < 2; ++d) {
      CHECK(a[d] >= lo[d]);
      CHECK(a[d] <= hi[d]);
    }
  }
}

TEST_CASE("policy_loss: lambda = 1 is exactly the BC loss with no critic") {
  Vec lo(2), hi(2);
  lo << -1.0, -1.0;
  hi << 1.0, 1.0;
  GaussianPolicy pol = toy_policy(3, 2, lo, hi, 11);
  Rng rng(12);
  const Mat S = random_mat(16, 3, rng);
  Mat A = random_mat(16, 2, rng, 0.3);
  const Mat eps = random_mat(16, 2, rng);

  Rng r1(1), r2(1);
  const PolicyLossResult with_null = policy_loss(pol, nullptr, S, A, eps, 1.0,
                                                 PolicyObjective::jensen_mean_f, r1);
  double mean_lp = 0.0;
  for (int i = 0; i < 16; ++i) mean_lp += pol.log_prob(S.row(i), A.row(i));
  mean_lp /= 16.0;
  CHECK(with_null.loss == doctest::Approx(-mean_lp).epsilon(1e-12));

  // A critic present but weighted by lambda = 1 must give identical grads.
  LinearActionValue qfn(Vec::Ones(2), false);
  const PolicyLossResult with_q =
      policy_loss(pol, &qfn, S, A, eps, 1.0, PolicyObjective::exp_mean, r2);
  CHECK((with_null.grads.to_flat() - with_q.grads.to_flat()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("policy_loss: Jensen ordering of the log-domain modes") {
  // -log mean e^f <= -mean f, so loss_lme <= loss_jensen at lambda = 0.
  Vec lo(1), hi(1);
  lo[0] = -1.0;
  hi[0] = 1.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    GaussianPolicy pol = toy_policy(2, 1, lo, hi, 20 + seed);
    Rng rng(30 + seed);
    const Mat S = random_mat(32, 2, rng);
    const Mat A = random_mat(32, 1, rng, 0.2);
    const Mat eps = random_mat(32, 1, rng);
    Vec w(1);
    w[0] = 1.3;
    LinearActionValue qfn(w, true);
    Rng r1(1), r2(1);
    const double lme =
        policy_loss(pol, &qfn, S, A, eps, 0.0, PolicyObjective::log_mean_exp, r1).loss;
    const double jen =
        policy_loss(pol, &qfn, S, A, eps, 0.0, PolicyObjective::jensen_mean_f, r2).loss;
    CHECK(lme <= jen + 1e-10);
  }
}

TEST_CASE("policy_loss: critic term pushes the mean toward higher value") {
  // With value = w . a and w > 0, the gradient on the mean-head bias should
  // point toward larger actions: a plain gradient step must increase E[w.a].
  Vec lo(1), hi(1);
  lo[0] = -1.0;
  hi[0] = 1.0;
  GaussianPolicy pol = toy_policy(2, 1, lo, hi, 41);
  Rng rng(42);
  const Mat S = random_mat(64, 2, rng);
  const Mat A = Mat::Zero(64, 1);
  const Mat eps = random_mat(64, 1, rng);
  Vec w(1);
  w[0] = 2.0;
  LinearActionValue qfn(w, true);
  Rng r1(1);
  const PolicyLossResult res =
      policy_loss(pol, &qfn, S, A, eps, 0.0, PolicyObjective::jensen_mean_f, r1);

  GaussianPolicy stepped = pol;
  const Vec flat = stepped.net.params().to_flat() - 0.01 * res.grads.to_flat();
  stepped.net.params().from_flat(flat);
  double before = 0.0, after = 0.0;
  for (int i = 0; i < 64; ++i) {
    before += pol.mean_action(S.row(i))[0];
    after += stepped.mean_action(S.row(i))[0];
  }
  CHECK(after > before);
}

TEST_CASE("policy_loss: gradients match finite differences in all modes") {
  Vec lo(2), hi(2);
  lo << -1.0, -0.5;
  hi << 1.0, 0.5;
  Vec w(2);
  w << 0.7, -0.4;
  const PolicyObjective modes[] = {PolicyObjective::exp_mean, PolicyObjective::log_mean_exp,
                                   PolicyObjective::jensen_mean_f};
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    GaussianPolicy pol = toy_policy(3, 2, lo, hi, 50 + seed);
    Rng rng(60 + seed);
    const Mat S = random_mat(12, 3, rng);
    const Mat A = random_mat(12, 2, rng, 0.1);
    const Mat eps = random_mat(12, 2, rng);
    LinearActionValue qfn(w, true);

    for (const PolicyObjective mode : modes) {
      Rng r1(1);
      const PolicyLossResult res = policy_loss(pol, &qfn, S, A, eps, 0.5, mode, r1);
      auto loss = [&] {
        Rng r(1);
        return policy_loss(pol, &qfn, S, A, eps, 0.5, mode, r).loss;
      };
      Rng pick(70 + seed);
      CHECK(testutil::fd_rel_error(pol.net.params(), loss, res.grads, 30, pick) < 1e-4);
    }
    // And pure BC.
    Rng r1(1);
    const PolicyLossResult bc =
        policy_loss(pol, nullptr, S, A, eps, 1.0, PolicyObjective::jensen_mean_f, r1);
    auto loss = [&] {
      Rng r(1);
      return policy_loss(pol, nullptr, S, A, eps, 1.0, PolicyObjective::jensen_mean_f, r).loss;
    };
    Rng pick(80 + seed);
    CHECK(testutil::fd_rel_error(pol.net.params(), loss, bc.grads, 30, pick) < 1e-4);
  }
}

TEST_CASE("policy_loss: adding a constant to f leaves log-domain grads unchanged") {
  Vec lo(1), hi(1);
  lo[0] = -1.0;
  hi[0] = 1.0;
  GaussianPolicy pol = toy_policy(2, 1, lo, hi, 91);
  Rng rng(92);
  const Mat S = random_mat(24, 2, rng);
  const Mat A = random_mat(24, 1, rng, 0.2);
  const Mat eps = random_mat(24, 1, rng);
  Vec w(1);
  w[0] = 0.8;
  ShiftedActionValue q0(w, 0.0), qc(w, 3.0);

  for (const PolicyObjective mode : {PolicyObjective::jensen_mean_f, PolicyObjective::log_mean_exp}) {
    Rng r1(1), r2(1);
    const PolicyLossResult a = policy_loss(pol, &q0, S, A, eps, 0.3, mode, r1);
    const PolicyLossResult b = policy_loss(pol, &qc, S, A, eps, 0.3, mode, r2);
    CHECK((a.grads.to_flat() - b.grads.to_flat()).cwiseAbs().maxCoeff() < 1e-9);
  }
  // exp_mean scales its critic-term gradient by e^c.
  Rng r1(1), r2(1);
  const PolicyLossResult a = policy_loss(pol, &q0, S, A, eps, 0.0, PolicyObjective::exp_mean, r1);
  const PolicyLossResult b = policy_loss(pol, &qc, S, A, eps, 0.0, PolicyObjective::exp_mean, r2);
  CHECK((std::exp(3.0) * a.grads.to_flat() - b.grads.to_flat()).cwiseAbs().maxCoeff() <
        1e-7 * std::exp(3.0));
}

TEST_CASE("bc_baseline equals train_policy with lambda = 1") {
  const PointMass env = PointMass::reach2d();
  BehaviorPolicy beh;
  beh.kind = BehaviorPolicy::Kind::uniform_random;
  const TrajectoryDataset data = collect_dataset(env, beh, 20, 101);

  PolicyTrainConfig cfg;
  cfg.steps = 50;
  cfg.batch_size = 32;
  cfg.hidden = {16};
  cfg.seed = 3;
  cfg.lambda = 1.0;
  const GaussianPolicy a = bc_baseline(data, env, cfg);
  const GaussianPolicy b = train_policy(data, nullptr, env, cfg);
  CHECK((a.net.params().to_flat() - b.net.params().to_flat()).cwiseAbs().maxCoeff() == 0.0);
}
