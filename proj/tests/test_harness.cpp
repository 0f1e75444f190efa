#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "laeo/envs.hpp"
#include "laeo/harness.hpp"

using namespace laeo;

TEST_CASE("quality_band values and rejection of unknown names") {
  CHECK(quality_band("medium") == std::pair<double, double>{0.45, 0.55});
  CHECK(quality_band("hard") == std::pair<double, double>{0.08, 0.12});
  CHECK_THROWS(quality_band("easy"));
}

TEST_CASE("harvest_success: exact count, flagged states only, shortage is an error") {
  const PointMass env = PointMass::reach2d();
  BehaviorPolicy beh;
  beh.kind = BehaviorPolicy::Kind::scripted_noisy_expert;
  beh.noise_std = 0.01;
  const TrajectoryDataset data = collect_dataset(env, beh, 30, 5);

  const SuccessSet one = harvest_success(data, env, 1, 9);
  REQUIRE(one.states.size() == 1);
  CHECK(env.is_success(one.states[0]));

  const SuccessSet many = harvest_success(data, env, 20, 9);
  REQUIRE(many.states.size() == 20);
  for (const Vec& s : many.states) CHECK(env.is_success(s));

  CHECK_THROWS(harvest_success(data, env, 1000000, 9));
}

TEST_CASE("calibrate_noise lands reach2d in the medium band") {
  const PointMass env = PointMass::reach2d();
  const auto [lo, hi] = quality_band("medium");
  const double noise = calibrate_noise(env, lo, hi, 0.01, 200, 17);
  // Re-measure at the calibrated level.
  const BehaviorPolicy beh = behavior_at(noise, 0.01);
  Rng rng(18);
  int wins = 0;
  const int n = 400;
  for (int i = 0; i < n; ++i) {
    Vec s = env.reset(rng);
    bool done = false;
    for (int t = 0; t < env.horizon() && !done; ++t) {
      const Vec a = scripted_policy_action(env, beh, s, rng);
      std::tie(s, done) = env.step(s, a, rng);
    }
    wins += env.is_success(s);
  }
  const double rate = (double)wins / n;
  CHECK(rate > lo - 0.07);
  CHECK(rate < hi + 0.07);
}

TEST_CASE("collect_in_memory: measured success inside the band, metadata recorded") {
  ExperimentConfig cfg;
  cfg.env_id = "reach2d";
  cfg.seed = 2;
  cfg.collect.n_trajectories = 120;
  cfg.collect.n_success_examples = 10;
  cfg.collect.calib_episodes = 200;
  const auto env = make_env(cfg.env_id);
  const CollectResult res = collect_in_memory(cfg, *env);
  const auto [lo, hi] = quality_band("medium");
  CHECK(res.measured_success >= lo - 0.07);
  CHECK(res.measured_success <= hi + 0.07);
  CHECK(res.data.trajectories.size() == 120);
  CHECK(res.success.states.size() == 10);
  CHECK(res.data.metadata.count("quality") == 1);
  CHECK(res.data.metadata.count("noise") == 1);
}

TEST_CASE("collect_in_memory: fixed_noise skips calibration (grid5)") {
  ExperimentConfig cfg;
  cfg.env_id = "grid5";
  cfg.seed = 3;
  cfg.collect.n_trajectories = 20;
  cfg.collect.n_success_examples = 5;
  cfg.collect.fixed_noise = 0.8;
  const auto env = make_env(cfg.env_id);
  const CollectResult res = collect_in_memory(cfg, *env);
  CHECK(res.noise == 0.8);
  CHECK(res.success.states.size() == 5);
}

TEST_CASE("oracle_checks pass honestly and fail under a discount perturbation") {
  const auto checks = oracle_checks(0.0);
  REQUIRE(checks.size() >= 6);
  for (const auto& c : checks) {
    INFO(c.name);
    CHECK(c.pass);
    CHECK(c.residual <= c.tol);
  }

  std::ostringstream honest, broken;
  CHECK(run_oracle_check(honest, 0.0) == 0);
  CHECK(run_oracle_check(broken, 0.05) != 0);
  CHECK(broken.str().find("FAIL") != std::string::npos);
}

TEST_CASE("run_sweep input validation") {
  ExperimentConfig cfg;
  CHECK_THROWS(run_sweep(cfg, "n_success_examples", {}));
  CHECK_THROWS(run_sweep(cfg, "not_an_axis", {"1"}));
}

TEST_CASE("grid5 bc training smoke test end to end") {
  ExperimentConfig cfg;
  cfg.env_id = "grid5";
  cfg.method = "bc";
  cfg.seed = 1;
  cfg.eval_episodes = 20;
  cfg.collect.n_trajectories = 40;
  cfg.collect.n_success_examples = 5;
  cfg.collect.fixed_noise = 0.9;
  cfg.policy.steps = 200;
  cfg.policy.eval_every = 100;
  cfg.policy.hidden = {16};

  const auto env = make_env(cfg.env_id);
  const CollectResult col = collect_in_memory(cfg, *env);
  const TrainOutcome out = train_method(cfg, col.data, col.success, *env);
  CHECK(!out.rows.empty());
  CHECK(out.final_success >= 0.0);
  CHECK(out.final_success <= 1.0);
  for (const auto& r : out.rows) {
    CHECK(r.method == "bc");
    CHECK(r.env_id == "grid5");
    CHECK(r.wall_clock_s == 0.0);
  }
}

TEST_CASE("train_method writes a loadable checkpoint") {
  ExperimentConfig cfg;
  cfg.env_id = "reach2d";
  cfg.method = "bc";
  cfg.seed = 4;
  cfg.eval_episodes = 10;
  cfg.collect.n_trajectories = 30;
  cfg.collect.n_success_examples = 5;
  cfg.collect.calib_episodes = 100;
  cfg.policy.steps = 100;
  cfg.policy.eval_every = 50;
  cfg.policy.hidden = {16};

  const auto env = make_env(cfg.env_id);
  const CollectResult col = collect_in_memory(cfg, *env);
  const std::string ckpt = "test_harness_tmp.ckpt";
  const TrainOutcome out = train_method(cfg, col.data, col.success, *env, ckpt);
  const double reval = run_eval(cfg, ckpt);
  CHECK(reval == doctest::Approx(out.final_success).epsilon(1e-12));
  std::remove(ckpt.c_str());
}
