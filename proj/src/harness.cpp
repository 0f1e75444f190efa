#include "laeo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "laeo/baselines.hpp"
#include "laeo/oracle.hpp"
#include "laeo/planner.hpp"
#include "laeo/svg_plot.hpp"

namespace laeo {
namespace {

namespace fs = std::filesystem;

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

double measure_success(const Env& env, const BehaviorPolicy& pol, int episodes, std::uint64_t seed) {
  const TrajectoryDataset probe = collect_dataset(env, pol, episodes, seed);
  return probe.success_rate();
}

// Network layer sizes recovered from saved parameter shapes.
std::vector<int> sizes_from(const MlpParams& p) {
  if (p.W.empty()) throw std::runtime_error("checkpoint: empty parameter set");
  std::vector<int> sizes;
  sizes.push_back(static_cast<int>(p.W.front().cols()));
  for (const Mat& w : p.W) sizes.push_back(static_cast<int>(w.rows()));
  return sizes;
}

const MlpParams& entry(const std::vector<CheckpointEntry>& entries, const std::string& name,
                       const std::string& path) {
  for (const CheckpointEntry& e : entries)
    if (e.name == name) return e.params;
  throw std::runtime_error("checkpoint " + path + ": missing entry \"" + name + "\"");
}

}  // namespace

std::pair<double, double> quality_band(const std::string& quality) {
  if (quality == "medium") return {0.45, 0.55};
  if (quality == "hard") return {0.08, 0.12};
  throw std::invalid_argument("unknown quality \"" + quality + "\" (expected medium or hard)");
}

BehaviorPolicy behavior_at(double noise, double noise_std) {
  BehaviorPolicy pol;
  pol.kind = BehaviorPolicy::Kind::epsilon_expert;
  pol.epsilon = noise;
  pol.noise_std = noise_std;
  return pol;
}

double calibrate_noise(const Env& env, double lo, double hi, double noise_std, int episodes,
                       std::uint64_t seed, int max_iters) {
  if (!(lo < hi) || lo < 0.0 || hi > 1.0)
    throw std::invalid_argument("calibrate_noise: bad band");
  // Aim at the center of the band so finite-sample drift in the final
  // collection stays inside it.
  const double target_lo = lo + 0.25 * (hi - lo);
  const double target_hi = hi - 0.25 * (hi - lo);

  double a = 0.0, b = 1.0;
  const double rate_expert = measure_success(env, behavior_at(a, noise_std), episodes, seed);
  if (rate_expert < lo)
    throw std::runtime_error("calibrate_noise: expert success rate " + fmt(rate_expert) +
                             " is below the band [" + fmt(lo) + ", " + fmt(hi) + "]");
  if (rate_expert <= hi) return a;
  const double rate_random = measure_success(env, behavior_at(b, noise_std), episodes, seed + 1);
  if (rate_random > hi)
    throw std::runtime_error("calibrate_noise: fully random success rate " + fmt(rate_random) +
                             " is above the band [" + fmt(lo) + ", " + fmt(hi) + "]");
  if (rate_random >= lo) return b;

  double rate = rate_random;
  for (int it = 0; it < max_iters; ++it) {
    const double mid = 0.5 * (a + b);
    rate = measure_success(env, behavior_at(mid, noise_std), episodes, seed + 2 + it);
    if (rate >= target_lo && rate <= target_hi) return mid;
    (rate > target_hi ? a : b) = mid;
  }
  throw std::runtime_error("calibrate_noise: no noise level found after " +
                           std::to_string(max_iters) + " probes; last rate " + fmt(rate) +
                           " vs band [" + fmt(lo) + ", " + fmt(hi) + "]");
}

SuccessSet harvest_success(const TrajectoryDataset& data, const Env& env, int n,
                           std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("harvest_success: n must be positive");
  std::vector<const Vec*> pool;
  for (const Trajectory& traj : data.trajectories)
    for (int t = 0; t < traj.length(); ++t)
      if (traj.success_flags[t]) pool.push_back(&traj.states[t + 1]);
  if (static_cast<int>(pool.size()) < n)
    throw std::runtime_error("harvest_success: only " + std::to_string(pool.size()) +
                             " success states available, need " + std::to_string(n));
  // Partial Fisher-Yates: uniform subsample without replacement.
  Rng rng(seed);
  for (int i = 0; i < n; ++i)
    std::swap(pool[i], pool[i + rng.uniform_int(static_cast<int>(pool.size()) - i)]);
  SuccessSet out;
  out.env_id = env.id();
  out.states.reserve(n);
  for (int i = 0; i < n; ++i) out.states.push_back(*pool[i]);
  return out;
}

CollectResult collect_in_memory(const ExperimentConfig& cfg, const Env& env) {
  const auto [lo, hi] = quality_band(cfg.collect.quality);
  CollectResult out;
  if (cfg.collect.fixed_noise >= 0.0) {
    out.noise = cfg.collect.fixed_noise;
    out.data = collect_dataset(env, behavior_at(out.noise, cfg.collect.noise_std),
                               cfg.collect.n_trajectories, cfg.seed * 7919 + 2);
    out.measured_success = out.data.success_rate();
  } else {
    out.noise = calibrate_noise(env, lo, hi, cfg.collect.noise_std, cfg.collect.calib_episodes,
                                cfg.seed * 7919 + 1);
    // The probe estimate can drift once the full dataset is drawn (the
    // success-vs-noise curve is steep), so verify the collected data itself
    // and bisect the noise on the dataset measurement if it left the band.
    double nlo = std::max(0.0, out.noise - 0.15), nhi = std::min(1.0, out.noise + 0.15);
    const int max_attempts = 10;
    for (int attempt = 0;; ++attempt) {
      out.data = collect_dataset(env, behavior_at(out.noise, cfg.collect.noise_std),
                                 cfg.collect.n_trajectories, cfg.seed * 7919 + 2 + 101 * attempt);
      out.measured_success = out.data.success_rate();
      if (out.measured_success >= lo && out.measured_success <= hi) break;
      if (attempt + 1 == max_attempts)
        throw std::runtime_error("collect: dataset success rate " + fmt(out.measured_success) +
                                 " stayed outside [" + fmt(lo) + ", " + fmt(hi) + "] after " +
                                 std::to_string(max_attempts) + " attempts");
      if (out.measured_success > hi)
        nlo = out.noise;  // too successful: more noise
      else
        nhi = out.noise;
      out.noise = 0.5 * (nlo + nhi);
    }
  }
  out.data.metadata["quality"] = cfg.collect.quality;
  out.data.metadata["noise"] = fmt(out.noise);
  out.data.metadata["success_rate"] = fmt(out.measured_success);
  out.success = harvest_success(out.data, env, cfg.collect.n_success_examples, cfg.seed * 7919 + 3);
  return out;
}

CollectResult run_collect(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::unique_ptr<Env> env = make_env(cfg.env_id);
  CollectResult out = collect_in_memory(cfg, *env);
  fs::create_directories(cfg.out_dir);
  save_dataset(out.data, cfg.dataset_file());
  save_success_set(out.success, out.data.state_dim(), cfg.success_file());
  return out;
}

TrainOutcome train_method(const ExperimentConfig& cfg, const TrajectoryDataset& data,
                          const SuccessSet& success, const Env& env,
                          const std::string& checkpoint_path) {
  cfg.validate();
  TrainOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  // Stage seeds derived from the experiment seed so one knob controls a run.
  const std::uint64_t base = cfg.seed * 1000003;
  const std::uint64_t eval_seed = base + 5;

  PolicyEvalCallback log = [&](int step, double loss, const GaussianPolicy& pol) {
    MetricsRow row;
    row.step = step;
    row.loss = loss;
    row.eval_success_rate = evaluate_policy(env, pol, cfg.eval_episodes, eval_seed);
    if (cfg.record_wall_clock)
      row.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    row.seed = cfg.seed;
    row.method = cfg.method;
    row.env_id = cfg.env_id;
    out.rows.push_back(std::move(row));
  };

  GaussianPolicy pol;
  std::vector<CheckpointEntry> ckpt;
  if (cfg.method == "laeo") {
    CriticTrainConfig ccfg = cfg.critic;
    ccfg.seed = base + 1;
    const ContrastiveCritic critic = train_critic(data, env, ccfg);
    const LaeoActionValue qfn(critic, env, success);
    PolicyTrainConfig pcfg = cfg.policy;
    pcfg.seed = base + 2;
    pol = train_policy(data, &qfn, env, pcfg, log);
    ckpt.push_back({"phi", critic.phi.params()});
    ckpt.push_back({"psi", critic.psi.params()});
  } else if (cfg.method == "bc") {
    PolicyTrainConfig pcfg = cfg.policy;
    pcfg.seed = base + 2;
    pol = bc_baseline(data, env, pcfg, log);
  } else if (cfg.method == "oril" || cfg.method == "purl") {
    BaselineConfig bcfg;
    bcfg.kind = cfg.method == "oril" ? BaselineKind::oril : BaselineKind::purl;
    bcfg.classifier = cfg.classifier;
    bcfg.classifier.seed = base + 3;
    bcfg.mc_critic = cfg.mc_critic;
    bcfg.mc_critic.seed = base + 4;
    bcfg.policy = cfg.policy;
    bcfg.policy.seed = base + 2;
    bcfg.gamma = cfg.gamma;
    pol = train_baseline_policy(data, success, env, bcfg, log);
  } else {
    throw std::invalid_argument("train_method: unknown method \"" + cfg.method + "\"");
  }

  if (out.rows.empty())
    throw std::logic_error("train_method: no metrics rows were logged");
  out.final_success = out.rows.back().eval_success_rate;
  if (!checkpoint_path.empty()) {
    ckpt.push_back({"policy", pol.net.params()});
    save_checkpoint(checkpoint_path, ckpt);
  }
  return out;
}

TrainOutcome run_train(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::unique_ptr<Env> env = make_env(cfg.env_id);
  const TrajectoryDataset data = load_dataset(cfg.dataset_file());
  const SuccessSet success = load_success_set(cfg.success_file());
  if (data.env_id != cfg.env_id)
    throw std::runtime_error("run_train: dataset env_id \"" + data.env_id +
                             "\" does not match config env_id \"" + cfg.env_id + "\"");
  fs::create_directories(cfg.out_dir);
  TrainOutcome out = train_method(cfg, data, success, *env, cfg.out_dir + "/policy.ckpt");
  write_metrics_csv(cfg.out_dir + "/metrics.csv", out.rows);
  return out;
}

double run_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path) {
  const std::unique_ptr<Env> env = make_env(cfg.env_id);
  const std::vector<CheckpointEntry> entries = load_checkpoint(checkpoint_path);
  const MlpParams& params = entry(entries, "policy", checkpoint_path);
  GaussianPolicy pol = make_policy(*env, {1}, 0);  // shape replaced by the checkpoint
  pol.net = Mlp(sizes_from(params));
  pol.net.params() = params;
  return evaluate_policy(*env, pol, cfg.eval_episodes, cfg.seed * 1000003 + 5);
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "axis,value,value_label,seed,success,status\n";
  for (const SweepRow& r : rows)
    out << r.axis << ',' << fmt(r.value) << ',' << r.value_label << ',' << r.seed << ','
        << fmt(r.success) << ',' << r.status << '\n';
  return out.str();
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const std::string& axis,
                                const std::vector<std::string>& values) {
  cfg.validate();
  if (values.empty()) throw std::invalid_argument("run_sweep: empty values list");
  if (axis != "n_success" && axis != "n_trajectories" && axis != "quality")
    throw std::invalid_argument("run_sweep: unknown axis \"" + axis + "\"");

  struct Run {
    ExperimentConfig cfg;
    double value;
    std::string label;
  };
  std::vector<Run> runs;
  for (const std::string& v : values) {
    Run run{cfg, 0.0, v};
    if (axis == "n_success") {
      const int n = std::stoi(v);
      run.cfg.collect.n_success_examples = n;
      run.value = n;
    } else if (axis == "n_trajectories") {
      const double mult = std::stod(v);
      if (mult <= 0.0) throw std::invalid_argument("run_sweep: multiplier must be positive");
      run.cfg.collect.n_trajectories =
          std::max(1, static_cast<int>(std::lround(cfg.collect.n_trajectories * mult)));
      run.value = mult;
    } else {
      const auto [lo, hi] = quality_band(v);
      run.cfg.collect.quality = v;
      run.value = 0.5 * (lo + hi);
    }
    for (std::uint64_t seed : cfg.sweep_seeds) {
      runs.push_back(run);
      runs.back().cfg.seed = seed;
    }
  }

  std::vector<SweepRow> rows(runs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < runs.size(); i = next.fetch_add(1)) {
      const Run& run = runs[i];
      SweepRow& row = rows[i];
      row.axis = axis;
      row.value = run.value;
      row.value_label = run.label;
      row.seed = run.cfg.seed;
      try {
        const std::unique_ptr<Env> env = make_env(run.cfg.env_id);
        const CollectResult col = collect_in_memory(run.cfg, *env);
        const TrainOutcome res = train_method(run.cfg, col.data, col.success, *env);
        row.success = res.final_success;
        row.status = "ok";
      } catch (const std::exception& e) {
        row.success = 0.0;
        row.status = std::string("failed: ") + e.what();
      }
    }
  };

  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("LAEO_LAB_THREADS"))
    workers = std::max(1u, static_cast<unsigned>(std::atoi(cap)));
  workers = std::min<unsigned>(workers, static_cast<unsigned>(runs.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  fs::create_directories(cfg.out_dir);
  {
    std::ofstream out(cfg.out_dir + "/sweep.csv", std::ios::binary);
    out << sweep_csv(rows);
  }

  // Aggregate over seeds (failed runs excluded) and plot.
  PlotSeries series;
  series.label = cfg.method;
  std::ostringstream summary;
  summary << "axis,value,value_label,n_ok,mean_success,sem\n";
  for (const std::string& v : values) {
    std::vector<double> ok;
    double value = 0.0;
    for (const SweepRow& r : rows)
      if (r.value_label == v) {
        value = r.value;
        if (r.status == "ok") ok.push_back(r.success);
      }
    if (ok.empty()) {
      summary << axis << ',' << fmt(value) << ',' << v << ",0,,\n";
      continue;
    }
    const MeanStderr ms = mean_stderr(ok);
    summary << axis << ',' << fmt(value) << ',' << v << ',' << ok.size() << ',' << fmt(ms.mean)
            << ',' << fmt(ms.sem) << '\n';
    series.xs.push_back(value);
    series.ys.push_back(ms.mean);
    series.yerr.push_back(ms.sem);
  }
  {
    std::ofstream out(cfg.out_dir + "/sweep_summary.csv", std::ios::binary);
    out << summary.str();
  }
  if (!series.xs.empty())
    write_svg_plot(cfg.out_dir + "/sweep.svg", cfg.env_id + " / " + axis, axis, "success rate",
                   {series});
  return rows;
}

PlanCemOutcome run_plan_cem(const ExperimentConfig& cfg, const TrajectoryDataset& data,
                            const std::vector<std::uint64_t>& seeds, int episodes) {
  const std::unique_ptr<Env> env = make_env(cfg.env_id);
  const auto* pm = dynamic_cast<const PointMass*>(env.get());
  if (pm == nullptr)
    throw std::invalid_argument("run_plan_cem: env \"" + cfg.env_id + "\" is not a point-mass env");

  CriticTrainConfig ccfg = cfg.critic;
  ccfg.seed = cfg.seed * 1000003 + 1;
  const ContrastiveCritic critic = train_critic(data, *env, ccfg);

  const std::vector<PlannerTask> tasks = default_task_suite();
  const std::vector<TaskResult> learned =
      multitask_eval(critic, *pm, tasks, data, cfg.cem, episodes, seeds, /*random_baseline=*/false);
  const std::vector<TaskResult> random =
      multitask_eval(critic, *pm, tasks, data, cfg.cem, episodes, seeds, /*random_baseline=*/true);

  PlanCemOutcome out;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    out.task_names.push_back(learned[i].name);
    out.success.push_back(learned[i].success_rate);
    out.sem.push_back(learned[i].stderr_over_seeds);
    out.random_success.push_back(random[i].success_rate);
  }
  return out;
}

std::vector<OracleCheck> oracle_checks(double gamma_perturb) {
  std::vector<OracleCheck> checks;

  auto run_suite = [&](const std::string& tag, const TabularMdp& mdp, int goal, int power_terms) {
    const OccupancyTable occ = occupancy(mdp);

    double row_res = 0.0;
    for (int a = 0; a < mdp.n_actions; ++a)
      row_res = std::max(row_res,
                         (occ.rho[a].rowwise().sum() - Vec::Ones(mdp.n_states)).cwiseAbs().maxCoeff());
    checks.push_back({"occupancy-rows-sum-to-one (" + tag + ")", row_res, 1e-9, false});

    TabularMdp perturbed = mdp;
    perturbed.gamma = std::min(0.999999, mdp.gamma + gamma_perturb);
    const OccupancyTable series = occupancy_power_series(perturbed, power_terms);
    double series_res = 0.0;
    for (int a = 0; a < mdp.n_actions; ++a)
      series_res = std::max(series_res, (occ.rho[a] - series.rho[a]).cwiseAbs().maxCoeff());
    checks.push_back({"occupancy-matches-power-series (" + tag + ")", series_res, 1e-8, false});

    // One success example at the goal, uniform example marginal.
    const Vec p_tau = Vec::Constant(mdp.n_states, 1.0 / mdp.n_states);
    Vec p_star = Vec::Zero(mdp.n_states);
    p_star(goal) = 1.0;
    const std::vector<Mat> f_star = exact_f_star(mdp, occ, p_tau);
    const Vec reward = reward_from_examples(p_star, p_tau);
    const Mat q_exact = exact_q(perturbed, reward);
    const Mat q_from_f = occupancy_q_from_f(f_star, p_star, mdp.gamma);
    checks.push_back({"q-identity (" + tag + ")",
                      (q_exact - q_from_f).cwiseAbs().maxCoeff(), 1e-9, false});
  };

  {
    GridWorldConfig gcfg;
    const GridWorld grid(gcfg);
    const TabularMdp mdp = grid.to_tabular(grid.uniform_behavior());
    run_suite("grid5", mdp, grid.goal_cell(), 500);
  }
  {
    // Three-state chain: action 0 stays, action 1 steps right; state 2 absorbs.
    TabularMdp chain;
    chain.n_states = 3;
    chain.n_actions = 2;
    chain.gamma = 0.8;
    Mat stay = Mat::Identity(3, 3);
    Mat right = Mat::Zero(3, 3);
    right(0, 1) = 0.9;
    right(0, 0) = 0.1;
    right(1, 2) = 0.9;
    right(1, 1) = 0.1;
    right(2, 2) = 1.0;
    chain.T = {stay, right};
    chain.behavior = Mat::Constant(3, 2, 0.5);
    chain.p0 = Vec::Zero(3);
    chain.p0(0) = 1.0;
    chain.validate();
    run_suite("chain3", chain, 2, 400);
  }

  for (OracleCheck& c : checks) c.pass = c.residual <= c.tol;
  return checks;
}

int run_oracle_check(std::ostream& out, double gamma_perturb) {
  const std::vector<OracleCheck> checks = oracle_checks(gamma_perturb);
  bool all = true;
  for (const OracleCheck& c : checks) {
    out << (c.pass ? "PASS" : "FAIL") << "  " << c.name << "  residual=" << fmt(c.residual)
        << "  tol=" << fmt(c.tol) << '\n';
    all = all && c.pass;
  }
  out << (all ? "all oracle checks passed" : "oracle check FAILURES present") << '\n';
  return all ? 0 : 1;
}

}  // namespace laeo
