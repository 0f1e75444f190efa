#pragma once

#include <iosfwd>
#include <optional>

#include "laeo/config.hpp"
#include "laeo/dataset.hpp"
#include "laeo/metrics.hpp"

namespace laeo {

// ---- collection -------------------------------------------------------

struct CollectResult {
  TrajectoryDataset data;
  SuccessSet success;
  double noise = 0.0;             // calibrated behavior-noise level
  double measured_success = 0.0;  // dataset success rate, inside the band
};

// Quality band: medium -> [0.45, 0.55], hard -> [0.08, 0.12].
std::pair<double, double> quality_band(const std::string& quality);

// Behavior policy at a given noise level: expert with probability 1 - noise,
// uniform-random otherwise, plus a small Gaussian jitter on expert steps.
BehaviorPolicy behavior_at(double noise, double noise_std);

// Bisection on the noise level until the measured success rate (over
// `episodes` probe rollouts) lands in [lo, hi]. Throws after the iteration
// budget, reporting the achieved rates.
double calibrate_noise(const Env& env, double lo, double hi, double noise_std, int episodes,
                       std::uint64_t seed, int max_iters = 40);

// Success states harvested from successful trajectories (states flagged by
// the env's success predicate), subsampled without replacement down to n.
SuccessSet harvest_success(const TrajectoryDataset& data, const Env& env, int n, std::uint64_t seed);

// Calibrate, roll out, harvest; writes dataset + success files under out_dir.
CollectResult run_collect(const ExperimentConfig& cfg);

// In-memory variant (no files) used by sweeps and tests.
CollectResult collect_in_memory(const ExperimentConfig& cfg, const Env& env);

// ---- training ---------------------------------------------------------

struct TrainOutcome {
  std::vector<MetricsRow> rows;
  double final_success = 0.0;
};

// Dispatches on cfg.method (laeo | oril | purl | bc); returns the trained
// policy's metrics trace and final evaluation. Policy checkpoint is written
// when checkpoint_path is non-empty.
TrainOutcome train_method(const ExperimentConfig& cfg, const TrajectoryDataset& data,
                          const SuccessSet& success, const Env& env,
                          const std::string& checkpoint_path = "");

// File-level entry point: loads dataset files, trains, writes metrics CSV and
// checkpoints under cfg.out_dir.
TrainOutcome run_train(const ExperimentConfig& cfg);

// Loads a policy checkpoint written by run_train and evaluates it.
double run_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path);

// ---- sweeps -----------------------------------------------------------

struct SweepRow {
  std::string axis;
  double value = 0.0;  // numeric axis value (quality encoded as band midpoint)
  std::string value_label;
  std::uint64_t seed = 0;
  double success = 0.0;
  std::string status;  // "ok" or "failed: <reason>"
};

// One run per (value, seed); methods taken from cfg.method. Writes
// <out>/sweep.csv (per-run rows), <out>/sweep_summary.csv (mean +/- sem) and
// <out>/sweep.svg. Failed runs get a status entry and the sweep continues.
// LAEO_LAB_THREADS caps the number of parallel workers.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const std::string& axis,
                                const std::vector<std::string>& values);

std::string sweep_csv(const std::vector<SweepRow>& rows);

// ---- planning ---------------------------------------------------------

struct PlanCemOutcome {
  std::vector<std::string> task_names;
  std::vector<double> success;  // mean over seeds, per task
  std::vector<double> sem;
  std::vector<double> random_success;  // uniform-action control, per task
};

// Trains a critic on the multitask env's data and evaluates CEM action
// selection on the task suite, plus a random-action control run.
PlanCemOutcome run_plan_cem(const ExperimentConfig& cfg, const TrajectoryDataset& data,
                            const std::vector<std::uint64_t>& seeds, int episodes);

// ---- oracle report ----------------------------------------------------

struct OracleCheck {
  std::string name;
  double residual = 0.0;
  double tol = 0.0;
  bool pass = false;
};

// Tabular identity suite on fixed reference MDPs. gamma_perturb shifts the
// discount on one side of each identity (test hook; 0 = honest check).
std::vector<OracleCheck> oracle_checks(double gamma_perturb = 0.0);

// Prints one line per check with its residual; returns 0 iff all pass.
int run_oracle_check(std::ostream& out, double gamma_perturb = 0.0);

}  // namespace laeo
