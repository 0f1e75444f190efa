// laeo_lab: data collection, training, evaluation, sweeps, CEM planning and
// tabular identity checks for the example-based offline control library.
#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "laeo/harness.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON experiment config");
  cmd->add_option("--seed", args.seed, "experiment seed (overrides the config)");
  cmd->add_option("--out", args.out, "output directory (overrides the config)");
  cmd->add_option("--override", args.overrides, "dotted-path override, e.g. critic.steps=4000")
      ->take_all();
}

laeo::ExperimentConfig resolve(const CommonArgs& args) {
  laeo::ExperimentConfig cfg;
  if (!args.config_path.empty()) cfg = laeo::load_config(args.config_path);
  for (const std::string& ov : args.overrides) laeo::apply_override(cfg, ov);
  if (args.seed) cfg.seed = *args.seed;
  if (!args.out.empty()) cfg.out_dir = args.out;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale example-based offline control lab"};
  app.require_subcommand(1);

  CommonArgs collect_args, train_args, eval_args, sweep_args, plan_args;

  CLI::App* collect = app.add_subcommand("collect", "calibrate a behavior policy and write dataset files");
  add_common(collect, collect_args);

  CLI::App* train = app.add_subcommand("train", "train the configured method on collected data");
  add_common(train, train_args);

  CLI::App* eval = app.add_subcommand("eval", "evaluate a saved policy checkpoint");
  std::string eval_ckpt;
  add_common(eval, eval_args);
  eval->add_option("--checkpoint", eval_ckpt, "policy checkpoint path")->required();

  CLI::App* sweep = app.add_subcommand("sweep", "ablation sweep over one experimental axis");
  std::string sweep_axis;
  std::vector<std::string> sweep_values;
  add_common(sweep, sweep_args);
  sweep->add_option("--axis", sweep_axis, "n_success | n_trajectories | quality")->required();
  sweep->add_option("--values", sweep_values, "axis values")->required()->take_all();

  CLI::App* plan = app.add_subcommand("plan-cem", "multitask CEM evaluation on the task suite");
  int plan_episodes = 20;
  add_common(plan, plan_args);
  plan->add_option("--episodes", plan_episodes, "episodes per (task, seed)");

  CLI::App* oracle = app.add_subcommand("oracle-check", "run the tabular identity suite");
  double gamma_perturb = 0.0;
  oracle->add_option("--gamma-perturb", gamma_perturb,
                     "shift the discount on one side of each identity (sensitivity hook)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (collect->parsed()) {
      const laeo::ExperimentConfig cfg = resolve(collect_args);
      const laeo::CollectResult res = laeo::run_collect(cfg);
      std::printf("collected %d trajectories on %s: success rate %.4f (noise %.4f)\n",
                  cfg.collect.n_trajectories, cfg.env_id.c_str(), res.measured_success, res.noise);
      std::printf("dataset: %s\nsuccess set (%zu states): %s\n", cfg.dataset_file().c_str(),
                  res.success.states.size(), cfg.success_file().c_str());
    } else if (train->parsed()) {
      const laeo::ExperimentConfig cfg = resolve(train_args);
      const laeo::TrainOutcome res = laeo::run_train(cfg);
      std::printf("%s on %s (seed %llu): final success rate %.4f\n", cfg.method.c_str(),
                  cfg.env_id.c_str(), static_cast<unsigned long long>(cfg.seed), res.final_success);
      std::printf("metrics: %s/metrics.csv\ncheckpoint: %s/policy.ckpt\n", cfg.out_dir.c_str(),
                  cfg.out_dir.c_str());
    } else if (eval->parsed()) {
      const laeo::ExperimentConfig cfg = resolve(eval_args);
      const double rate = laeo::run_eval(cfg, eval_ckpt);
      std::printf("%s: success rate %.4f over %d episodes\n", cfg.env_id.c_str(), rate,
                  cfg.eval_episodes);
    } else if (sweep->parsed()) {
      const laeo::ExperimentConfig cfg = resolve(sweep_args);
      const std::vector<laeo::SweepRow> rows = laeo::run_sweep(cfg, sweep_axis, sweep_values);
      int failed = 0;
      for (const laeo::SweepRow& r : rows)
        if (r.status != "ok") ++failed;
      std::printf("sweep over %s: %zu runs, %d failed\n", sweep_axis.c_str(), rows.size(), failed);
      std::printf("results: %s/sweep.csv, %s/sweep_summary.csv, %s/sweep.svg\n",
                  cfg.out_dir.c_str(), cfg.out_dir.c_str(), cfg.out_dir.c_str());
    } else if (plan->parsed()) {
      const laeo::ExperimentConfig cfg = resolve(plan_args);
      const laeo::TrajectoryDataset data = laeo::load_dataset(cfg.dataset_file());
      const laeo::PlanCemOutcome res =
          laeo::run_plan_cem(cfg, data, cfg.sweep_seeds, plan_episodes);
      std::printf("%-14s %10s %8s %10s\n", "task", "success", "sem", "random");
      for (std::size_t i = 0; i < res.task_names.size(); ++i)
        std::printf("%-14s %10.4f %8.4f %10.4f\n", res.task_names[i].c_str(), res.success[i],
                    res.sem[i], res.random_success[i]);
    } else if (oracle->parsed()) {
      return laeo::run_oracle_check(std::cout, gamma_perturb);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
