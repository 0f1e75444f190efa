#pragma once

#include "laeo/critic.hpp"

namespace laeo {

struct CemConfig {
  int iterations = 10;
  int population = 10000;
  int elites = 2000;
  std::uint64_t seed = 0;
  double std_floor = 1e-6;
  // Score candidates by mean f (default) or by mean e^f (log-sum-exp
  // stabilized); with a single success example the two are argmax-equivalent.
  bool exp_scores = false;

  void validate() const;
};

// Generic CEM over a scoring function: sample a diagonal-Gaussian population
// clipped to the action box, keep the top `elites`, refit mean/std, return
// the final mean clipped to the box. Deterministic per seed; scores reduced
// in index order.
using PopulationScore = std::function<Vec(const Mat& actions)>;
Vec cem_optimize(const PopulationScore& score, const Vec& act_low, const Vec& act_high,
                 const CemConfig& cfg, Rng& rng);

// Action selection directly on the trained critic: the candidate score is
// the (mean over success examples of) f(state, a, s*).
Vec cem_action(const ContrastiveCritic& critic, const Env& env, const Vec& state,
               const SuccessSet& success, const CemConfig& cfg, Rng& rng);

// One desk-scale downstream task: reach the target with the agent, or (push
// variant) deliver the block to the target.
struct PlannerTask {
  std::string name;
  Vec target;               // 2-dim
  bool block_target = false;
  double radius = 0.04;
};

struct TaskResult {
  std::string name;
  double success_rate = 0.0;
  double stderr_over_seeds = 0.0;
};

// Per-task CEM control with a critic trained on a single task's data,
// conditioned on one success example per task harvested from `source`.
// `episodes` rollouts per (task, seed); results averaged over seeds.
std::vector<TaskResult> multitask_eval(const ContrastiveCritic& critic, const PointMass& env,
                                       const std::vector<PlannerTask>& tasks,
                                       const TrajectoryDataset& source, const CemConfig& cem,
                                       int episodes, const std::vector<std::uint64_t>& seeds,
                                       bool random_baseline = false);

// Default desk-scale task suite for the push2d environment.
std::vector<PlannerTask> default_task_suite();

// First dataset state realizing the task outcome (the conditioning example).
// Throws if the task's outcome never occurs in the data.
Vec harvest_task_example(const TrajectoryDataset& source, const PointMass& env,
                         const PlannerTask& task);

}  // namespace laeo
