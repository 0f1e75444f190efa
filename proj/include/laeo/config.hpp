#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "laeo/baselines.hpp"
#include "laeo/critic.hpp"
#include "laeo/planner.hpp"
#include "laeo/policy.hpp"

namespace laeo {

// Data-collection settings for one environment.
struct CollectConfig {
  int n_trajectories = 1000;
  std::string quality = "medium";  // "medium" or "hard": target success-rate band
  int n_success_examples = 200;
  int calib_episodes = 300;  // rollouts per probe when calibrating the behavior policy
  double noise_std = 0.01;   // residual Gaussian action noise on expert steps
  double fixed_noise = -1.0;  // >= 0: skip calibration and use this noise level
};

// Top-level experiment settings shared by the CLI subcommands.
struct ExperimentConfig {
  std::string env_id = "reach2d";
  std::string method = "laeo";  // laeo | oril | purl | bc
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string dataset_path;  // empty: <out_dir>/dataset.txt
  std::string success_path;  // empty: <out_dir>/success.txt
  int eval_episodes = 100;
  bool record_wall_clock = false;  // off by default so metrics files are reproducible

  CollectConfig collect;
  CriticTrainConfig critic;
  PolicyTrainConfig policy;
  ClassifierTrainConfig classifier;
  McCriticTrainConfig mc_critic;
  CemConfig cem;
  double gamma = 0.95;

  std::vector<std::uint64_t> sweep_seeds = {0, 1, 2, 3, 4};

  void validate() const;
  std::string dataset_file() const;
  std::string success_file() const;
};

// Loads a config from a JSON file. Unknown keys are an error so typos fail fast.
ExperimentConfig load_config(const std::string& path);

// Parses a JSON string into a config (used by load_config and the tests).
ExperimentConfig parse_config(const std::string& json_text, const std::string& origin = "<string>");

// Applies a dotted-path override such as "critic.steps=4000" or "env_id=push2d".
// The value is parsed as JSON when possible, otherwise taken as a string.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

std::string to_json(const ExperimentConfig& cfg);

}  // namespace laeo
