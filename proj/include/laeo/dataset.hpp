#pragma once

#include <map>
#include <string>
#include <vector>

#include "laeo/envs.hpp"

namespace laeo {

// One fixed-horizon rollout: states has length T+1, actions and
// success_flags length T. success_flags[t] refers to states[t+1].
struct Trajectory {
  std::vector<Vec> states;
  std::vector<Vec> actions;
  std::vector<bool> success_flags;

  int length() const { return static_cast<int>(actions.size()); }
  bool successful() const;
  void validate() const;
};

struct TrajectoryDataset {
  std::vector<Trajectory> trajectories;
  std::string env_id;
  std::map<std::string, std::string> metadata;  // generation config, measured success rate

  int state_dim() const;
  int action_dim() const;
  int horizon() const;
  long total_states() const;
  double success_rate() const;  // fraction of successful trajectories
  void validate() const;
};

struct SuccessSet {
  std::vector<Vec> states;
  std::string env_id;

  void validate(int expected_dim) const;
};

// Anchors, geometric future-state positives, and marginal negatives for one
// gradient step of contrastive training.
struct ContrastiveBatch {
  std::vector<Vec> anchor_states;              // size B
  std::vector<Vec> anchor_actions;             // size B
  std::vector<Vec> positives;                  // size B
  std::vector<std::vector<Vec>> negatives;     // B x K
  std::vector<int> anchor_traj;                // trajectory id per anchor
  std::vector<int> anchor_t;                   // timestep per anchor
  std::vector<int> positive_offset;            // sampled k per anchor
};

// Draw k over {0, ..., T-t} with P(k) proportional to gamma^k (truncated
// geometric over the remaining suffix; k=0 included) and return states[t+k].
std::pair<Vec, int> sample_future_state(const Trajectory& traj, int t, double gamma, Rng& rng);

// Anchors uniform over (trajectory, timestep); positives via
// sample_future_state; negatives uniform over all dataset states.
ContrastiveBatch sample_batch(const TrajectoryDataset& data, int batch_size, int negatives_per_anchor,
                              double gamma, Rng& rng);

// Line-delimited text format: a header record, then one trajectory per line.
// Numeric round-trip is bit-exact. Malformed input raises a parse error
// carrying the line number.
void save_dataset(const TrajectoryDataset& data, const std::string& path);
TrajectoryDataset load_dataset(const std::string& path);

void save_success_set(const SuccessSet& set, int state_dim, const std::string& path);
SuccessSet load_success_set(const std::string& path);

// State binning for density estimates: tabular envs use the identity
// (bin = state index), continuous envs a regular grid over the unit box.
struct StateBinning {
  bool tabular = false;
  int n_tabular_states = 0;
  int resolution = 10;  // per-dimension bins for continuous states
  int state_dim = 0;

  static StateBinning for_gridworld(int n_states);
  static StateBinning grid(int state_dim, int resolution);

  int n_bins() const;
  int bin_of(const Vec& state) const;
};

// Normalized visit-frequency table over bins; nonnegative, sums to 1.
Vec empirical_state_density(const TrajectoryDataset& data, const StateBinning& binning);

// Rollout helpers used by data collection.
Trajectory rollout(const Env& env, const BehaviorPolicy& policy, Rng& rng);
TrajectoryDataset collect_dataset(const Env& env, const BehaviorPolicy& policy, int n_trajectories,
                                  std::uint64_t seed);

}  // namespace laeo
