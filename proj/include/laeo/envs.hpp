#pragma once

#include <memory>
#include <string>
#include <utility>

#include "laeo/oracle.hpp"
#include "laeo/rng.hpp"

namespace laeo {

// Desk-scale environments used to generate offline datasets. Environments are
// value-like: step() takes the current state explicitly and never mutates the
// env object, so one instance can back many independent rollouts (but a
// single rollout must not be stepped concurrently).
class Env {
 public:
  virtual ~Env() = default;

  virtual std::string id() const = 0;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual int horizon() const = 0;
  virtual bool discrete_actions() const = 0;

  // Action box (continuous envs). For discrete envs the box is [0, n_actions).
  virtual Vec action_low() const = 0;
  virtual Vec action_high() const = 0;

  virtual Vec reset(Rng& rng) const = 0;
  // Out-of-box actions are rejected with an error, never silently clipped.
  virtual std::pair<Vec, bool> step(const Vec& state, const Vec& action, Rng& rng) const = 0;
  virtual bool is_success(const Vec& state) const = 0;

  // Feature encodings handed to function approximators (identity for
  // continuous envs, one-hot for tabular ones).
  virtual Vec encode_state(const Vec& state) const { return state; }
  virtual Vec encode_action(const Vec& action) const { return action; }
  virtual int encoded_state_dim() const { return state_dim(); }
  virtual int encoded_action_dim() const { return action_dim(); }
  // Diagonal Jacobian d(encoded_action)/d(raw_action). Only defined for
  // elementwise-linear action encodings; discrete envs throw.
  virtual Vec action_encode_scale() const { return Vec::Ones(action_dim()); }
};

// Gridworld actions: 0=up, 1=down, 2=left, 3=right.
struct GridWorldConfig {
  int width = 5;
  int height = 5;
  double slip_prob = 0.1;  // probability a uniformly random *other* action executes
  int goal_cell = -1;      // default: last cell
  bool absorbing = true;
  double gamma = 0.9;
  int horizon = 200;
};

class GridWorld : public Env {
 public:
  explicit GridWorld(GridWorldConfig cfg);

  std::string id() const override { return id_; }
  int state_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  int horizon() const override { return cfg_.horizon; }
  bool discrete_actions() const override { return true; }
  Vec action_low() const override;
  Vec action_high() const override;
  Vec reset(Rng& rng) const override;
  std::pair<Vec, bool> step(const Vec& state, const Vec& action, Rng& rng) const override;
  bool is_success(const Vec& state) const override;

  Vec encode_state(const Vec& state) const override;
  Vec encode_action(const Vec& action) const override;
  int encoded_state_dim() const override { return n_states(); }
  int encoded_action_dim() const override { return 4; }
  Vec action_encode_scale() const override;

  int n_states() const { return cfg_.width * cfg_.height; }
  int n_actions() const { return 4; }
  int goal_cell() const { return cfg_.goal_cell; }
  double gamma() const { return cfg_.gamma; }
  const GridWorldConfig& config() const { return cfg_; }

  // Transition tensor T[a](s, s'); every row sums to exactly 1.
  std::vector<Mat> transition_tensor() const;
  // Package as a TabularMdp under a given behavior policy (rows sum to 1).
  TabularMdp to_tabular(const Mat& behavior) const;
  // Uniform-random behavior matrix.
  Mat uniform_behavior() const;

 private:
  int move(int cell, int action) const;
  GridWorldConfig cfg_;
  std::string id_;
};

struct PointMassConfig {
  enum class Variant { reach, push };
  // Task: what the success predicate (and the scripted expert) cares about.
  // reach_agent targets the agent position, push_block the block position;
  // push_block requires the push variant.
  enum class Task { reach_agent, push_block };
  Variant variant = Variant::reach;
  Task task = Task::reach_agent;
  int horizon = 50;
  double success_radius = 0.05;
  double obs_noise_std = 0.0;
  double contact_radius = 0.06;
  double action_limit = 0.05;
  Vec goal;                      // agent target or block target, per task
  Vec agent_start_lo, agent_start_hi;
  Vec block_start;               // push variant
  double block_jitter = 0.03;
  std::string id_override;
};

// Single-integrator point mass in the unit box; the push variant appends a
// block that is displaced on contact.
class PointMass : public Env {
 public:
  explicit PointMass(PointMassConfig cfg);

  static PointMass reach2d();
  static PointMass push2d();
  // Push-variant dynamics with a reach task: the multitask planner suite
  // trains on this env's data so block contact appears in the dataset.
  static PointMass multitask2d();

  std::string id() const override { return id_; }
  int state_dim() const override { return is_push() ? 4 : 2; }
  int action_dim() const override { return 2; }
  int horizon() const override { return cfg_.horizon; }
  bool discrete_actions() const override { return false; }
  Vec action_low() const override;
  Vec action_high() const override;
  Vec reset(Rng& rng) const override;
  std::pair<Vec, bool> step(const Vec& state, const Vec& action, Rng& rng) const override;
  bool is_success(const Vec& state) const override;

  // Actions are tiny relative to the unit-box states; rescaling to [-1, 1]
  // keeps the action input at the same magnitude as the state features.
  Vec encode_action(const Vec& action) const override;
  Vec action_encode_scale() const override;

  bool is_push() const { return cfg_.variant == PointMassConfig::Variant::push; }
  const PointMassConfig& config() const { return cfg_; }

  // Success with respect to an arbitrary target: distance of the agent
  // (reach tasks) or the block (push tasks) to `target`. Used by the
  // multitask planner suite.
  bool target_reached(const Vec& state, const Vec& target, bool block_target) const;

 private:
  PointMassConfig cfg_;
  std::string id_;
};

// Scripted behavior policies of configurable quality.
struct BehaviorPolicy {
  enum class Kind { scripted_noisy_expert, uniform_random, epsilon_expert };
  Kind kind = Kind::scripted_noisy_expert;
  double noise_std = 0.0;  // Gaussian action noise (continuous envs)
  double epsilon = 0.0;    // probability of a uniform-random action
};

// Emitted actions always lie in the env's action box.
Vec scripted_policy_action(const Env& env, const BehaviorPolicy& policy, const Vec& state, Rng& rng);

// Noise-free expert action (exposed for tests).
Vec expert_action(const Env& env, const Vec& state);

std::unique_ptr<Env> make_env(const std::string& env_id);

}  // namespace laeo
