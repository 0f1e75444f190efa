#include "laeo/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace laeo {

namespace {
double clip(double x, double lo, double hi) { return x < lo ? lo : (x > hi ? hi : x); }
}  // namespace

GridWorld::GridWorld(GridWorldConfig cfg) : cfg_(cfg) {
  if (cfg_.width <= 0 || cfg_.height <= 0) throw std::invalid_argument("GridWorld: bad size");
  if (cfg_.slip_prob < 0.0 || cfg_.slip_prob >= 1.0)
    throw std::invalid_argument("GridWorld: slip_prob out of [0,1)");
  if (cfg_.goal_cell < 0) cfg_.goal_cell = n_states() - 1;
  if (cfg_.goal_cell >= n_states()) throw std::invalid_argument("GridWorld: goal out of range");
  id_ = "grid" + std::to_string(cfg_.width);
}

// Half-open cells around the four discrete actions, so a squashed
// continuous policy can express every action in the interior of the box.
Vec GridWorld::action_low() const { return Vec::Constant(1, -0.5); }
Vec GridWorld::action_high() const { return Vec::Constant(1, 3.5); }

Vec GridWorld::reset(Rng& rng) const {
  Vec s(1);
  s[0] = static_cast<double>(rng.uniform_int(n_states()));
  return s;
}

int GridWorld::move(int cell, int action) const {
  const int x = cell % cfg_.width;
  const int y = cell / cfg_.width;
  int nx = x, ny = y;
  switch (action) {
    case 0: ny = y + 1; break;  // up
    case 1: ny = y - 1; break;  // down
    case 2: nx = x - 1; break;  // left
    case 3: nx = x + 1; break;  // right
    default: throw std::invalid_argument("GridWorld: action out of {0,1,2,3}");
  }
  if (nx < 0 || nx >= cfg_.width || ny < 0 || ny >= cfg_.height) return cell;  // wall
  return ny * cfg_.width + nx;
}

std::pair<Vec, bool> GridWorld::step(const Vec& state, const Vec& action, Rng& rng) const {
  const int cell = static_cast<int>(state[0]);
  if (cell < 0 || cell >= n_states()) throw std::invalid_argument("GridWorld: state out of range");
  if (action[0] < -0.5 - 1e-12 || action[0] > 3.5 + 1e-12)
    throw std::invalid_argument("GridWorld: action outside [-0.5, 3.5]");
  const int a = std::clamp(static_cast<int>(std::lround(action[0])), 0, 3);
  Vec next(1);
  if (cfg_.absorbing && cell == cfg_.goal_cell) {
    next[0] = static_cast<double>(cell);
    return {next, true};
  }
  int exec = a;
  if (cfg_.slip_prob > 0.0 && rng.uniform() < cfg_.slip_prob) {
    // a uniformly random *other* action executes
    int k = static_cast<int>(rng.uniform_int(3));
    exec = (k >= a) ? k + 1 : k;
  }
  const int nc = move(cell, exec);
  next[0] = static_cast<double>(nc);
  return {next, nc == cfg_.goal_cell};
}

bool GridWorld::is_success(const Vec& state) const {
  return static_cast<int>(state[0]) == cfg_.goal_cell;
}

Vec GridWorld::encode_state(const Vec& state) const {
  Vec e = Vec::Zero(n_states());
  e[static_cast<int>(state[0])] = 1.0;
  return e;
}

Vec GridWorld::encode_action(const Vec& action) const {
  Vec e = Vec::Zero(4);
  e[std::clamp(static_cast<int>(std::lround(action[0])), 0, 3)] = 1.0;
  return e;
}

Vec GridWorld::action_encode_scale() const {
  throw std::logic_error("GridWorld: one-hot action encoding has no elementwise Jacobian");
}

std::vector<Mat> GridWorld::transition_tensor() const {
  const int S = n_states();
  std::vector<Mat> T(4, Mat::Zero(S, S));
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < 4; ++a) {
      if (cfg_.absorbing && s == cfg_.goal_cell) {
        T[a](s, s) = 1.0;
        continue;
      }
      T[a](s, move(s, a)) += 1.0 - cfg_.slip_prob;
      for (int other = 0; other < 4; ++other) {
        if (other == a) continue;
        T[a](s, move(s, other)) += cfg_.slip_prob / 3.0;
      }
    }
  }
  return T;
}

TabularMdp GridWorld::to_tabular(const Mat& behavior) const {
  TabularMdp mdp;
  mdp.n_states = n_states();
  mdp.n_actions = 4;
  mdp.T = transition_tensor();
  mdp.behavior = behavior;
  mdp.p0 = Vec::Constant(n_states(), 1.0 / n_states());
  mdp.gamma = cfg_.gamma;
  mdp.validate();
  return mdp;
}

Mat GridWorld::uniform_behavior() const { return Mat::Constant(n_states(), 4, 0.25); }

PointMass::PointMass(PointMassConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.goal.size() != 2) throw std::invalid_argument("PointMass: goal must be 2-dim");
  if (cfg_.horizon <= 0) throw std::invalid_argument("PointMass: horizon");
  if (cfg_.task == PointMassConfig::Task::push_block && !is_push())
    throw std::invalid_argument("PointMass: push_block task requires the push variant");
  if (cfg_.agent_start_lo.size() != 2) {
    cfg_.agent_start_lo = (Vec(2) << 0.05, 0.05).finished();
    cfg_.agent_start_hi = (Vec(2) << 0.95, 0.95).finished();
  }
  if (is_push() && cfg_.block_start.size() != 2)
    cfg_.block_start = (Vec(2) << 0.5, 0.5).finished();
  id_ = !cfg_.id_override.empty() ? cfg_.id_override : (is_push() ? "push2d" : "reach2d");
}

PointMass PointMass::reach2d() {
  PointMassConfig cfg;
  cfg.variant = PointMassConfig::Variant::reach;
  cfg.goal = (Vec(2) << 0.8, 0.8).finished();
  return PointMass(cfg);
}

PointMass PointMass::push2d() {
  PointMassConfig cfg;
  cfg.variant = PointMassConfig::Variant::push;
  cfg.task = PointMassConfig::Task::push_block;
  cfg.goal = (Vec(2) << 0.62, 0.5).finished();
  cfg.success_radius = 0.06;
  // Short push with a tight deadline: the scripted expert finishes in about
  // 9-15 steps, so policies that merely average noisy data run out of time.
  cfg.horizon = 28;
  cfg.agent_start_lo = (Vec(2) << 0.05, 0.30).finished();
  cfg.agent_start_hi = (Vec(2) << 0.30, 0.70).finished();
  return PointMass(cfg);
}

PointMass PointMass::multitask2d() {
  PointMassConfig cfg;
  cfg.variant = PointMassConfig::Variant::push;
  cfg.task = PointMassConfig::Task::reach_agent;
  cfg.goal = (Vec(2) << 0.7, 0.5).finished();
  cfg.success_radius = 0.05;
  cfg.horizon = 60;
  cfg.agent_start_lo = (Vec(2) << 0.05, 0.45).finished();
  cfg.agent_start_hi = (Vec(2) << 0.12, 0.55).finished();
  cfg.block_jitter = 0.02;
  cfg.id_override = "multitask2d";
  return PointMass(cfg);
}

Vec PointMass::action_low() const { return Vec::Constant(2, -cfg_.action_limit); }
Vec PointMass::action_high() const { return Vec::Constant(2, cfg_.action_limit); }

Vec PointMass::encode_action(const Vec& action) const { return action / cfg_.action_limit; }
Vec PointMass::action_encode_scale() const { return Vec::Constant(2, 1.0 / cfg_.action_limit); }

Vec PointMass::reset(Rng& rng) const {
  Vec s(state_dim());
  s[0] = rng.uniform(cfg_.agent_start_lo[0], cfg_.agent_start_hi[0]);
  s[1] = rng.uniform(cfg_.agent_start_lo[1], cfg_.agent_start_hi[1]);
  if (is_push()) {
    s[2] = cfg_.block_start[0] + rng.uniform(-cfg_.block_jitter, cfg_.block_jitter);
    s[3] = cfg_.block_start[1] + rng.uniform(-cfg_.block_jitter, cfg_.block_jitter);
  }
  return s;
}

std::pair<Vec, bool> PointMass::step(const Vec& state, const Vec& action, Rng& rng) const {
  if (state.size() != state_dim()) throw std::invalid_argument("PointMass: state dim");
  if (action.size() != 2) throw std::invalid_argument("PointMass: action dim");
  const double lim = cfg_.action_limit;
  if (action[0] < -lim - 1e-12 || action[0] > lim + 1e-12 || action[1] < -lim - 1e-12 ||
      action[1] > lim + 1e-12)
    throw std::invalid_argument("PointMass: action outside the action box");

  Vec next = state;
  next[0] = clip(state[0] + action[0], 0.0, 1.0);
  next[1] = clip(state[1] + action[1], 0.0, 1.0);
  if (is_push()) {
    Eigen::Vector2d agent(next[0], next[1]);
    Eigen::Vector2d block(state[2], state[3]);
    Eigen::Vector2d delta = block - agent;
    const double d = delta.norm();
    if (d < cfg_.contact_radius) {
      // Block is displaced just enough to keep contact separation.
      Eigen::Vector2d dir = (d > 1e-12) ? Eigen::Vector2d(delta / d) : Eigen::Vector2d(1.0, 0.0);
      block = agent + dir * cfg_.contact_radius;
      block[0] = clip(block[0], 0.0, 1.0);
      block[1] = clip(block[1], 0.0, 1.0);
    }
    next[2] = block[0];
    next[3] = block[1];
  }
  if (cfg_.obs_noise_std > 0.0) {
    for (long i = 0; i < next.size(); ++i)
      next[i] = clip(next[i] + rng.normal(0.0, cfg_.obs_noise_std), 0.0, 1.0);
  }
  return {next, is_success(next)};
}

bool PointMass::is_success(const Vec& state) const {
  return target_reached(state, cfg_.goal, cfg_.task == PointMassConfig::Task::push_block);
}

bool PointMass::target_reached(const Vec& state, const Vec& target, bool block_target) const {
  const int off = block_target ? 2 : 0;
  if (block_target && !is_push()) throw std::invalid_argument("PointMass: no block in reach variant");
  const double dx = state[off] - target[0];
  const double dy = state[off + 1] - target[1];
  return std::sqrt(dx * dx + dy * dy) <= cfg_.success_radius;
}

namespace {

Vec reach_expert(const PointMass& env, const Eigen::Vector2d& pos, const Eigen::Vector2d& target) {
  const double lim = env.config().action_limit;
  const double speed = 0.8 * lim;  // below the box edge so actions stay interior
  Eigen::Vector2d to = target - pos;
  const double d = to.norm();
  Vec a = Vec::Zero(2);
  if (d < 1e-9) return a;
  Eigen::Vector2d v = to / d * std::min(speed, d);
  a[0] = clip(v[0], -lim, lim);
  a[1] = clip(v[1], -lim, lim);
  return a;
}

Vec push_expert(const PointMass& env, const Vec& state) {
  const auto& cfg = env.config();
  Eigen::Vector2d agent(state[0], state[1]);
  Eigen::Vector2d block(state[2], state[3]);
  Eigen::Vector2d goal(cfg.goal[0], cfg.goal[1]);
  Eigen::Vector2d push_dir = goal - block;
  if (push_dir.norm() < 1e-9) return Vec::Zero(2);
  push_dir.normalize();
  const Eigen::Vector2d perp(-push_dir[1], push_dir[0]);
  const Eigen::Vector2d rel = agent - block;
  const double along = rel.dot(push_dir);  // > 0: agent on the goal side of the block
  const double across = rel.dot(perp);
  const double r = cfg.contact_radius;

  // Contact displaces the block along the agent->block axis, so the agent
  // must stay on the push line while closing in. Aiming at a point just
  // short of the block's center keeps correcting lateral drift every step.
  if (along < -r * 0.4 && std::abs(across) < r * 0.3)
    return reach_expert(env, agent, block - push_dir * (r * 0.5));
  // Beside or on the goal side of the block: swing wide to a waypoint well
  // behind and off-axis so the detour never bumps the block.
  if (along > -r * 0.4) {
    const double side = (across >= 0.0) ? 1.0 : -1.0;
    return reach_expert(env, agent, block - push_dir * (r * 2.0) + perp * (side * r * 2.0));
  }
  // Safely behind but misaligned: line up on the push axis outside contact.
  return reach_expert(env, agent, block - push_dir * (r * 2.0));
}

}  // namespace

Vec expert_action(const Env& env, const Vec& state) {
  if (const auto* gw = dynamic_cast<const GridWorld*>(&env)) {
    const int cell = static_cast<int>(state[0]);
    const int gx = gw->goal_cell() % gw->config().width;
    const int gy = gw->goal_cell() / gw->config().width;
    const int x = cell % gw->config().width;
    const int y = cell / gw->config().width;
    Vec a(1);
    if (x != gx)
      a[0] = (gx > x) ? 3.0 : 2.0;
    else if (y != gy)
      a[0] = (gy > y) ? 0.0 : 1.0;
    else
      a[0] = 0.0;
    return a;
  }
  const auto& pm = dynamic_cast<const PointMass&>(env);
  if (pm.config().task == PointMassConfig::Task::push_block) return push_expert(pm, state);
  return reach_expert(pm, Eigen::Vector2d(state[0], state[1]),
                      Eigen::Vector2d(pm.config().goal[0], pm.config().goal[1]));
}

Vec scripted_policy_action(const Env& env, const BehaviorPolicy& policy, const Vec& state, Rng& rng) {
  if (env.discrete_actions()) {
    const bool random = policy.kind == BehaviorPolicy::Kind::uniform_random ||
                        (policy.kind == BehaviorPolicy::Kind::epsilon_expert && rng.uniform() < policy.epsilon);
    if (random) {
      Vec a(1);
      a[0] = static_cast<double>(rng.uniform_int(4));
      return a;
    }
    return expert_action(env, state);
  }

  const Vec lo = env.action_low();
  const Vec hi = env.action_high();
  const bool random = policy.kind == BehaviorPolicy::Kind::uniform_random ||
                      (policy.kind == BehaviorPolicy::Kind::epsilon_expert && rng.uniform() < policy.epsilon);
  if (random) {
    Vec a(env.action_dim());
    for (long i = 0; i < a.size(); ++i) a[i] = rng.uniform(lo[i], hi[i]);
    return a;
  }
  Vec a = expert_action(env, state);
  if (policy.noise_std > 0.0) {
    for (long i = 0; i < a.size(); ++i) a[i] = clip(a[i] + rng.normal(0.0, policy.noise_std), lo[i], hi[i]);
  }
  return a;
}

std::unique_ptr<Env> make_env(const std::string& env_id) {
  if (env_id == "grid5") return std::make_unique<GridWorld>(GridWorldConfig{});
  if (env_id == "reach2d") return std::make_unique<PointMass>(PointMass::reach2d());
  if (env_id == "push2d") return std::make_unique<PointMass>(PointMass::push2d());
  if (env_id == "multitask2d") return std::make_unique<PointMass>(PointMass::multitask2d());
  throw std::invalid_argument("unknown env id: " + env_id);
}

}  // namespace laeo
