#include "laeo/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace laeo {

void CemConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("CemConfig: iterations >= 1");
  if (elites < 1 || elites > population) throw std::invalid_argument("CemConfig: 1 <= elites <= population");
}

Vec cem_optimize(const PopulationScore& score, const Vec& act_low, const Vec& act_high,
                 const CemConfig& cfg, Rng& rng) {
  cfg.validate();
  const int dim = static_cast<int>(act_low.size());
  Vec mean = 0.5 * (act_low + act_high);  // zero action for a symmetric box
  Vec stddev = 0.5 * (act_high - act_low);
  Mat pop(cfg.population, dim);
  std::vector<int> order(cfg.population);

  for (int it = 0; it < cfg.iterations; ++it) {
    for (int i = 0; i < cfg.population; ++i)
      for (int j = 0; j < dim; ++j) {
        double x = mean[j] + stddev[j] * rng.normal();
        pop(i, j) = std::clamp(x, act_low[j], act_high[j]);
      }
    const Vec scores = score(pop);
    if (scores.size() != cfg.population) throw std::runtime_error("cem_optimize: bad score size");
    std::iota(order.begin(), order.end(), 0);
    // stable sort on (score desc, index asc) keeps elite selection
    // bit-identical however the scores were computed
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    Vec new_mean = Vec::Zero(dim);
    for (int e = 0; e < cfg.elites; ++e) new_mean += pop.row(order[e]).transpose();
    new_mean /= static_cast<double>(cfg.elites);
    Vec var = Vec::Zero(dim);
    for (int e = 0; e < cfg.elites; ++e) {
      const Vec d = pop.row(order[e]).transpose() - new_mean;
      var += d.cwiseProduct(d);
    }
    var /= static_cast<double>(cfg.elites);
    mean = new_mean;
    stddev = var.cwiseSqrt().cwiseMax(cfg.std_floor);
  }
  for (int j = 0; j < dim; ++j) mean[j] = std::clamp(mean[j], act_low[j], act_high[j]);
  return mean;
}

Vec cem_action(const ContrastiveCritic& critic, const Env& env, const Vec& state,
               const SuccessSet& success, const CemConfig& cfg, Rng& rng) {
  if (success.states.empty()) throw std::invalid_argument("cem_action: empty success set");
  const int sd = env.encoded_state_dim();
  const Vec es = env.encode_state(state);
  Mat SF(static_cast<long>(success.states.size()), sd);
  for (size_t i = 0; i < success.states.size(); ++i)
    SF.row(static_cast<long>(i)) = env.encode_state(success.states[i]);
  const Mat Psi = critic.psi.forward(SF);

  const int ad = env.encoded_action_dim();
  auto score = [&](const Mat& actions) -> Vec {
    Mat SA(actions.rows(), sd + ad);
    for (long i = 0; i < actions.rows(); ++i) {
      SA.row(i).head(sd) = es;
      SA.row(i).tail(ad) = env.encode_action(actions.row(i).transpose());
    }
    const Mat Phi = critic.phi.forward(SA);
    const Mat F = Phi * Psi.transpose();  // population x n_examples
    Vec out(actions.rows());
    if (!cfg.exp_scores) {
      out = F.rowwise().mean();
    } else {
      for (long i = 0; i < F.rows(); ++i) {
        const double mx = F.row(i).maxCoeff();
        double acc = 0.0;
        for (long k = 0; k < F.cols(); ++k) acc += std::exp(F(i, k) - mx);
        out[i] = mx + std::log(acc / static_cast<double>(F.cols()));
      }
    }
    return out;
  };
  return cem_optimize(score, env.action_low(), env.action_high(), cfg, rng);
}

std::vector<PlannerTask> default_task_suite() {
  auto vec2 = [](double x, double y) { return (Vec(2) << x, y).finished(); };
  std::vector<PlannerTask> tasks;
  tasks.push_back({"reach-medium", vec2(0.70, 0.50), false});  // training task
  tasks.push_back({"reach-near", vec2(0.40, 0.50), false});
  tasks.push_back({"reach-far", vec2(0.82, 0.50), false});
  tasks.push_back({"reach-corner", vec2(0.60, 0.66), false});
  tasks.push_back({"push-near", vec2(0.60, 0.50), true});
  tasks.push_back({"push-far", vec2(0.68, 0.50), true});
  return tasks;
}

Vec harvest_task_example(const TrajectoryDataset& source, const PointMass& env,
                         const PlannerTask& task) {
  const int off = task.block_target ? 2 : 0;
  if (task.block_target && !env.is_push())
    throw std::invalid_argument("harvest_task_example: block task in reach env");
  for (const auto& traj : source.trajectories) {
    for (const auto& s : traj.states) {
      const double dx = s[off] - task.target[0];
      const double dy = s[off + 1] - task.target[1];
      if (std::sqrt(dx * dx + dy * dy) <= task.radius) return s;
    }
  }
  throw std::runtime_error("harvest_task_example: task '" + task.name +
                           "' never occurs in the source dataset");
}

std::vector<TaskResult> multitask_eval(const ContrastiveCritic& critic, const PointMass& env,
                                       const std::vector<PlannerTask>& tasks,
                                       const TrajectoryDataset& source, const CemConfig& cem,
                                       int episodes, const std::vector<std::uint64_t>& seeds,
                                       bool random_baseline) {
  if (episodes <= 0 || seeds.empty()) throw std::invalid_argument("multitask_eval: bad eval spec");
  std::vector<TaskResult> results;
  for (const auto& task : tasks) {
    SuccessSet example;
    example.env_id = env.id();
    if (!random_baseline) example.states.push_back(harvest_task_example(source, env, task));

    std::vector<double> per_seed;
    for (std::uint64_t seed : seeds) {
      Rng root(seed);
      int hits = 0;
      for (int e = 0; e < episodes; ++e) {
        Rng rng = root.split(static_cast<std::uint64_t>(e));
        Vec s = env.reset(rng);
        bool ok = false;
        for (int t = 0; t < env.horizon() && !ok; ++t) {
          Vec a;
          if (random_baseline) {
            a = Vec(env.action_dim());
            for (long j = 0; j < a.size(); ++j)
              a[j] = rng.uniform(env.action_low()[j], env.action_high()[j]);
          } else {
            Rng cem_rng = rng.split(1000 + static_cast<std::uint64_t>(t));
            a = cem_action(critic, env, s, example, cem, cem_rng);
          }
          auto [next, env_success] = env.step(s, a, rng);
          (void)env_success;
          s = std::move(next);
          const int off = task.block_target ? 2 : 0;
          const double dx = s[off] - task.target[0];
          const double dy = s[off + 1] - task.target[1];
          ok = std::sqrt(dx * dx + dy * dy) <= task.radius;
        }
        if (ok) ++hits;
      }
      per_seed.push_back(static_cast<double>(hits) / static_cast<double>(episodes));
    }
    TaskResult r;
    r.name = task.name;
    const double n = static_cast<double>(per_seed.size());
    r.success_rate = std::accumulate(per_seed.begin(), per_seed.end(), 0.0) / n;
    double var = 0.0;
    for (double x : per_seed) var += (x - r.success_rate) * (x - r.success_rate);
    r.stderr_over_seeds = per_seed.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace laeo
