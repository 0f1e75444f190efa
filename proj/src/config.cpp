#include "laeo/config.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace laeo {
namespace {

using json = nlohmann::json;

PolicyObjective objective_from_string(const std::string& s) {
  if (s == "exp_mean") return PolicyObjective::exp_mean;
  if (s == "log_mean_exp") return PolicyObjective::log_mean_exp;
  if (s == "jensen_mean_f") return PolicyObjective::jensen_mean_f;
  throw std::invalid_argument("unknown policy objective: " + s);
}

std::string objective_to_string(PolicyObjective m) {
  switch (m) {
    case PolicyObjective::exp_mean: return "exp_mean";
    case PolicyObjective::log_mean_exp: return "log_mean_exp";
    case PolicyObjective::jensen_mean_f: return "jensen_mean_f";
  }
  throw std::logic_error("bad objective enum");
}

template <typename T>
void take(json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    out = it->get<T>();
    j.erase(it);
  }
}

void reject_unknown(const json& j, const std::string& where) {
  if (!j.empty())
    throw std::invalid_argument("config: unknown key \"" + j.begin().key() + "\" in " + where);
}

void read_collect(json j, CollectConfig& c) {
  take(j, "n_trajectories", c.n_trajectories);
  take(j, "quality", c.quality);
  take(j, "n_success_examples", c.n_success_examples);
  take(j, "calib_episodes", c.calib_episodes);
  take(j, "noise_std", c.noise_std);
  take(j, "fixed_noise", c.fixed_noise);
  reject_unknown(j, "collect");
}

void read_critic(json j, CriticTrainConfig& c) {
  take(j, "batch_size", c.batch_size);
  take(j, "negatives_per_anchor", c.negatives_per_anchor);
  take(j, "gamma", c.gamma);
  take(j, "lr", c.lr);
  take(j, "steps", c.steps);
  take(j, "seed", c.seed);
  take(j, "eval_every", c.eval_every);
  take(j, "hidden", c.hidden);
  take(j, "rep_dim", c.rep_dim);
  reject_unknown(j, "critic");
}

void read_policy(json j, PolicyTrainConfig& c) {
  take(j, "lambda", c.lambda);
  if (auto it = j.find("mode"); it != j.end()) {
    c.mode = objective_from_string(it->get<std::string>());
    j.erase(it);
  }
  take(j, "batch_size", c.batch_size);
  take(j, "lr", c.lr);
  take(j, "steps", c.steps);
  take(j, "seed", c.seed);
  take(j, "eval_every", c.eval_every);
  take(j, "hidden", c.hidden);
  reject_unknown(j, "policy");
}

void read_classifier(json j, ClassifierTrainConfig& c) {
  take(j, "eta", c.eta);
  take(j, "batch_size", c.batch_size);
  take(j, "lr", c.lr);
  take(j, "steps", c.steps);
  take(j, "seed", c.seed);
  take(j, "hidden", c.hidden);
  reject_unknown(j, "classifier");
}

void read_mc_critic(json j, McCriticTrainConfig& c) {
  take(j, "batch_size", c.batch_size);
  take(j, "lr", c.lr);
  take(j, "steps", c.steps);
  take(j, "seed", c.seed);
  take(j, "hidden", c.hidden);
  reject_unknown(j, "mc_critic");
}

void read_cem(json j, CemConfig& c) {
  take(j, "iterations", c.iterations);
  take(j, "population", c.population);
  take(j, "elites", c.elites);
  take(j, "seed", c.seed);
  take(j, "std_floor", c.std_floor);
  take(j, "exp_scores", c.exp_scores);
  reject_unknown(j, "cem");
}

json collect_json(const CollectConfig& c) {
  return {{"n_trajectories", c.n_trajectories},
          {"quality", c.quality},
          {"n_success_examples", c.n_success_examples},
          {"calib_episodes", c.calib_episodes},
          {"noise_std", c.noise_std},
          {"fixed_noise", c.fixed_noise}};
}

}  // namespace

void ExperimentConfig::validate() const {
  if (env_id.empty()) throw std::invalid_argument("config: env_id is empty");
  if (method != "laeo" && method != "oril" && method != "purl" && method != "bc")
    throw std::invalid_argument("config: unknown method \"" + method + "\"");
  if (collect.quality != "medium" && collect.quality != "hard")
    throw std::invalid_argument("config: quality must be medium or hard");
  if (collect.n_trajectories < 1 || collect.n_success_examples < 1)
    throw std::invalid_argument("config: collect sizes must be positive");
  if (eval_episodes < 1) throw std::invalid_argument("config: eval_episodes must be positive");
  if (gamma <= 0.0 || gamma >= 1.0) throw std::invalid_argument("config: gamma must be in (0,1)");
  if (sweep_seeds.empty()) throw std::invalid_argument("config: sweep_seeds is empty");
  cem.validate();
}

std::string ExperimentConfig::dataset_file() const {
  return dataset_path.empty() ? out_dir + "/dataset.txt" : dataset_path;
}

std::string ExperimentConfig::success_file() const {
  return success_path.empty() ? out_dir + "/success.txt" : success_path;
}

ExperimentConfig parse_config(const std::string& json_text, const std::string& origin) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config: failed to parse " + origin + ": " + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level of " + origin + " is not an object");

  ExperimentConfig cfg;
  take(j, "env_id", cfg.env_id);
  take(j, "method", cfg.method);
  take(j, "seed", cfg.seed);
  take(j, "out_dir", cfg.out_dir);
  take(j, "dataset_path", cfg.dataset_path);
  take(j, "success_path", cfg.success_path);
  take(j, "eval_episodes", cfg.eval_episodes);
  take(j, "record_wall_clock", cfg.record_wall_clock);
  take(j, "gamma", cfg.gamma);
  take(j, "sweep_seeds", cfg.sweep_seeds);
  if (auto it = j.find("collect"); it != j.end()) { read_collect(*it, cfg.collect); j.erase(it); }
  if (auto it = j.find("critic"); it != j.end()) { read_critic(*it, cfg.critic); j.erase(it); }
  if (auto it = j.find("policy"); it != j.end()) { read_policy(*it, cfg.policy); j.erase(it); }
  if (auto it = j.find("classifier"); it != j.end()) { read_classifier(*it, cfg.classifier); j.erase(it); }
  if (auto it = j.find("mc_critic"); it != j.end()) { read_mc_critic(*it, cfg.mc_critic); j.erase(it); }
  if (auto it = j.find("cem"); it != j.end()) { read_cem(*it, cfg.cem); j.erase(it); }
  reject_unknown(j, origin);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw std::invalid_argument("override must look like key=value, got \"" + assignment + "\"");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  // Rebuild the config through its JSON form so dotted paths address nested
  // sections uniformly.
  json root = json::parse(to_json(cfg));
  json* node = &root;
  std::size_t pos = 0;
  std::string leaf = key;
  while (true) {
    const auto dot = leaf.find('.');
    if (dot == std::string::npos) break;
    const std::string section = leaf.substr(0, dot);
    if (!node->contains(section))
      throw std::invalid_argument("override: unknown section \"" + section + "\" in " + key);
    node = &(*node)[section];
    leaf = leaf.substr(dot + 1);
    (void)pos;
  }
  if (!node->contains(leaf))
    throw std::invalid_argument("override: unknown key \"" + key + "\"");
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded() || ((*node)[leaf].is_string() && !value.is_string()))
    value = raw;  // bare words like push2d are strings
  (*node)[leaf] = value;
  cfg = parse_config(root.dump(), "override " + key);
}

std::string to_json(const ExperimentConfig& cfg) {
  json j = {
      {"env_id", cfg.env_id},
      {"method", cfg.method},
      {"seed", cfg.seed},
      {"out_dir", cfg.out_dir},
      {"dataset_path", cfg.dataset_path},
      {"success_path", cfg.success_path},
      {"eval_episodes", cfg.eval_episodes},
      {"record_wall_clock", cfg.record_wall_clock},
      {"gamma", cfg.gamma},
      {"sweep_seeds", cfg.sweep_seeds},
      {"collect", collect_json(cfg.collect)},
      {"critic",
       {{"batch_size", cfg.critic.batch_size},
        {"negatives_per_anchor", cfg.critic.negatives_per_anchor},
        {"gamma", cfg.critic.gamma},
        {"lr", cfg.critic.lr},
        {"steps", cfg.critic.steps},
        {"seed", cfg.critic.seed},
        {"eval_every", cfg.critic.eval_every},
        {"hidden", cfg.critic.hidden},
        {"rep_dim", cfg.critic.rep_dim}}},
      {"policy",
       {{"lambda", cfg.policy.lambda},
        {"mode", objective_to_string(cfg.policy.mode)},
        {"batch_size", cfg.policy.batch_size},
        {"lr", cfg.policy.lr},
        {"steps", cfg.policy.steps},
        {"seed", cfg.policy.seed},
        {"eval_every", cfg.policy.eval_every},
        {"hidden", cfg.policy.hidden}}},
      {"classifier",
       {{"eta", cfg.classifier.eta},
        {"batch_size", cfg.classifier.batch_size},
        {"lr", cfg.classifier.lr},
        {"steps", cfg.classifier.steps},
        {"seed", cfg.classifier.seed},
        {"hidden", cfg.classifier.hidden}}},
      {"mc_critic",
       {{"batch_size", cfg.mc_critic.batch_size},
        {"lr", cfg.mc_critic.lr},
        {"steps", cfg.mc_critic.steps},
        {"seed", cfg.mc_critic.seed},
        {"hidden", cfg.mc_critic.hidden}}},
      {"cem",
       {{"iterations", cfg.cem.iterations},
        {"population", cfg.cem.population},
        {"elites", cfg.cem.elites},
        {"seed", cfg.cem.seed},
        {"std_floor", cfg.cem.std_floor},
        {"exp_scores", cfg.cem.exp_scores}}},
  };
  return j.dump(2);
}

}  // namespace laeo
