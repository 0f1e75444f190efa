#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "laeo/config.hpp"
#include "laeo/metrics.hpp"
#include "laeo/svg_plot.hpp"

using namespace laeo;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("parse_config: round-trips through to_json") {
  ExperimentConfig cfg;
  cfg.env_id = "push2d";
  cfg.method = "oril";
  cfg.seed = 42;
  cfg.critic.steps = 1234;
  cfg.collect.quality = "hard";
  cfg.sweep_seeds = {3, 7};
  const ExperimentConfig back = parse_config(to_json(cfg));
  CHECK(back.env_id == "push2d");
  CHECK(back.method == "oril");
  CHECK(back.seed == 42);
  CHECK(back.critic.steps == 1234);
  CHECK(back.collect.quality == "hard");
  REQUIRE(back.sweep_seeds.size() == 2);
  CHECK(back.sweep_seeds[1] == 7);
}

TEST_CASE("parse_config: unknown keys and malformed JSON are errors") {
  CHECK_THROWS(parse_config("{\"not_a_key\": 1}"));
  CHECK_THROWS(parse_config("{\"critic\": {\"step\": 10}}"));  // typo inside a section
  CHECK_THROWS(parse_config("{\"env_id\": "));                 // truncated
}

TEST_CASE("apply_override: dotted paths, type coercion, bad paths") {
  ExperimentConfig cfg;
  apply_override(cfg, "critic.steps=4000");
  CHECK(cfg.critic.steps == 4000);
  apply_override(cfg, "env_id=push2d");  // bare string, no quotes needed
  CHECK(cfg.env_id == "push2d");
  apply_override(cfg, "policy.lambda=0.25");
  CHECK(cfg.policy.lambda == doctest::Approx(0.25));
  apply_override(cfg, "record_wall_clock=true");
  CHECK(cfg.record_wall_clock);
  CHECK_THROWS(apply_override(cfg, "no_such_field=3"));
  CHECK_THROWS(apply_override(cfg, "critic.steps"));  // missing '='
}

TEST_CASE("config validate and derived paths") {
  ExperimentConfig cfg;
  cfg.out_dir = "run7";
  CHECK(cfg.dataset_file() == "run7/dataset.txt");
  CHECK(cfg.success_file() == "run7/success.txt");
  cfg.dataset_path = "elsewhere.txt";
  CHECK(cfg.dataset_file() == "elsewhere.txt");

  ExperimentConfig bad;
  bad.method = "dqn";
  CHECK_THROWS(bad.validate());
  bad = ExperimentConfig{};
  bad.eval_episodes = 0;
  CHECK_THROWS(bad.validate());
  bad = ExperimentConfig{};
  bad.gamma = 1.0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("metrics csv: round-trip and byte identity") {
  std::vector<MetricsRow> rows(2);
  rows[0] = {0, 1.5, 0.0, 0.0, 3, "laeo", "reach2d"};
  rows[1] = {500, 0.75, 0.42, 0.0, 3, "laeo", "reach2d"};

  const std::string a = metrics_csv(rows);
  const std::string b = metrics_csv(rows);
  CHECK(a == b);
  CHECK(a.rfind("step,loss,eval_success_rate,wall_clock_s,seed,method,env_id\n", 0) == 0);

  const std::string path = "test_metrics_tmp.csv";
  write_metrics_csv(path, rows);
  const auto back = read_metrics_csv(path);
  REQUIRE(back.size() == 2);
  CHECK(back[1].step == 500);
  CHECK(back[1].loss == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(back[1].eval_success_rate == doctest::Approx(0.42).epsilon(1e-12));
  CHECK(back[1].method == "laeo");
  CHECK(slurp(path) == a);
  std::remove(path.c_str());
}

TEST_CASE("metrics csv: invalid success rate rejected") {
  std::vector<MetricsRow> rows(1);
  rows[0].eval_success_rate = 1.5;
  CHECK_THROWS(metrics_csv(rows));
}

TEST_CASE("read_metrics_csv: malformed file is an error") {
  const std::string path = "test_metrics_bad.csv";
  {
    std::ofstream out(path, std::ios::binary);
    out << "step,loss,eval_success_rate,wall_clock_s,seed,method,env_id\n";
    out << "1,2.0,not_a_number,0,0,laeo,reach2d\n";
  }
  CHECK_THROWS(read_metrics_csv(path));
  std::remove(path.c_str());
  CHECK_THROWS(read_metrics_csv("does_not_exist.csv"));
}

TEST_CASE("mean_stderr: hand-computed values") {
  const auto ms = mean_stderr({1.0, 2.0, 3.0, 4.0});
  CHECK(ms.mean == doctest::Approx(2.5).epsilon(1e-12));
  // Sample variance 5/3, sem = sqrt(5/3)/2.
  CHECK(ms.sem == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-12));
  const auto single = mean_stderr({7.0});
  CHECK(single.mean == 7.0);
  CHECK(single.sem == 0.0);
  CHECK_THROWS(mean_stderr({}));
}

TEST_CASE("write_svg_plot: produces a plausible SVG file") {
  PlotSeries s;
  s.label = "laeo";
  s.xs = {1.0, 2.0, 3.0};
  s.ys = {0.1, 0.5, 0.9};
  s.yerr = {0.02, 0.03, 0.01};
  const std::string path = "test_plot_tmp.svg";
  write_svg_plot(path, "success vs examples", "examples", "success rate", {s});
  const std::string body = slurp(path);
  CHECK(body.find("<svg") != std::string::npos);
  CHECK(body.find("laeo") != std::string::npos);
  CHECK(body.find("polyline") != std::string::npos);
  std::remove(path.c_str());

  CHECK_THROWS(write_svg_plot(path, "t", "x", "y", {}));
  PlotSeries bad = s;
  bad.ys.pop_back();
  CHECK_THROWS(write_svg_plot(path, "t", "x", "y", {bad}));
}
