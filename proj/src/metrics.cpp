#include "laeo/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace laeo {
namespace {

constexpr const char* kHeader = "step,loss,eval_success_rate,wall_clock_s,seed,method,env_id";

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

}  // namespace

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << kHeader << '\n';
  for (const MetricsRow& r : rows) {
    if (!(r.eval_success_rate >= 0.0 && r.eval_success_rate <= 1.0))
      throw std::invalid_argument("metrics: eval_success_rate out of [0,1] at step " +
                                  std::to_string(r.step));
    out << r.step << ',' << fmt(r.loss) << ',' << fmt(r.eval_success_rate) << ','
        << fmt(r.wall_clock_s) << ',' << r.seed << ',' << r.method << ',' << r.env_id << '\n';
  }
  return out.str();
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::binary);  // binary: no newline translation
  if (!out) throw std::runtime_error("metrics: cannot open " + path + " for writing");
  out << metrics_csv(rows);
  if (!out) throw std::runtime_error("metrics: failed writing " + path);
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("metrics: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kHeader)
    throw std::runtime_error("metrics: bad header in " + path);
  std::vector<MetricsRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    MetricsRow r;
    std::string field;
    auto next = [&](const char* what) {
      if (!std::getline(ss, field, ','))
        throw std::runtime_error("metrics: " + path + ":" + std::to_string(lineno) +
                                 ": missing field " + what);
      return field;
    };
    r.step = std::stol(next("step"));
    r.loss = std::stod(next("loss"));
    r.eval_success_rate = std::stod(next("eval_success_rate"));
    r.wall_clock_s = std::stod(next("wall_clock_s"));
    r.seed = std::stoull(next("seed"));
    r.method = next("method");
    r.env_id = next("env_id");
    rows.push_back(std::move(r));
  }
  return rows;
}

MeanStderr mean_stderr(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean_stderr: empty sample");
  MeanStderr out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    const double var = ss / static_cast<double>(xs.size() - 1);
    out.sem = std::sqrt(var / static_cast<double>(xs.size()));
  }
  return out;
}

}  // namespace laeo
