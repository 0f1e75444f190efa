#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace laeo {

// One training/eval log row. wall_clock_s stays 0 unless timing is enabled,
// so repeated runs with the same seed produce byte-identical files.
struct MetricsRow {
  long step = 0;
  double loss = 0.0;
  double eval_success_rate = 0.0;  // in [0, 1]
  double wall_clock_s = 0.0;
  std::uint64_t seed = 0;
  std::string method;
  std::string env_id;
};

std::string metrics_csv(const std::vector<MetricsRow>& rows);
void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

// Mean and standard error of a sample (sem is 0 for a single value).
struct MeanStderr {
  double mean = 0.0;
  double sem = 0.0;
};
MeanStderr mean_stderr(const std::vector<double>& xs);

}  // namespace laeo
