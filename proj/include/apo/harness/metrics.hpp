#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace apo::harness {

inline constexpr const char* kMetricsSchema = "apo-metrics";
inline constexpr int kMetricsVersion = 1;
inline constexpr const char* kMetricsFile = "metrics.jsonl";
inline constexpr const char* kRunHeaderFile = "run_header.json";
inline constexpr const char* kCheckpointFile = "checkpoint.txt";

struct RunMetrics {
  std::string run_id;
  std::string agent_mode;
  std::string env_id;     // environment label, e.g. "pointmass" or "pointmass-noisy32"
  std::string env_group;  // "clean" or "noisy"
  std::uint64_t seed = 0;
  std::vector<std::pair<std::uint64_t, double>> series;  // (global_step, episodic return)
  std::size_t iterations = 0;
  std::uint64_t global_step = 0;
  bool completed = false;
  bool failed = false;
  std::string error;
  double final_eval_return = 0.0;
  double final_eval_std = 0.0;
  std::vector<double> eval_returns;
  double duration_s = 0.0;  // wall clock; only in the run header
  nlohmann::json config;
};

// Line-delimited JSON metrics body, flushed after every record so that a
// killed run leaves every completed record readable. Wall-clock data goes to
// a separate header file so the body is reproducible byte for byte.
class MetricsWriter {
 public:
  MetricsWriter() = default;
  explicit MetricsWriter(const std::filesystem::path& run_dir);

  bool enabled() const { return out_.is_open(); }
  void write(const nlohmann::json& record);
  void write_run_header(const nlohmann::json& header);

 private:
  std::filesystem::path dir_;
  std::ofstream out_;
};

// Parses a metrics body. A trailing partial line (interrupted write) is
// ignored; any other malformed line is an error.
RunMetrics parse_metrics(const std::string& body);
RunMetrics read_run(const std::filesystem::path& run_dir);

// Every directory below `root` (recursively) that contains a metrics file.
std::vector<RunMetrics> read_runs(const std::filesystem::path& root);

}  // namespace apo::harness
