#include "apo/harness/metrics.hpp"

#include <algorithm>
#include <sstream>

#include "apo/common/error.hpp"

namespace apo::harness {

using nlohmann::json;

MetricsWriter::MetricsWriter(const std::filesystem::path& run_dir) : dir_(run_dir) {
  std::filesystem::create_directories(run_dir);
  out_.open(run_dir / kMetricsFile, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error("metrics: cannot open " + (run_dir / kMetricsFile).string());
}

void MetricsWriter::write(const json& record) {
  if (!out_.is_open()) return;
  out_ << record.dump() << '\n';
  out_.flush();
}

void MetricsWriter::write_run_header(const json& header) {
  if (dir_.empty()) return;
  auto path = dir_ / kRunHeaderFile;
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << header.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

RunMetrics parse_metrics(const std::string& body) {
  RunMetrics m;
  std::istringstream in(body);
  std::string line;
  bool saw_header = false;
  std::uint64_t last_step = 0;
  while (std::getline(in, line)) {
    const bool last_line = in.peek() == std::char_traits<char>::eof();
    const bool terminated = !in.eof();
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception&) {
      if (last_line && !terminated) break;  // interrupted mid-write
      throw RejectedInput("metrics: malformed record: " + line.substr(0, 80));
    }
    const std::string kind = rec.value("record", "");
    if (kind == "header") {
      if (rec.value("schema", "") != kMetricsSchema)
        throw RejectedInput("metrics: unexpected schema");
      if (rec.value("version", 0) != kMetricsVersion)
        throw RejectedInput("metrics: unsupported schema version");
      m.run_id = rec.at("run_id").get<std::string>();
      m.agent_mode = rec.at("agent").get<std::string>();
      m.env_id = rec.at("env").get<std::string>();
      m.env_group = rec.at("env_group").get<std::string>();
      m.seed = rec.at("seed").get<std::uint64_t>();
      m.config = rec.at("config");
      saw_header = true;
    } else if (kind == "episode") {
      const auto step = rec.at("global_step").get<std::uint64_t>();
      if (!m.series.empty() && step <= last_step)
        throw RejectedInput("metrics: global_step not strictly increasing");
      last_step = step;
      m.series.emplace_back(step, rec.at("return").get<double>());
    } else if (kind == "iteration") {
      m.iterations = rec.at("iteration").get<std::size_t>();
      m.global_step = rec.at("global_step").get<std::uint64_t>();
    } else if (kind == "final") {
      m.completed = true;
      m.final_eval_return = rec.at("eval_mean").get<double>();
      m.final_eval_std = rec.at("eval_std").get<double>();
      m.eval_returns = rec.at("eval_returns").get<std::vector<double>>();
    } else if (kind == "failed") {
      m.failed = true;
      m.error = rec.value("error", "");
    } else {
      throw RejectedInput("metrics: unknown record kind '" + kind + "'");
    }
  }
  if (!saw_header) throw RejectedInput("metrics: missing header record");
  return m;
}

RunMetrics read_run(const std::filesystem::path& run_dir) {
  std::ifstream in(run_dir / kMetricsFile, std::ios::binary);
  if (!in) throw RejectedInput("metrics: cannot open " + (run_dir / kMetricsFile).string());
  std::ostringstream buf;
  buf << in.rdbuf();
  RunMetrics m = parse_metrics(buf.str());
  std::ifstream hdr(run_dir / kRunHeaderFile);
  if (hdr) {
    try {
      const json h = json::parse(hdr);
      m.duration_s = h.value("duration_s", 0.0);
    } catch (const json::exception&) {
      // header is informational only
    }
  }
  return m;
}

std::vector<RunMetrics> read_runs(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> dirs;
  if (std::filesystem::exists(root / kMetricsFile)) dirs.push_back(root);
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().filename() == kMetricsFile &&
        entry.path().parent_path() != root)
      dirs.push_back(entry.path().parent_path());
  std::sort(dirs.begin(), dirs.end());
  std::vector<RunMetrics> runs;
  runs.reserve(dirs.size());
  for (const auto& d : dirs) runs.push_back(read_run(d));
  return runs;
}

}  // namespace apo::harness
