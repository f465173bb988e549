#include "apo/harness/report.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "apo/common/error.hpp"
#include "apo/nn/checkpoint.hpp"

namespace apo::harness {

namespace {

void write_file(const std::filesystem::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("report: cannot write " + p.string());
  out << body;
}

}  // namespace

std::vector<ComparisonRow> comparison_rows(const std::vector<RunMetrics>& runs, GroupBy by) {
  std::vector<std::tuple<std::string, std::string, std::string>> order;
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> cells;
  for (const auto& r : runs) {
    if (!r.completed) continue;
    const std::string group = by == GroupBy::env_type ? r.env_group : r.env_id;
    std::tuple key{group, r.env_id, r.agent_mode};
    auto [it, fresh] = cells.try_emplace(key);
    if (fresh) order.push_back(key);
    it->second.push_back(r.final_eval_return);
  }
  std::vector<ComparisonRow> rows;
  for (const auto& key : order) {
    const auto& xs = cells.at(key);
    ComparisonRow row{std::get<0>(key), std::get<1>(key), std::get<2>(key), xs.size(), 0.0, 0.0};
    double sum = 0.0;
    for (double x : xs) sum += x;
    row.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
      double ss = 0.0;
      for (double x : xs) ss += (x - row.mean) * (x - row.mean);
      row.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    rows.push_back(row);
  }
  return rows;
}

ReportFiles emit_report(const std::vector<RunMetrics>& runs, const std::filesystem::path& out_dir,
                        GroupBy by) {
  std::size_t completed = 0;
  for (const auto& r : runs) completed += r.completed ? 1 : 0;
  if (completed == 0) throw RejectedInput("report: no completed runs");

  ReportFiles f;
  std::filesystem::create_directories(out_dir / "series");
  for (const auto& r : runs) {
    std::ostringstream s;
    s << "global_step,return\n";
    for (const auto& [step, ret] : r.series) s << step << ',' << nn::format_real(ret) << '\n';
    auto p = out_dir / "series" / (r.run_id + ".csv");
    write_file(p, s.str());
    f.series.push_back(p);
  }

  const auto rows = comparison_rows(runs, by);
  f.scores = normalized_score(rows);
  f.comparison_csv = out_dir / "comparison.csv";
  f.comparison_md = out_dir / "comparison.md";
  f.scores_csv = out_dir / "scores.csv";
  f.scores_md = out_dir / "scores.md";
  write_file(f.comparison_csv, comparison_csv(rows));
  write_file(f.comparison_md,
             "Final return (deterministic policy mean, mean ± std over seeds, n = seeds)\n\n" +
                 comparison_markdown(rows));
  write_file(f.scores_csv, scores_csv(f.scores));
  write_file(f.scores_md, "PPO-normalized score\n\n" + scores_markdown(f.scores));
  return f;
}

}  // namespace apo::harness
