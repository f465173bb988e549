#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "apo/harness/metrics.hpp"
#include "apo/harness/score.hpp"

namespace apo::harness {

enum class GroupBy { env_type, env };

// Mean and sample std of final eval returns per (group, env, agent) over the
// completed runs; cells keep their own seed counts.
std::vector<ComparisonRow> comparison_rows(const std::vector<RunMetrics>& runs, GroupBy by);

struct ReportFiles {
  std::vector<std::filesystem::path> series;
  std::filesystem::path comparison_csv, comparison_md, scores_csv, scores_md;
  ScoreReport scores;
};

// Writes series/<run_id>.csv, comparison.{csv,md} and scores.{csv,md} into
// out_dir. Requires at least one completed run.
ReportFiles emit_report(const std::vector<RunMetrics>& runs, const std::filesystem::path& out_dir,
                        GroupBy by = GroupBy::env_type);

}  // namespace apo::harness
