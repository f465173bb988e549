#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace apo::harness {

// One cell of a comparison table: an agent's mean final return on one
// environment across `seeds` runs.
struct ComparisonRow {
  std::string group;
  std::string env;
  std::string agent;
  std::size_t seeds = 0;
  double mean = 0.0;
  double std = 0.0;
};

struct GroupScore {
  std::string group;
  std::string agent;
  double score = 0.0;
  std::size_t envs = 0;  // environments that entered the average
};

struct ScoreReport {
  std::vector<ComparisonRow> rows;
  std::vector<GroupScore> scores;        // group order, then agent order, as first seen
  std::vector<std::string> excluded;     // "group/env" with missing or non-positive PPO mean
  std::vector<std::string> warnings;

  // Throws RejectedInput if (group, agent) has no score.
  double score(const std::string& group, const std::string& agent) const;
};

inline constexpr const char* kBaselineAgent = "ppo";

// agent_score(env) = agent_mean / ppo_mean, averaged over the envs of each
// group. Envs whose PPO mean is missing or <= 0 are excluded with a warning.
// The baseline itself is assigned 1.0 rather than computed.
ScoreReport normalized_score(const std::vector<ComparisonRow>& rows);

// CSV with header "group,env,agent,seeds,mean,std". Reals use shortest
// round-trip form so parse(write(x)) == x.
std::string comparison_csv(const std::vector<ComparisonRow>& rows);
std::vector<ComparisonRow> parse_comparison_csv(const std::string& text);
std::vector<ComparisonRow> read_comparison_csv(const std::filesystem::path& path);

std::string comparison_markdown(const std::vector<ComparisonRow>& rows);
std::string scores_csv(const ScoreReport& r);
std::string scores_markdown(const ScoreReport& r);

}  // namespace apo::harness
