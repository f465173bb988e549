// apo: train / evaluate / report / score from the command line.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "apo/common/error.hpp"
#include "apo/harness/config_io.hpp"
#include "apo/harness/experiment.hpp"
#include "apo/harness/report.hpp"
#include "apo/harness/score.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace apo;

namespace {

fs::path output_root() {
  if (const char* env = std::getenv("APO_OUTPUT_ROOT"); env && *env) return env;
  return "runs";
}

struct TrainArgs {
  std::string env = "pointmass";
  std::string agent;
  std::optional<std::uint64_t> seed, total_timesteps;
  std::size_t noisy_dim = 0;
  double noise_std = 1.0;
  std::string config_file;
  std::string out;
  std::string run_id;
  bool no_augment = false;
  bool identity_perturber = false;
  bool parallel = false;
};

int cmd_train(const TrainArgs& a) {
  harness::ExperimentSpec spec;
  if (!a.config_file.empty()) harness::apply_json(spec.cfg, harness::load_json_file(a.config_file));
  if (!a.agent.empty()) spec.cfg.agent_mode = ppo::agent_mode_from_string(a.agent);
  if (a.seed) spec.cfg.seed = *a.seed;
  if (a.total_timesteps) spec.cfg.total_timesteps = *a.total_timesteps;
  if (a.no_augment) spec.cfg.apo_augment = false;
  if (a.identity_perturber) spec.cfg.identity_perturber = true;
  if (a.parallel) spec.cfg.exec = kernels::Exec::parallel;
  spec.env_id = a.env;
  if (a.noisy_dim > 0) {
    env::NoisyWrapConfig n;
    n.target_dim = a.noisy_dim;
    n.noise_std = a.noise_std;
    spec.noisy = n;
  }
  spec.run_id = a.run_id.empty() ? harness::default_run_id(spec) : a.run_id;
  spec.out_dir = a.out.empty() ? output_root() / spec.run_id : fs::path(a.out);

  const harness::RunMetrics m = harness::run_experiment(spec);
  json summary{{"run_id", m.run_id},
               {"out", spec.out_dir.string()},
               {"agent", m.agent_mode},
               {"env", m.env_id},
               {"seed", m.seed},
               {"global_step", m.global_step},
               {"episodes", m.series.size()},
               {"duration_s", m.duration_s}};
  if (m.failed) {
    summary["status"] = "failed";
    summary["error"] = m.error;
    std::cerr << json{{"error", {{"kind", "non_finite"}, {"message", m.error}}}}.dump() << '\n';
    std::cout << summary.dump(2) << '\n';
    return 3;
  }
  summary["status"] = "completed";
  summary["final_eval_return"] = m.final_eval_return;
  summary["final_eval_std"] = m.final_eval_std;
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int cmd_evaluate(const std::string& checkpoint, std::size_t episodes, std::optional<std::uint64_t> seed) {
  harness::LoadedAgent la = harness::load_agent(checkpoint);
  auto environment = env::make_env(la.env_id, la.noisy);
  const std::uint64_t eval_seed =
      seed ? *seed : mix_seed(la.seed, static_cast<std::uint64_t>(Stream::eval));
  const harness::EvalResult r = harness::evaluate(la.ac, *environment, episodes, eval_seed,
                                                  la.normalizer ? &*la.normalizer : nullptr);
  std::cout << json{{"env", harness::env_label(la.env_id, la.noisy)},
                    {"episodes", episodes},
                    {"mean", r.mean},
                    {"std", r.std},
                    {"returns", r.returns},
                    {"policy", "deterministic-mean"}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_report(const std::string& runs_dir, const std::string& group_by, const std::string& out) {
  harness::GroupBy by;
  if (group_by == "env-type")
    by = harness::GroupBy::env_type;
  else if (group_by == "env")
    by = harness::GroupBy::env;
  else
    throw ConfigError("--group-by must be env-type or env");
  const auto runs = harness::read_runs(runs_dir);
  const fs::path dest = out.empty() ? fs::path(runs_dir) / "report" : fs::path(out);
  const auto files = harness::emit_report(runs, dest, by);
  std::cout << files.scores.rows.size() << " cells from " << runs.size() << " runs -> "
            << dest.string() << "\n\n"
            << harness::comparison_markdown(files.scores.rows) << '\n'
            << harness::scores_markdown(files.scores);
  return 0;
}

int cmd_score(const std::string& table, bool as_json) {
  const auto rows = harness::read_comparison_csv(table);
  const auto rep = harness::normalized_score(rows);
  if (as_json) {
    json j = json::array();
    for (const auto& s : rep.scores)
      j.push_back({{"group", s.group}, {"agent", s.agent}, {"score", s.score}, {"envs", s.envs}});
    std::cout << json{{"scores", j}, {"excluded", rep.excluded}, {"warnings", rep.warnings}}.dump(2)
              << '\n';
  } else {
    std::cout << harness::scores_markdown(rep);
  }
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"apo: PPO agents with an observation perturber"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train one agent on one environment");
  train->add_option("--env", ta.env, "pointmass | linstab")->capture_default_str();
  train->add_option("--agent", ta.agent, "ppo | rad | drac | apo");
  train->add_option("--seed", ta.seed);
  train->add_option("--total-timesteps", ta.total_timesteps);
  train->add_option("--noisy-dim", ta.noisy_dim, "wrap observations to this many dims (0: off)");
  train->add_option("--noise-std", ta.noise_std)->capture_default_str();
  train->add_option("--config", ta.config_file, "JSON config overlay");
  train->add_option("--out", ta.out, "run directory (default $APO_OUTPUT_ROOT/<run-id>)");
  train->add_option("--run-id", ta.run_id);
  train->add_flag("--no-augment", ta.no_augment, "APO without amplitude scaling");
  train->add_flag("--identity-perturber", ta.identity_perturber);
  train->add_flag("--parallel", ta.parallel, "OpenMP loss kernels");

  std::string checkpoint;
  std::size_t episodes = 10;
  std::optional<std::uint64_t> eval_seed;
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint");
  evaluate->add_option("--checkpoint", checkpoint)->required();
  evaluate->add_option("--episodes", episodes)->capture_default_str();
  evaluate->add_option("--seed", eval_seed);

  std::string runs_dir, group_by = "env-type", report_out;
  auto* report = app.add_subcommand("report", "aggregate run directories into tables");
  report->add_option("--runs", runs_dir)->required();
  report->add_option("--group-by", group_by)->capture_default_str();
  report->add_option("--out", report_out);

  std::string table;
  bool score_json = false;
  auto* score = app.add_subcommand("score", "PPO-normalized scores from a comparison table");
  score->add_option("--table", table)->required();
  score->add_flag("--json", score_json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() != 0)
      std::cerr << json{{"error", {{"kind", "usage"}, {"message", e.what()}}}}.dump() << '\n';
    return app.exit(e);
  }

  try {
    if (*train) return cmd_train(ta);
    if (*evaluate) return cmd_evaluate(checkpoint, episodes, eval_seed);
    if (*report) return cmd_report(runs_dir, group_by, report_out);
    if (*score) return cmd_score(table, score_json);
  } catch (const Error& e) {
    std::cerr << json{{"error", {{"kind", e.kind()}, {"message", e.what()}}}}.dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"kind", "internal"}, {"message", e.what()}}}}.dump() << '\n';
    return 1;
  }
  return 1;
}
