#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "apo/common/error.hpp"
#include "apo/harness/config_io.hpp"
#include "apo/harness/experiment.hpp"
#include "apo/harness/metrics.hpp"
#include "apo/harness/report.hpp"
#include "apo/harness/score.hpp"

using namespace apo;
using namespace apo::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("apo_unit_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentSpec tiny_spec(ppo::AgentMode mode) {
  ExperimentSpec s;
  s.cfg.agent_mode = mode;
  s.cfg.rollout_steps = 256;
  s.cfg.num_minibatches = 4;
  s.cfg.update_epochs = 2;
  s.cfg.total_timesteps = 1024;
  s.cfg.eval_episodes = 2;
  s.cfg.seed = 3;
  return s;
}

RunMetrics fake_run(std::string env, std::string group, std::string agent, std::uint64_t seed,
                    double final_return) {
  RunMetrics m;
  m.env_id = std::move(env);
  m.env_group = std::move(group);
  m.agent_mode = std::move(agent);
  m.seed = seed;
  m.run_id = m.env_id + "_" + m.agent_mode + "_s" + std::to_string(seed);
  m.completed = true;
  m.final_eval_return = final_return;
  m.series = {{500, final_return / 2}, {1000, final_return}};
  return m;
}

}  // namespace

TEST_CASE("normalized score: ratio of means averaged over a group") {
  const std::vector<ComparisonRow> rows{
      {"g", "a", "ppo", 5, 2.0, 0.1}, {"g", "a", "apo", 5, 3.0, 0.1},
      {"g", "b", "ppo", 5, 4.0, 0.1}, {"g", "b", "apo", 5, 2.0, 0.1},
  };
  const auto r = normalized_score(rows);
  CHECK(r.score("g", "apo") == doctest::Approx((1.5 + 0.5) / 2));
  CHECK(r.score("g", "ppo") == 1.0);
  CHECK(r.excluded.empty());
}

TEST_CASE("normalized score: baseline is exactly one for arbitrary inputs") {
  Rng rng(1);
  std::uniform_real_distribution<double> u(1e-3, 1e3);
  for (int t = 0; t < 20; ++t) {
    std::vector<ComparisonRow> rows;
    for (int e = 0; e < 7; ++e) {
      const double m = u(rng);
      rows.push_back({"g", "e" + std::to_string(e), "ppo", 3, m, 0});
      rows.push_back({"g", "e" + std::to_string(e), "copy", 3, m, 0});
      rows.push_back({"g", "e" + std::to_string(e), "other", 3, u(rng), 0});
    }
    const auto r = normalized_score(rows);
    CHECK(r.score("g", "ppo") == 1.0);
    CHECK(r.score("g", "copy") == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("normalized score: non-positive baseline envs are excluded with a warning") {
  const std::vector<ComparisonRow> rows{
      {"g", "a", "ppo", 5, -2.0, 0.1}, {"g", "a", "apo", 5, 3.0, 0.1},
      {"g", "b", "ppo", 5, 4.0, 0.1},  {"g", "b", "apo", 5, 2.0, 0.1},
      {"g", "c", "apo", 5, 9.0, 0.1},
  };
  const auto r = normalized_score(rows);
  CHECK(r.score("g", "apo") == 0.5);
  CHECK(r.excluded == std::vector<std::string>{"g/a", "g/c"});
  CHECK(r.warnings.size() == 2);
  CHECK_THROWS_AS(normalized_score({{"g", "a", "ppo", 1, 1, 0}, {"g", "a", "ppo", 1, 1, 0}}),
                  RejectedInput);
}

TEST_CASE("comparison CSV round-trips exactly") {
  const std::vector<ComparisonRow> rows{{"noisy", "x", "ppo", 5, 1.0 / 3.0, 0.1},
                                        {"noisy", "x", "apo", 4, 123.456789012345, 1e-9}};
  const auto back = parse_comparison_csv(comparison_csv(rows));
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].mean == rows[i].mean);
    CHECK(back[i].std == rows[i].std);
    CHECK(back[i].seeds == rows[i].seeds);
  }
  CHECK_THROWS_AS(parse_comparison_csv("a,b\n"), RejectedInput);
  CHECK_THROWS_AS(parse_comparison_csv("group,env,agent,seeds,mean,std\ng,e,ppo,1,abc,0\n"),
                  RejectedInput);
}

TEST_CASE("report: single run gives one series file and a one-row table") {
  const auto dir = scratch("report1");
  const auto files = emit_report({fake_run("pointmass", "clean", "ppo", 1, 400.0)}, dir);
  CHECK(files.series.size() == 1);
  CHECK(parse_comparison_csv(slurp(files.comparison_csv)).size() == 1);
  CHECK(slurp(files.series[0]) == "global_step,return\n500,200\n1000,400\n");
  CHECK(fs::exists(files.scores_md));
  fs::remove_all(dir);
}

TEST_CASE("report: agents x envs x seeds cells, per-cell seed counts, round trip") {
  std::vector<RunMetrics> runs;
  const std::vector<std::string> agents{"ppo", "rad", "drac", "apo"};
  for (const auto& env : {"pointmass", "pointmass-noisy32"})
    for (const auto& a : agents)
      for (std::uint64_t s = 1; s <= 5; ++s)
        runs.push_back(fake_run(env, std::string(env).find("noisy") != std::string::npos ? "noisy" : "clean", a, s,
                                100.0 + 10.0 * s + static_cast<double>(a.size())));
  runs.pop_back();  // one partial cell
  const auto dir = scratch("report2");
  const auto files = emit_report(runs, dir);
  const auto rows = parse_comparison_csv(slurp(files.comparison_csv));
  CHECK(rows.size() == 8);
  std::size_t five = 0, four = 0;
  for (const auto& r : rows) (r.seeds == 5 ? five : four) += 1;
  CHECK(five == 7);
  CHECK(four == 1);
  const auto ppo = std::find_if(rows.begin(), rows.end(), [](auto& r) { return r.agent == "ppo"; });
  CHECK(ppo->mean == doctest::Approx(133.0));
  CHECK(ppo->std == doctest::Approx(std::sqrt(250.0)));

  const auto again = normalized_score(rows);
  REQUIRE(again.scores.size() == files.scores.scores.size());
  for (std::size_t i = 0; i < again.scores.size(); ++i)
    CHECK(again.scores[i].score == files.scores.scores[i].score);
  CHECK(slurp(files.comparison_md).find("(n=4)") != std::string::npos);
  fs::remove_all(dir);

  std::vector<RunMetrics> none{fake_run("x", "clean", "ppo", 1, 1.0)};
  none[0].completed = false;
  CHECK_THROWS_AS(emit_report(none, scratch("report3")), RejectedInput);
}

TEST_CASE("config overlay: known keys applied, unknown keys rejected") {
  ppo::TrainConfig c;
  apply_json(c, nlohmann::json{{"learning_rate", 1e-3}, {"agent_mode", "drac"}});
  CHECK(c.learning_rate == 1e-3);
  CHECK(c.agent_mode == ppo::AgentMode::drac);
  CHECK_THROWS_AS(apply_json(c, nlohmann::json{{"learning_rat", 1e-3}}), ConfigError);
  CHECK_THROWS_AS(apply_json(c, nlohmann::json{{"gamma", "high"}}), ConfigError);
  ppo::TrainConfig d;
  apply_json(d, to_json(c));
  CHECK(to_json(d) == to_json(c));
}

TEST_CASE("metrics parser: partial trailing line is dropped, other damage is an error") {
  const std::string header =
      R"({"record":"header","schema":"apo-metrics","version":1,"run_id":"r","agent":"ppo","env":"e","env_group":"clean","seed":1,"config":{}})";
  const std::string ep1 = R"({"record":"episode","global_step":500,"return":1.5})";
  const std::string ep2 = R"({"record":"episode","global_step":1000,"return":2.5})";
  auto m = parse_metrics(header + "\n" + ep1 + "\n" + ep2.substr(0, 20));
  CHECK(m.series.size() == 1);
  CHECK_FALSE(m.completed);
  CHECK_THROWS_AS(parse_metrics(header + "\n" + ep1.substr(0, 20) + "\n" + ep2 + "\n"), RejectedInput);
  CHECK_THROWS_AS(parse_metrics(header + "\n" + ep2 + "\n" + ep1 + "\n"), RejectedInput);
  CHECK_THROWS_AS(parse_metrics(ep1 + "\n"), RejectedInput);
  auto bad = header;
  bad.replace(bad.find("\"version\":1"), 11, "\"version\":9");
  CHECK_THROWS_AS(parse_metrics(bad + "\n"), RejectedInput);
}

TEST_CASE("evaluate: zero policy on a zero-start linear system returns zero") {
  policy::ActorCritic ac(8, 2, 1);
  for (std::size_t l = 0; l < ac.policy_net.num_layers(); ++l)
    for (double& w : ac.policy_net.mutable_layer_parameters(l)) w = 0.0;
  env::LinearStabilize e(0.0);
  const auto r = evaluate(ac, e, 10, 5);
  CHECK(r.returns.size() == 10);
  CHECK(r.mean == 0.0);
  CHECK(r.std == 0.0);
}

TEST_CASE("run_experiment writes a complete, reloadable run") {
  const auto dir = scratch("run");
  auto spec = tiny_spec(ppo::AgentMode::apo);
  spec.out_dir = dir;
  const auto m = run_experiment(spec);
  CHECK(m.completed);
  CHECK(m.iterations == 4);
  CHECK(m.global_step == 1024);
  CHECK(m.eval_returns.size() == 2);

  const auto back = read_run(dir);
  CHECK(back.completed);
  CHECK(back.series == m.series);
  CHECK(back.final_eval_return == m.final_eval_return);
  CHECK(back.config == to_json(spec.cfg));

  const auto la = load_agent(dir / kCheckpointFile);
  CHECK(la.env_id == "pointmass");
  env::PointMassReach e;
  const auto ev = evaluate(la.ac, e, 2, mix_seed(3, static_cast<std::uint64_t>(Stream::eval)));
  CHECK(ev.mean == m.final_eval_return);
  fs::remove_all(dir);
}

TEST_CASE("run_experiment is deterministic and the noisy/normalized path works") {
  auto spec = tiny_spec(ppo::AgentMode::drac);
  spec.noisy = env::NoisyWrapConfig{};
  spec.cfg.normalize_obs = true;
  const auto a = scratch("det_a"), b = scratch("det_b");
  spec.out_dir = a;
  run_experiment(spec);
  spec.out_dir = b;
  run_experiment(spec);
  CHECK(slurp(a / kMetricsFile) == slurp(b / kMetricsFile));
  const auto la = load_agent(b / kCheckpointFile);
  CHECK(la.noisy.has_value());
  CHECK(la.normalizer.has_value());
  CHECK(read_run(a).env_group == "noisy");
  fs::remove_all(a);
  fs::remove_all(b);
}
