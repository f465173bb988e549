#include "apo/harness/experiment.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "apo/common/error.hpp"
#include "apo/harness/config_io.hpp"
#include "apo/ppo/gae.hpp"

namespace apo::harness {

using nlohmann::json;

std::string env_label(const std::string& env_id, const std::optional<env::NoisyWrapConfig>& noisy) {
  if (!noisy) return env_id;
  return env_id + "-noisy" + std::to_string(noisy->target_dim);
}

std::string default_run_id(const ExperimentSpec& spec) {
  return env_label(spec.env_id, spec.noisy) + "_" + std::string(ppo::to_string(spec.cfg.agent_mode)) +
         "_s" + std::to_string(spec.cfg.seed);
}

EvalResult evaluate(const policy::ActorCritic& ac, env::Env& environment, std::size_t episodes,
                    std::uint64_t seed, const ppo::ObservationNormalizer* normalizer) {
  EvalResult r;
  r.returns.reserve(episodes);
  auto prepare = [&](std::span<const double> raw) {
    return normalizer ? normalizer->normalize(raw) : std::vector<double>(raw.begin(), raw.end());
  };
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    std::vector<double> obs = prepare(environment.reset(mix_seed(seed, ep)));
    double total = 0.0;
    while (true) {
      const std::vector<double> action = ac.policy_net.predict(obs);
      env::StepResult s = environment.step(action);
      total += s.reward;
      if (s.done()) break;
      obs = prepare(s.next_obs);
    }
    r.returns.push_back(total);
  }
  if (episodes > 0) {
    double sum = 0.0;
    for (double x : r.returns) sum += x;
    r.mean = sum / static_cast<double>(episodes);
    double ss = 0.0;
    for (double x : r.returns) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(episodes));
  }
  return r;
}

nn::Checkpoint make_checkpoint(const ExperimentSpec& spec, const adversarial::AgentState& agent,
                               const ppo::ObservationPipeline& pipeline,
                               std::uint64_t global_step) {
  nn::Checkpoint ck;
  agent.ac.save_to(ck);
  if (agent.perturber) ck.nets.insert_or_assign("perturber", agent.perturber->net);
  ck.meta["env"] = spec.env_id;
  ck.meta["agent"] = std::string(ppo::to_string(spec.cfg.agent_mode));
  ck.meta["seed"] = std::to_string(spec.cfg.seed);
  ck.meta["global_step"] = std::to_string(global_step);
  if (spec.noisy) {
    ck.meta["noisy_target_dim"] = std::to_string(spec.noisy->target_dim);
    ck.meta["noisy_noise_std"] = nn::format_real(spec.noisy->noise_std);
    ck.meta["noisy_rng_seed"] = std::to_string(spec.noisy->rng_seed);
  }
  if (pipeline.normalizer) {
    ck.meta["obs_norm_count"] = nn::format_real(pipeline.normalizer->count());
    auto m = pipeline.normalizer->mean();
    auto v = pipeline.normalizer->var();
    ck.vectors["obs_norm_mean"] = {m.begin(), m.end()};
    ck.vectors["obs_norm_var"] = {v.begin(), v.end()};
  }
  return ck;
}

LoadedAgent load_agent(const std::filesystem::path& checkpoint_path) {
  const nn::Checkpoint ck = nn::Checkpoint::load(checkpoint_path);
  LoadedAgent a;
  a.ac = policy::ActorCritic::load_from(ck);
  auto meta = [&](const std::string& k) -> const std::string& {
    auto it = ck.meta.find(k);
    if (it == ck.meta.end()) throw RejectedInput("checkpoint: missing meta '" + k + "'");
    return it->second;
  };
  a.env_id = meta("env");
  a.seed = std::stoull(meta("seed"));
  if (ck.meta.count("noisy_target_dim")) {
    env::NoisyWrapConfig n;
    n.target_dim = std::stoull(meta("noisy_target_dim"));
    n.noise_std = std::stod(meta("noisy_noise_std"));
    n.rng_seed = std::stoull(meta("noisy_rng_seed"));
    a.noisy = n;
  }
  if (ck.meta.count("obs_norm_count")) {
    ppo::ObservationNormalizer norm(a.ac.obs_dim());
    norm.restore(std::stod(meta("obs_norm_count")), ck.vectors.at("obs_norm_mean"),
                 ck.vectors.at("obs_norm_var"));
    a.normalizer = norm;
  }
  return a;
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

json iteration_record(std::size_t iteration, std::uint64_t global_step,
                      const adversarial::IterationStats& st, ppo::AgentMode mode) {
  const ppo::UpdateStats& u = st.update;
  json rec{{"record", "iteration"},
           {"iteration", iteration},
           {"global_step", global_step},
           {"policy_loss", u.policy_loss},
           {"value_loss", u.value_loss},
           {"entropy", u.entropy},
           {"mean_ratio", u.mean_ratio},
           {"clip_fraction", u.clip_fraction},
           {"approx_kl", u.approx_kl},
           {"grad_norm", u.grad_norm},
           {"theta_steps", st.theta_steps}};
  if (mode == ppo::AgentMode::apo)
    rec["adversarial"] = {{"mean_distortion", st.adversarial.mean_distortion},
                          {"mean_kl", st.adversarial.mean_kl},
                          {"perturber_loss", st.adversarial.perturber_loss},
                          {"policy_kl_term", st.adversarial.policy_kl_term},
                          {"phi_steps", st.phi_steps}};
  if (mode == ppo::AgentMode::drac)
    rec["drac"] = {{"loss", st.drac.loss},
                   {"policy_term", st.drac.policy_term},
                   {"value_term", st.drac.value_term}};
  return rec;
}

}  // namespace

RunMetrics run_experiment(const ExperimentSpec& spec) {
  const ppo::TrainConfig& cfg = spec.cfg;
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  RunMetrics m;
  m.run_id = spec.run_id.empty() ? default_run_id(spec) : spec.run_id;
  m.agent_mode = std::string(ppo::to_string(cfg.agent_mode));
  m.env_id = env_label(spec.env_id, spec.noisy);
  m.env_group = spec.noisy ? "noisy" : "clean";
  m.seed = cfg.seed;
  m.config = to_json(cfg);

  auto environment = env::make_env(spec.env_id, spec.noisy);
  const std::size_t obs_dim = environment->spec().obs_dim;
  const std::size_t act_dim = environment->spec().action_dim;
  adversarial::AgentState agent = adversarial::AgentState::create(obs_dim, act_dim, cfg);

  ppo::ObservationPipeline pipeline;
  if (cfg.normalize_obs) pipeline.normalizer.emplace(obs_dim);
  const bool augment_collection =
      cfg.agent_mode == ppo::AgentMode::rad ||
      (cfg.agent_mode == ppo::AgentMode::apo && cfg.apo_augment);
  if (augment_collection) pipeline.amplitude = env::AmplitudeScale{cfg.amp_alpha, cfg.amp_beta};
  pipeline.augment_rng = make_rng(mix_seed(cfg.seed, 100), Stream::augment);

  ppo::RolloutCollector collector(std::move(environment), mix_seed(cfg.seed, 5),
                                  std::move(pipeline), make_rng(cfg.seed, Stream::action));

  MetricsWriter writer;
  if (!spec.out_dir.empty()) writer = MetricsWriter(spec.out_dir);
  writer.write(json{{"record", "header"},
                    {"schema", kMetricsSchema},
                    {"version", kMetricsVersion},
                    {"run_id", m.run_id},
                    {"env", m.env_id},
                    {"env_id", spec.env_id},
                    {"env_group", m.env_group},
                    {"agent", m.agent_mode},
                    {"seed", cfg.seed},
                    {"noisy", to_json(spec.noisy)},
                    {"config", m.config}});
  json run_header{{"run_id", m.run_id}, {"started_at", utc_timestamp()}, {"status", "running"}};
  writer.write_run_header(run_header);
  const auto ckpt_path = spec.out_dir.empty() ? std::filesystem::path{}
                                              : spec.out_dir / kCheckpointFile;

  const std::uint64_t iterations = cfg.num_iterations();
  try {
    for (std::uint64_t it = 1; it <= iterations; ++it) {
      if (cfg.anneal_lr) {
        const double frac = 1.0 - static_cast<double>(it - 1) / static_cast<double>(iterations);
        agent.adam.set_learning_rate(frac * cfg.learning_rate);
      }
      ppo::RolloutBatch batch = collector.collect(agent.ac, cfg.rollout_steps);
      ppo::compute_gae(batch, cfg.gamma, cfg.gae_lambda);
      const adversarial::IterationStats st = adversarial::apo_train_iteration(agent, batch, cfg);

      for (const ppo::EpisodeRecord& ep : batch.episodes) {
        m.series.emplace_back(ep.global_step, ep.episodic_return);
        writer.write(json{{"record", "episode"},
                          {"global_step", ep.global_step},
                          {"return", ep.episodic_return},
                          {"length", ep.length}});
      }
      m.iterations = it;
      m.global_step = collector.global_step();
      writer.write(iteration_record(it, m.global_step, st, cfg.agent_mode));
      if (!ckpt_path.empty())
        make_checkpoint(spec, agent, collector.pipeline(), m.global_step).save(ckpt_path);
    }
  } catch (const NonFiniteError& e) {
    m.failed = true;
    m.error = e.what();
    writer.write(json{{"record", "failed"}, {"kind", e.kind()}, {"error", m.error}});
  }

  if (!m.failed) {
    auto eval_env = env::make_env(spec.env_id, spec.noisy);
    const ppo::ObservationNormalizer* norm =
        collector.pipeline().normalizer ? &*collector.pipeline().normalizer : nullptr;
    const EvalResult ev = evaluate(agent.ac, *eval_env, cfg.eval_episodes,
                                   mix_seed(cfg.seed, static_cast<std::uint64_t>(Stream::eval)),
                                   norm);
    m.completed = true;
    m.final_eval_return = ev.mean;
    m.final_eval_std = ev.std;
    m.eval_returns = ev.returns;
    writer.write(json{{"record", "final"},
                      {"eval_mean", ev.mean},
                      {"eval_std", ev.std},
                      {"eval_returns", ev.returns},
                      {"episodes", cfg.eval_episodes},
                      {"eval_policy", "deterministic-mean"}});
  }

  m.duration_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  run_header["status"] = m.failed ? "failed" : "completed";
  run_header["duration_s"] = m.duration_s;
  run_header["finished_at"] = utc_timestamp();
  writer.write_run_header(run_header);
  return m;
}

}  // namespace apo::harness
