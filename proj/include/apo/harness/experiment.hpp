#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "apo/adversarial/agent.hpp"
#include "apo/env/env.hpp"
#include "apo/env/wrappers.hpp"
#include "apo/harness/metrics.hpp"
#include "apo/nn/checkpoint.hpp"
#include "apo/policy/actor_critic.hpp"
#include "apo/ppo/config.hpp"
#include "apo/ppo/rollout.hpp"

namespace apo::harness {

struct ExperimentSpec {
  ppo::TrainConfig cfg;
  std::string env_id = "pointmass";
  std::optional<env::NoisyWrapConfig> noisy;
  // Run directory for metrics and checkpoints. Empty: keep everything in memory.
  std::filesystem::path out_dir;
  std::string run_id;  // derived from env/agent/seed when empty
};

std::string env_label(const std::string& env_id, const std::optional<env::NoisyWrapConfig>& noisy);
std::string default_run_id(const ExperimentSpec& spec);

struct EvalResult {
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> returns;
};

// Runs `episodes` full episodes acting with the policy mean (no sampling, no
// augmentation). Episode k resets with mix_seed(seed, k). A normalizer, when
// given, is applied frozen.
EvalResult evaluate(const policy::ActorCritic& ac, env::Env& environment, std::size_t episodes,
                    std::uint64_t seed, const ppo::ObservationNormalizer* normalizer = nullptr);

// Trains the configured agent for cfg.total_timesteps, evaluates it, and
// writes metrics incrementally when out_dir is set. A non-finite loss marks
// the run failed (the last checkpoint stays on disk) instead of throwing.
RunMetrics run_experiment(const ExperimentSpec& spec);

// Checkpoint of a trained agent plus what is needed to rebuild its env.
nn::Checkpoint make_checkpoint(const ExperimentSpec& spec, const adversarial::AgentState& agent,
                               const ppo::ObservationPipeline& pipeline,
                               std::uint64_t global_step);

struct LoadedAgent {
  policy::ActorCritic ac;
  std::string env_id;
  std::optional<env::NoisyWrapConfig> noisy;
  std::optional<ppo::ObservationNormalizer> normalizer;
  std::uint64_t seed = 0;
};
LoadedAgent load_agent(const std::filesystem::path& checkpoint_path);

}  // namespace apo::harness
