#include "apo/ppo/config.hpp"

#include <cctype>
#include <string>

#include "apo/common/error.hpp"

namespace apo::ppo {

std::string_view to_string(AgentMode m) {
  switch (m) {
    case AgentMode::ppo:
      return "ppo";
    case AgentMode::rad:
      return "rad";
    case AgentMode::drac:
      return "drac";
    case AgentMode::apo:
      return "apo";
  }
  return "ppo";
}

AgentMode agent_mode_from_string(std::string_view s) {
  std::string lower(s);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "ppo") return AgentMode::ppo;
  if (lower == "rad") return AgentMode::rad;
  if (lower == "drac") return AgentMode::drac;
  if (lower == "apo") return AgentMode::apo;
  throw ConfigError("unknown agent mode '" + std::string(s) + "' (expected ppo|rad|drac|apo)");
}

void TrainConfig::validate() const {
  if (rollout_steps == 0) throw ConfigError("rollout_steps must be > 0");
  if (num_minibatches == 0 || rollout_steps % num_minibatches != 0)
    throw ConfigError("num_minibatches must divide rollout_steps");
  if (update_epochs == 0) throw ConfigError("update_epochs must be > 0");
  if (!(learning_rate > 0.0) || !(perturber_learning_rate > 0.0))
    throw ConfigError("learning rates must be > 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("gae_lambda must lie in [0, 1]");
  if (!(clip_coef > 0.0)) throw ConfigError("clip_coef must be > 0");
  if (!(amp_alpha <= amp_beta)) throw ConfigError("amp_alpha must be <= amp_beta");
  if (!(perturber_output_gain > 0.0)) throw ConfigError("perturber_output_gain must be > 0");
  if (total_timesteps < rollout_steps)
    throw ConfigError("total_timesteps must cover at least one rollout");
}

}  // namespace apo::ppo
