#include "apo/harness/config_io.hpp"

#include <fstream>

#include "apo/common/error.hpp"

namespace apo::harness {

using nlohmann::json;

json to_json(const ppo::TrainConfig& c) {
  return json{
      {"rollout_steps", c.rollout_steps},
      {"learning_rate", c.learning_rate},
      {"gamma", c.gamma},
      {"gae_lambda", c.gae_lambda},
      {"num_minibatches", c.num_minibatches},
      {"update_epochs", c.update_epochs},
      {"normalize_advantage", c.normalize_advantage},
      {"clip_coef", c.clip_coef},
      {"clip_value_loss", c.clip_value_loss},
      {"value_coef", c.value_coef},
      {"entropy_coef", c.entropy_coef},
      {"max_grad_norm", c.max_grad_norm},
      {"anneal_lr", c.anneal_lr},
      {"normalize_obs", c.normalize_obs},
      {"agent_mode", std::string(ppo::to_string(c.agent_mode))},
      {"amp_alpha", c.amp_alpha},
      {"amp_beta", c.amp_beta},
      {"drac_coef", c.drac_coef},
      {"kl_coef", c.kl_coef},
      {"distortion_weight", c.distortion_weight},
      {"perturber_learning_rate", c.perturber_learning_rate},
      {"perturber_max_grad_norm", c.perturber_max_grad_norm},
      {"perturber_output_gain", c.perturber_output_gain},
      {"apo_augment", c.apo_augment},
      {"identity_perturber", c.identity_perturber},
      {"total_timesteps", c.total_timesteps},
      {"seed", c.seed},
      {"eval_episodes", c.eval_episodes},
  };
}

namespace {

template <class T>
void take(const json& j, const char* key, T& field, std::size_t& used) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    field = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
  ++used;
}

}  // namespace

void apply_json(ppo::TrainConfig& c, const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  std::size_t used = 0;
  take(j, "rollout_steps", c.rollout_steps, used);
  take(j, "learning_rate", c.learning_rate, used);
  take(j, "gamma", c.gamma, used);
  take(j, "gae_lambda", c.gae_lambda, used);
  take(j, "num_minibatches", c.num_minibatches, used);
  take(j, "update_epochs", c.update_epochs, used);
  take(j, "normalize_advantage", c.normalize_advantage, used);
  take(j, "clip_coef", c.clip_coef, used);
  take(j, "clip_value_loss", c.clip_value_loss, used);
  take(j, "value_coef", c.value_coef, used);
  take(j, "entropy_coef", c.entropy_coef, used);
  take(j, "max_grad_norm", c.max_grad_norm, used);
  take(j, "anneal_lr", c.anneal_lr, used);
  take(j, "normalize_obs", c.normalize_obs, used);
  if (auto it = j.find("agent_mode"); it != j.end()) {
    if (!it->is_string()) throw ConfigError("config key 'agent_mode' must be a string");
    c.agent_mode = ppo::agent_mode_from_string(it->get<std::string>());
    ++used;
  }
  take(j, "amp_alpha", c.amp_alpha, used);
  take(j, "amp_beta", c.amp_beta, used);
  take(j, "drac_coef", c.drac_coef, used);
  take(j, "kl_coef", c.kl_coef, used);
  take(j, "distortion_weight", c.distortion_weight, used);
  take(j, "perturber_learning_rate", c.perturber_learning_rate, used);
  take(j, "perturber_max_grad_norm", c.perturber_max_grad_norm, used);
  take(j, "perturber_output_gain", c.perturber_output_gain, used);
  take(j, "apo_augment", c.apo_augment, used);
  take(j, "identity_perturber", c.identity_perturber, used);
  take(j, "total_timesteps", c.total_timesteps, used);
  take(j, "seed", c.seed, used);
  take(j, "eval_episodes", c.eval_episodes, used);
  if (used != j.size()) {
    const json known = to_json(ppo::TrainConfig{});
    for (const auto& [k, v] : j.items())
      if (!known.contains(k)) throw ConfigError("unknown config key '" + k + "'");
  }
}

json to_json(const std::optional<env::NoisyWrapConfig>& noisy) {
  if (!noisy) return nullptr;
  return json{{"target_dim", noisy->target_dim},
              {"noise_std", noisy->noise_std},
              {"rng_seed", noisy->rng_seed}};
}

std::optional<env::NoisyWrapConfig> noisy_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  env::NoisyWrapConfig n;
  n.target_dim = j.at("target_dim").get<std::size_t>();
  n.noise_std = j.at("noise_std").get<double>();
  n.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  return n;
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
}

}  // namespace apo::harness
