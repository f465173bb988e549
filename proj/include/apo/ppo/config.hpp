#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "apo/kernels/batch_accumulate.hpp"

namespace apo::ppo {

enum class AgentMode { ppo, rad, drac, apo };

std::string_view to_string(AgentMode m);
AgentMode agent_mode_from_string(std::string_view s);

// Every hyperparameter of a training run. Defaults reproduce the standard
// continuous-control PPO setting (2048-step rollouts, 32 minibatches,
// 10 epochs, lr 3e-4, gamma 0.99, GAE lambda 0.95, clip 0.2, clipped value
// loss with coefficient 0.5, per-minibatch advantage normalization).
struct TrainConfig {
  std::size_t rollout_steps = 2048;
  double learning_rate = 3e-4;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  std::size_t num_minibatches = 32;
  std::size_t update_epochs = 10;
  bool normalize_advantage = true;
  double clip_coef = 0.2;
  bool clip_value_loss = true;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  double max_grad_norm = 0.5;
  bool anneal_lr = false;
  bool normalize_obs = false;

  AgentMode agent_mode = AgentMode::ppo;

  // Random amplitude scaling range (RAD, DRAC, APO).
  double amp_alpha = 0.6;
  double amp_beta = 1.2;

  double drac_coef = 0.1;

  // Adversarial terms.
  double kl_coef = 1.0;
  double distortion_weight = 1.0;
  double perturber_learning_rate = 3e-4;
  double perturber_max_grad_norm = 0.5;
  double perturber_output_gain = 0.01;
  bool apo_augment = true;
  // Keep the perturber at x' = x and never train it (reduction checks).
  bool identity_perturber = false;

  std::uint64_t total_timesteps = 1'000'000;
  std::uint64_t seed = 1;
  std::size_t eval_episodes = 10;
  kernels::Exec exec = kernels::Exec::serial;

  std::size_t minibatch_size() const { return rollout_steps / num_minibatches; }
  std::uint64_t num_iterations() const { return total_timesteps / rollout_steps; }
  // Throws ConfigError on inconsistent values.
  void validate() const;
};

}  // namespace apo::ppo
