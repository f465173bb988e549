#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "apo/adversarial/perturber.hpp"
#include "apo/common/rng.hpp"
#include "apo/env/wrappers.hpp"
#include "apo/nn/adam.hpp"
#include "apo/policy/actor_critic.hpp"
#include "apo/ppo/config.hpp"
#include "apo/ppo/rollout.hpp"
#include "apo/ppo/update.hpp"

namespace apo::adversarial {

struct DracResult {
  double loss = 0.0;         // coef * (policy_term + value_term)
  double policy_term = 0.0;  // mean KL(pi(.|x) || pi(.|aug x)), pi(.|x) held constant
  double value_term = 0.0;   // mean (V(x) - V(aug x))^2, V(x) held constant
};

// DRAC consistency regularizer with one amplitude factor per sample.
DracResult drac_regularizer(const policy::ActorCritic& ac, const ppo::Minibatch& mb,
                            std::span<const double> factors, double coef,
                            policy::ActorCriticGrads* grads,
                            kernels::Exec exec = kernels::Exec::serial);

// Same, drawing the factors from `rng` (one per sample, in minibatch order).
DracResult drac_regularizer(const policy::ActorCritic& ac, const ppo::Minibatch& mb, Rng& rng,
                            const env::AmplitudeScale& range, double coef,
                            policy::ActorCriticGrads* grads,
                            kernels::Exec exec = kernels::Exec::serial);

// RAD augmentation of one observation (random amplitude scaling).
std::vector<double> rad_transform(std::span<const double> obs, Rng& rng,
                                  const env::AmplitudeScale& range, double* factor_out = nullptr);

// Everything an agent updates during training.
struct AgentState {
  policy::ActorCritic ac;
  nn::AdamState adam;
  std::optional<PerturberNet> perturber;  // APO only
  Rng shuffle_rng;
  Rng drac_rng;

  static AgentState create(std::size_t obs_dim, std::size_t action_dim,
                           const ppo::TrainConfig& cfg);
};

struct IterationStats {
  ppo::UpdateStats update;
  AdversarialBatchStats adversarial;
  DracResult drac;
  std::uint64_t theta_steps = 0;
  std::uint64_t phi_steps = 0;
};

// One Adam step of the perturber on L_phi over `xs` with the policy frozen.
PerturberLossResult perturber_step(PerturberNet& p, const policy::ActorCritic& ac,
                                   std::span<const std::vector<double>> xs,
                                   const ppo::TrainConfig& cfg);

// One Adam step of the actor-critic on the adversarial policy loss with the
// perturber frozen. Returns the loss evaluated before the step.
ApoPolicyLoss apo_policy_step(policy::ActorCritic& ac, nn::AdamState& adam,
                              const PerturberNet& p, const ppo::Minibatch& mb,
                              const ppo::TrainConfig& cfg);

// Update phase of one training iteration for every agent mode. For APO each
// minibatch runs: perturb x, step theta on the PPO loss plus the KL term,
// then step phi on the perturber loss against the updated policy.
// PPO and RAD reduce to ppo_update; DRAC adds its regularizer.
IterationStats apo_train_iteration(AgentState& agent, const ppo::RolloutBatch& batch,
                                   const ppo::TrainConfig& cfg);

}  // namespace apo::adversarial
