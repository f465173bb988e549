#pragma once

#include <cstdint>
#include <functional>

#include "apo/common/rng.hpp"
#include "apo/nn/adam.hpp"
#include "apo/policy/actor_critic.hpp"
#include "apo/ppo/config.hpp"
#include "apo/ppo/losses.hpp"
#include "apo/ppo/rollout.hpp"

namespace apo::ppo {

struct UpdateStats {
  std::uint64_t optimizer_steps = 0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double extra_loss = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double grad_norm = 0.0;
  // Clip fraction of the very first minibatch, measured before any step.
  double initial_clip_fraction = 0.0;
};

// Extension points used by the augmentation and adversarial agents. Both run
// once per minibatch, in this order: extra_loss (before the policy step, adds
// its gradient into `grads`), then after_policy_step.
struct UpdateHooks {
  std::function<double(const Minibatch&, policy::ActorCriticGrads&)> extra_loss;
  std::function<void(const Minibatch&)> after_policy_step;
};

// update_epochs passes over the batch; each pass shuffles the indices and
// takes one Adam step per minibatch on
//   policy_loss + value_loss - entropy_coef * entropy (+ hooks.extra_loss)
// after clipping the global gradient norm to max_grad_norm. Aborts with
// NonFiniteError if any loss is non-finite.
UpdateStats ppo_update(policy::ActorCritic& ac, nn::AdamState& adam, const RolloutBatch& batch,
                       const TrainConfig& cfg, Rng& shuffle_rng, const UpdateHooks& hooks = {});

}  // namespace apo::ppo
