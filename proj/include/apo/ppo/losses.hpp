#pragma once

#include <span>
#include <vector>

#include "apo/kernels/batch_accumulate.hpp"
#include "apo/policy/actor_critic.hpp"
#include "apo/ppo/rollout.hpp"

namespace apo::ppo {

// Indices into a rollout plus the advantages the losses should use for them
// (already standardized when normalization is on).
struct Minibatch {
  const RolloutBatch* batch = nullptr;
  std::vector<std::size_t> indices;
  std::vector<double> advantages;

  std::size_t size() const { return indices.size(); }
  const Transition& at(std::size_t k) const { return batch->transitions[indices[k]]; }
  double return_at(std::size_t k) const { return batch->returns[indices[k]]; }
};

// (A - mean) / (std + 1e-8) with the unbiased standard deviation.
std::vector<double> normalize_advantages(std::span<const double> adv);

Minibatch make_minibatch(const RolloutBatch& batch, std::span<const std::size_t> indices,
                         bool normalize_advantage);

struct PolicyLossStats {
  double loss = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;  // mean of (ratio - 1) - log(ratio)
};

// Clipped surrogate: -mean(min(r A, clip(r, 1-eps, 1+eps) A)) with
// r = exp(log pi(a|s) - log_prob_old). When `grads` is given the gradient of
// the returned loss is added into it. Throws NonFiniteError on a bad ratio.
PolicyLossStats ppo_policy_loss(const policy::ActorCritic& ac, const Minibatch& mb,
                                double clip_coef, policy::ActorCriticGrads* grads,
                                kernels::Exec exec = kernels::Exec::serial);

struct ValueLossConfig {
  bool clip = true;
  double clip_coef = 0.2;
  double value_coef = 0.5;
};

// value_coef * 0.5 * mean(max((V - R)^2, (V_old + clip(V - V_old, +-eps) - R)^2)),
// or the unclipped square when clipping is off.
double value_loss(const policy::ActorCritic& ac, const Minibatch& mb, const ValueLossConfig& cfg,
                  policy::ActorCriticGrads* grads, kernels::Exec exec = kernels::Exec::serial);

}  // namespace apo::ppo
