#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "apo/kernels/batch_accumulate.hpp"
#include "apo/nn/adam.hpp"
#include "apo/nn/mlp.hpp"
#include "apo/policy/actor_critic.hpp"
#include "apo/ppo/losses.hpp"

namespace apo::adversarial {

// Residual observation perturber: x' = x + net(x). net maps obs_dim to
// obs_dim and has its own Adam state.
struct PerturberNet {
  nn::MlpNet net;
  nn::AdamState adam;

  PerturberNet() = default;
  PerturberNet(std::size_t obs_dim, std::uint64_t seed, double output_gain = 0.01,
               double learning_rate = 3e-4, const policy::NetworkShape& shape = {});

  std::size_t obs_dim() const { return net.input_dim(); }
  // Sets the output layer to zero so that x' = x exactly.
  void zero_output_layer();
};

// x + net(x). Throws NonFiniteError if the perturbation is not finite.
std::vector<double> perturb(const PerturberNet& p, std::span<const double> x);

struct AdversarialBatchStats {
  double mean_distortion = 0.0;  // mean |x - x'|^2
  double mean_kl = 0.0;          // mean KL(pi(.|x) || pi(.|x'))
  double perturber_loss = 0.0;
  double policy_kl_term = 0.0;   // kl_coef * mean KL as seen by the policy step
};

struct PerturberLossResult {
  double loss = 0.0;
  double mean_distortion = 0.0;
  double mean_kl = 0.0;
};

// mean over xs of [w * |x - x'|^2 - KL(pi(.|x) || pi(.|x'))], x' = perturb(x).
// pi(.|x) is held constant; the KL reaches the perturber only through x' via
// the policy network's input gradient. The gradient w.r.t. the perturber
// parameters is added into `perturber_grad` when it is non-empty. The policy
// receives no gradient.
PerturberLossResult perturber_loss(const PerturberNet& p, const policy::ActorCritic& ac,
                                   std::span<const std::vector<double>> xs,
                                   double distortion_weight, std::span<double> perturber_grad,
                                   kernels::Exec exec = kernels::Exec::serial);

// kl_coef * mean KL(pi(.|x) || pi(.|x')) with x' = perturb(x) held fixed;
// the gradient flows into the policy through both KL arguments.
double adversarial_kl_term(const policy::ActorCritic& ac, std::span<const std::vector<double>> xs,
                           std::span<const std::vector<double>> x_perturbed, double kl_coef,
                           policy::ActorCriticGrads* grads,
                           kernels::Exec exec = kernels::Exec::serial);

struct ApoPolicyLoss {
  ppo::PolicyLossStats policy;
  double value_loss = 0.0;
  double kl_term = 0.0;
  double total = 0.0;
};

// ppo_policy_loss + value_loss + kl_coef * mean KL(pi(.|x) || pi(.|x')).
// Perturbed observations enter only the KL term. Gradients go to the
// actor-critic only.
ApoPolicyLoss apo_policy_loss(const policy::ActorCritic& ac, const PerturberNet& p,
                              const ppo::Minibatch& mb, double clip_coef,
                              const ppo::ValueLossConfig& vcfg, double kl_coef,
                              policy::ActorCriticGrads* grads,
                              kernels::Exec exec = kernels::Exec::serial);

std::vector<std::vector<double>> minibatch_observations(const ppo::Minibatch& mb);

}  // namespace apo::adversarial
