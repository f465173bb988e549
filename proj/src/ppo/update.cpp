#include "apo/ppo/update.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "apo/common/error.hpp"

namespace apo::ppo {

UpdateStats ppo_update(policy::ActorCritic& ac, nn::AdamState& adam, const RolloutBatch& batch,
                       const TrainConfig& cfg, Rng& shuffle_rng, const UpdateHooks& hooks) {
  cfg.validate();
  require(batch.size() == cfg.rollout_steps, "ppo_update: batch length != rollout_steps");
  require(batch.advantages.size() == batch.size(), "ppo_update: GAE not computed");
  require(adam.parameter_count() == ac.parameter_count(), "ppo_update: optimizer size mismatch");

  const std::size_t mb_size = cfg.minibatch_size();
  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  policy::ActorCriticGrads grads(ac);
  const ValueLossConfig vcfg{cfg.clip_value_loss, cfg.clip_coef, cfg.value_coef};

  UpdateStats st;
  double n_mb = 0.0;
  for (std::size_t epoch = 0; epoch < cfg.update_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += mb_size) {
      const Minibatch mb = make_minibatch(
          batch, std::span<const std::size_t>(order).subspan(start, mb_size),
          cfg.normalize_advantage);
      grads.zero();
      const PolicyLossStats pl = ppo_policy_loss(ac, mb, cfg.clip_coef, &grads, cfg.exec);
      const double vl = value_loss(ac, mb, vcfg, &grads, cfg.exec);
      const double ent = policy::entropy(policy::GaussianActionDist{
          std::vector<double>(ac.log_std.size(), 0.0), ac.log_std});
      if (cfg.entropy_coef != 0.0)
        for (double& g : grads.log_std()) g -= cfg.entropy_coef;
      const double extra = hooks.extra_loss ? hooks.extra_loss(mb, grads) : 0.0;
      const double total = pl.loss + vl - cfg.entropy_coef * ent + extra;
      if (!std::isfinite(total))
        throw NonFiniteError("ppo_update: non-finite loss (policy " + std::to_string(pl.loss) +
                             ", value " + std::to_string(vl) + ", extra " +
                             std::to_string(extra) + ")");
      if (st.optimizer_steps == 0) st.initial_clip_fraction = pl.clip_fraction;

      auto blocks = policy::param_blocks(ac, grads);
      st.grad_norm += nn::clip_grad_norm(blocks, cfg.max_grad_norm);
      adam.step(blocks);
      ++st.optimizer_steps;

      if (hooks.after_policy_step) hooks.after_policy_step(mb);

      st.policy_loss += pl.loss;
      st.value_loss += vl;
      st.entropy += ent;
      st.extra_loss += extra;
      st.mean_ratio += pl.mean_ratio;
      st.clip_fraction += pl.clip_fraction;
      st.approx_kl += pl.approx_kl;
      n_mb += 1.0;
    }
  }
  for (double* f : {&st.policy_loss, &st.value_loss, &st.entropy, &st.extra_loss, &st.mean_ratio,
                    &st.clip_fraction, &st.approx_kl, &st.grad_norm})
    *f /= n_mb;
  return st;
}

}  // namespace apo::ppo
