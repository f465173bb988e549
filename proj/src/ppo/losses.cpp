#include "apo/ppo/losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "apo/common/error.hpp"

namespace apo::ppo {

std::vector<double> normalize_advantages(std::span<const double> adv) {
  const std::size_t n = adv.size();
  std::vector<double> out(adv.begin(), adv.end());
  if (n == 0) return out;
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double a : adv) ss += (a - mean) * (a - mean);
  const double std = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  for (double& a : out) a = (a - mean) / (std + 1e-8);
  return out;
}

Minibatch make_minibatch(const RolloutBatch& batch, std::span<const std::size_t> indices,
                         bool normalize_advantage) {
  require(batch.advantages.size() == batch.size() && batch.returns.size() == batch.size(),
          "make_minibatch: advantages/returns not computed");
  Minibatch mb;
  mb.batch = &batch;
  mb.indices.assign(indices.begin(), indices.end());
  mb.advantages.reserve(indices.size());
  for (std::size_t i : indices) {
    require(i < batch.size(), "make_minibatch: index out of range");
    mb.advantages.push_back(batch.advantages[i]);
  }
  if (normalize_advantage) mb.advantages = normalize_advantages(mb.advantages);
  return mb;
}

namespace {

enum PolicySlot { kLoss, kRatio, kClipped, kApproxKl, kPolicySlots };

}  // namespace

PolicyLossStats ppo_policy_loss(const policy::ActorCritic& ac, const Minibatch& mb,
                                double clip_coef, policy::ActorCriticGrads* grads,
                                kernels::Exec exec) {
  const std::size_t n = mb.size();
  require(n > 0, "ppo_policy_loss: empty minibatch");
  require(!grads || grads->size() == ac.parameter_count(), "ppo_policy_loss: gradient shape");
  const double inv_n = 1.0 / static_cast<double>(n);
  const double lo = 1.0 - clip_coef;
  const double hi = 1.0 + clip_coef;

  std::vector<double> stats(kPolicySlots, 0.0);
  std::span<double> gout = grads ? grads->all() : std::span<double>{};

  kernels::accumulate(exec, n, gout, stats, [&](std::size_t k, std::span<double> g,
                                                std::span<double> s) {
    const Transition& tr = mb.at(k);
    const double adv = mb.advantages[k];
    auto fwd = ac.policy_net.forward(tr.obs);
    const policy::GaussianActionDist dist{fwd.output, ac.log_std};
    const double logp = policy::log_prob(dist, tr.action);
    const double log_ratio = logp - tr.log_prob_old;
    const double ratio = std::exp(log_ratio);
    if (!std::isfinite(ratio)) {
      std::ostringstream msg;
      msg << "ppo_policy_loss: non-finite ratio at sample " << mb.indices[k] << " (log_prob "
          << logp << ", log_prob_old " << tr.log_prob_old << ")";
      throw NonFiniteError(msg.str());
    }
    const double clipped_ratio = std::clamp(ratio, lo, hi);
    const double unclipped_obj = ratio * adv;
    const double clipped_obj = clipped_ratio * adv;
    s[kLoss] += -std::min(unclipped_obj, clipped_obj);
    s[kRatio] += ratio;
    s[kClipped] += (std::abs(ratio - 1.0) > clip_coef) ? 1.0 : 0.0;
    s[kApproxKl] += (ratio - 1.0) - log_ratio;

    if (g.empty()) return;
    // d(-min(...))/d ratio; the clipped branch is flat outside [lo, hi].
    double dloss_dratio = 0.0;
    if (unclipped_obj <= clipped_obj)
      dloss_dratio = -adv;
    else if (ratio > lo && ratio < hi)
      dloss_dratio = -adv;
    const double dloss_dlogp = dloss_dratio * ratio * inv_n;
    if (dloss_dlogp == 0.0) return;
    const policy::LogProbGrad lg = policy::log_prob_grad(dist, tr.action);
    auto v = grads->split(g);
    std::vector<double> dmean(lg.mean.size());
    for (std::size_t i = 0; i < dmean.size(); ++i) {
      dmean[i] = dloss_dlogp * lg.mean[i];
      v.log_std[i] += dloss_dlogp * lg.log_std[i];
    }
    ac.policy_net.backward(fwd.tape, dmean, v.policy);
  });

  PolicyLossStats out;
  out.loss = stats[kLoss] * inv_n;
  out.mean_ratio = stats[kRatio] * inv_n;
  out.clip_fraction = stats[kClipped] * inv_n;
  out.approx_kl = stats[kApproxKl] * inv_n;
  return out;
}

double value_loss(const policy::ActorCritic& ac, const Minibatch& mb, const ValueLossConfig& cfg,
                  policy::ActorCriticGrads* grads, kernels::Exec exec) {
  const std::size_t n = mb.size();
  require(n > 0, "value_loss: empty minibatch");
  require(!grads || grads->size() == ac.parameter_count(), "value_loss: gradient shape");
  const double scale = cfg.value_coef / static_cast<double>(n);
  std::vector<double> stats(1, 0.0);
  std::span<double> gout = grads ? grads->all() : std::span<double>{};

  kernels::accumulate(exec, n, gout, stats, [&](std::size_t k, std::span<double> g,
                                                std::span<double> s) {
    const Transition& tr = mb.at(k);
    const double ret = mb.return_at(k);
    auto fwd = ac.value_net.forward(tr.obs);
    const double v = fwd.output[0];
    const double err = v - ret;
    double sq = err * err;
    double dloss_dv = err;
    if (cfg.clip) {
      const double dv = v - tr.value_old;
      const bool inside = dv > -cfg.clip_coef && dv < cfg.clip_coef;
      const double v_clipped = tr.value_old + std::clamp(dv, -cfg.clip_coef, cfg.clip_coef);
      const double err_c = v_clipped - ret;
      if (err_c * err_c > sq) {
        sq = err_c * err_c;
        dloss_dv = inside ? err_c : 0.0;
      }
    }
    s[0] += 0.5 * sq;
    if (g.empty() || dloss_dv == 0.0) return;
    auto views = grads->split(g);
    const double out_grad[1] = {dloss_dv * scale};
    ac.value_net.backward(fwd.tape, out_grad, views.value);
  });
  return stats[0] * scale;
}

}  // namespace apo::ppo
