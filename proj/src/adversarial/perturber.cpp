#include "apo/adversarial/perturber.hpp"

#include <cmath>
#include <sstream>

#include "apo/common/error.hpp"
#include "apo/common/rng.hpp"

namespace apo::adversarial {

PerturberNet::PerturberNet(std::size_t obs_dim, std::uint64_t seed, double output_gain,
                           double learning_rate, const policy::NetworkShape& shape)
    : net(policy::make_mlp(obs_dim, obs_dim, shape, output_gain, seed)),
      adam(net.parameter_count(), nn::AdamConfig{learning_rate}) {}

void PerturberNet::zero_output_layer() {
  auto params = net.mutable_layer_parameters(net.num_layers() - 1);
  std::fill(params.begin(), params.end(), 0.0);
}

std::vector<double> perturb(const PerturberNet& p, std::span<const double> x) {
  std::vector<double> out = p.net.predict(x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += x[i];
  if (!all_finite(out)) throw NonFiniteError("perturb: non-finite perturbed observation");
  return out;
}

namespace {

enum PerturberSlot { kDistortion, kKl, kPerturberSlots };

}  // namespace

PerturberLossResult perturber_loss(const PerturberNet& p, const policy::ActorCritic& ac,
                                   std::span<const std::vector<double>> xs,
                                   double distortion_weight, std::span<double> perturber_grad,
                                   kernels::Exec exec) {
  const std::size_t n = xs.size();
  require(n > 0, "perturber_loss: empty batch");
  require(p.obs_dim() == ac.obs_dim(), "perturber_loss: perturber/policy obs_dim mismatch");
  require(perturber_grad.empty() || perturber_grad.size() == p.net.parameter_count(),
          "perturber_loss: gradient shape");
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> stats(kPerturberSlots, 0.0);

  kernels::accumulate(exec, n, perturber_grad, stats, [&](std::size_t k, std::span<double> g,
                                                          std::span<double> s) {
    const std::vector<double>& x = xs[k];
    auto pf = p.net.forward(x);
    std::vector<double> xp(x.size());
    double dist = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      xp[i] = x[i] + pf.output[i];
      dist += pf.output[i] * pf.output[i];
    }
    if (!all_finite(xp)) {
      std::ostringstream msg;
      msg << "perturber_loss: non-finite perturbed observation at sample " << k
          << " (distortion " << dist << ")";
      throw NonFiniteError(msg.str());
    }
    const policy::GaussianActionDist clean{ac.policy_net.predict(x), ac.log_std};
    auto qf = ac.policy_net.forward(xp);
    const policy::GaussianActionDist perturbed{qf.output, ac.log_std};
    const double kl = policy::kl_divergence(clean, perturbed);
    s[kDistortion] += dist;
    s[kKl] += kl;
    if (g.empty()) return;

    const policy::KlGrad kg = policy::kl_divergence_grad(clean, perturbed);
    std::vector<double> dmean(kg.mean_q.size());
    for (std::size_t i = 0; i < dmean.size(); ++i) dmean[i] = -kg.mean_q[i] * inv_n;
    const std::vector<double> dxp = ac.policy_net.backward(qf.tape, dmean, {});
    std::vector<double> dout(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      dout[i] = 2.0 * distortion_weight * pf.output[i] * inv_n + dxp[i];
    p.net.backward(pf.tape, dout, g);
  });

  PerturberLossResult r;
  r.mean_distortion = stats[kDistortion] * inv_n;
  r.mean_kl = stats[kKl] * inv_n;
  r.loss = distortion_weight * r.mean_distortion - r.mean_kl;
  return r;
}

double adversarial_kl_term(const policy::ActorCritic& ac, std::span<const std::vector<double>> xs,
                           std::span<const std::vector<double>> x_perturbed, double kl_coef,
                           policy::ActorCriticGrads* grads, kernels::Exec exec) {
  const std::size_t n = xs.size();
  require(n > 0 && x_perturbed.size() == n, "adversarial_kl_term: batch size mismatch");
  require(!grads || grads->size() == ac.parameter_count(), "adversarial_kl_term: gradient shape");
  const double c = kl_coef / static_cast<double>(n);
  std::vector<double> stats(1, 0.0);
  std::span<double> gout = grads ? grads->all() : std::span<double>{};

  kernels::accumulate(exec, n, gout, stats, [&](std::size_t k, std::span<double> g,
                                                std::span<double> s) {
    auto pf = ac.policy_net.forward(xs[k]);
    auto qf = ac.policy_net.forward(x_perturbed[k]);
    const policy::GaussianActionDist p{pf.output, ac.log_std};
    const policy::GaussianActionDist q{qf.output, ac.log_std};
    const double kl = policy::kl_divergence(p, q);
    if (!std::isfinite(kl))
      throw NonFiniteError("adversarial_kl_term: non-finite KL at sample " + std::to_string(k));
    s[0] += kl;
    if (g.empty()) return;
    const policy::KlGrad kg = policy::kl_divergence_grad(p, q);
    auto v = grads->split(g);
    std::vector<double> dp(kg.mean_p.size());
    std::vector<double> dq(kg.mean_q.size());
    for (std::size_t i = 0; i < dp.size(); ++i) {
      dp[i] = c * kg.mean_p[i];
      dq[i] = c * kg.mean_q[i];
      v.log_std[i] += c * (kg.log_std_p[i] + kg.log_std_q[i]);
    }
    ac.policy_net.backward(pf.tape, dp, v.policy);
    ac.policy_net.backward(qf.tape, dq, v.policy);
  });
  return stats[0] * c;
}

std::vector<std::vector<double>> minibatch_observations(const ppo::Minibatch& mb) {
  std::vector<std::vector<double>> xs;
  xs.reserve(mb.size());
  for (std::size_t k = 0; k < mb.size(); ++k) xs.push_back(mb.at(k).obs);
  return xs;
}

ApoPolicyLoss apo_policy_loss(const policy::ActorCritic& ac, const PerturberNet& p,
                              const ppo::Minibatch& mb, double clip_coef,
                              const ppo::ValueLossConfig& vcfg, double kl_coef,
                              policy::ActorCriticGrads* grads, kernels::Exec exec) {
  ApoPolicyLoss r;
  r.policy = ppo::ppo_policy_loss(ac, mb, clip_coef, grads, exec);
  r.value_loss = ppo::value_loss(ac, mb, vcfg, grads, exec);
  const auto xs = minibatch_observations(mb);
  std::vector<std::vector<double>> xps;
  xps.reserve(xs.size());
  for (const auto& x : xs) xps.push_back(perturb(p, x));
  r.kl_term = adversarial_kl_term(ac, xs, xps, kl_coef, grads, exec);
  r.total = r.policy.loss + r.value_loss + r.kl_term;
  return r;
}

}  // namespace apo::adversarial
