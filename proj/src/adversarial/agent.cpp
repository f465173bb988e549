#include "apo/adversarial/agent.hpp"

#include <cmath>

#include "apo/common/error.hpp"

namespace apo::adversarial {

namespace {

enum DracSlot { kDracKl, kDracValue, kDracSlots };

ppo::ValueLossConfig value_cfg(const ppo::TrainConfig& cfg) {
  return {cfg.clip_value_loss, cfg.clip_coef, cfg.value_coef};
}

}  // namespace

DracResult drac_regularizer(const policy::ActorCritic& ac, const ppo::Minibatch& mb,
                            std::span<const double> factors, double coef,
                            policy::ActorCriticGrads* grads, kernels::Exec exec) {
  const std::size_t n = mb.size();
  require(n > 0 && factors.size() == n, "drac_regularizer: one factor per sample required");
  require(!grads || grads->size() == ac.parameter_count(), "drac_regularizer: gradient shape");
  const double c = coef / static_cast<double>(n);
  std::vector<double> stats(kDracSlots, 0.0);
  std::span<double> gout = grads ? grads->all() : std::span<double>{};

  kernels::accumulate(exec, n, gout, stats, [&](std::size_t k, std::span<double> g,
                                                std::span<double> s) {
    const std::vector<double>& x = mb.at(k).obs;
    std::vector<double> xa(x);
    for (double& v : xa) v *= factors[k];

    const policy::GaussianActionDist clean{ac.policy_net.predict(x), ac.log_std};
    auto qf = ac.policy_net.forward(xa);
    const policy::GaussianActionDist aug{qf.output, ac.log_std};
    const double kl = policy::kl_divergence(clean, aug);

    const double v_clean = ac.value_net.predict(x)[0];
    auto vf = ac.value_net.forward(xa);
    const double dv = v_clean - vf.output[0];
    s[kDracKl] += kl;
    s[kDracValue] += dv * dv;
    if (g.empty()) return;

    auto views = grads->split(g);
    const policy::KlGrad kg = policy::kl_divergence_grad(clean, aug);
    std::vector<double> dq(kg.mean_q.size());
    for (std::size_t i = 0; i < dq.size(); ++i) {
      dq[i] = c * kg.mean_q[i];
      views.log_std[i] += c * kg.log_std_q[i];
    }
    ac.policy_net.backward(qf.tape, dq, views.policy);
    const double dval[1] = {c * -2.0 * dv};
    ac.value_net.backward(vf.tape, dval, views.value);
  });

  DracResult r;
  r.policy_term = stats[kDracKl] / static_cast<double>(n);
  r.value_term = stats[kDracValue] / static_cast<double>(n);
  r.loss = coef * (r.policy_term + r.value_term);
  return r;
}

DracResult drac_regularizer(const policy::ActorCritic& ac, const ppo::Minibatch& mb, Rng& rng,
                            const env::AmplitudeScale& range, double coef,
                            policy::ActorCriticGrads* grads, kernels::Exec exec) {
  std::vector<double> factors(mb.size());
  for (double& f : factors) f = env::draw_amplitude(rng, range);
  return drac_regularizer(ac, mb, factors, coef, grads, exec);
}

std::vector<double> rad_transform(std::span<const double> obs, Rng& rng,
                                  const env::AmplitudeScale& range, double* factor_out) {
  return env::amplitude_scale(obs, rng, range, factor_out);
}

AgentState AgentState::create(std::size_t obs_dim, std::size_t action_dim,
                               const ppo::TrainConfig& cfg) {
  cfg.validate();
  AgentState st{
      policy::ActorCritic(obs_dim, action_dim, mix_seed(cfg.seed, static_cast<std::uint64_t>(
                                                                       Stream::init_policy))),
      nn::AdamState(),
      std::nullopt,
      make_rng(cfg.seed, Stream::shuffle),
      make_rng(cfg.seed, Stream::augment),
  };
  st.adam = nn::AdamState(st.ac.parameter_count(), nn::AdamConfig{cfg.learning_rate});
  if (cfg.agent_mode == ppo::AgentMode::apo) {
    st.perturber.emplace(obs_dim,
                         mix_seed(cfg.seed, static_cast<std::uint64_t>(Stream::init_perturber)),
                         cfg.perturber_output_gain, cfg.perturber_learning_rate);
    if (cfg.identity_perturber) st.perturber->zero_output_layer();
  }
  return st;
}

PerturberLossResult perturber_step(PerturberNet& p, const policy::ActorCritic& ac,
                                   std::span<const std::vector<double>> xs,
                                   const ppo::TrainConfig& cfg) {
  std::vector<double> grad(p.net.parameter_count(), 0.0);
  const PerturberLossResult r = perturber_loss(p, ac, xs, cfg.distortion_weight, grad, cfg.exec);
  if (!std::isfinite(r.loss)) throw NonFiniteError("perturber_step: non-finite perturber loss");
  auto blocks = nn::layer_blocks(p.net, grad, "perturber.layer");
  nn::clip_grad_norm(blocks, cfg.perturber_max_grad_norm);
  p.adam.step(blocks);
  return r;
}

ApoPolicyLoss apo_policy_step(policy::ActorCritic& ac, nn::AdamState& adam,
                              const PerturberNet& p, const ppo::Minibatch& mb,
                              const ppo::TrainConfig& cfg) {
  policy::ActorCriticGrads grads(ac);
  const ApoPolicyLoss r =
      apo_policy_loss(ac, p, mb, cfg.clip_coef, value_cfg(cfg), cfg.kl_coef, &grads, cfg.exec);
  if (!std::isfinite(r.total)) throw NonFiniteError("apo_policy_step: non-finite loss");
  auto blocks = policy::param_blocks(ac, grads);
  nn::clip_grad_norm(blocks, cfg.max_grad_norm);
  adam.step(blocks);
  return r;
}

IterationStats apo_train_iteration(AgentState& agent, const ppo::RolloutBatch& batch,
                                   const ppo::TrainConfig& cfg) {
  IterationStats out;
  ppo::UpdateHooks hooks;
  double n_mb = 0.0;

  if (cfg.agent_mode == ppo::AgentMode::drac) {
    const env::AmplitudeScale range{cfg.amp_alpha, cfg.amp_beta};
    hooks.extra_loss = [&](const ppo::Minibatch& mb, policy::ActorCriticGrads& grads) {
      const DracResult d =
          drac_regularizer(agent.ac, mb, agent.drac_rng, range, cfg.drac_coef, &grads, cfg.exec);
      out.drac.loss += d.loss;
      out.drac.policy_term += d.policy_term;
      out.drac.value_term += d.value_term;
      n_mb += 1.0;
      return d.loss;
    };
  } else if (cfg.agent_mode == ppo::AgentMode::apo) {
    require(agent.perturber.has_value(), "apo_train_iteration: APO mode needs a perturber");
    PerturberNet& pert = *agent.perturber;
    std::vector<std::vector<double>> xs;
    hooks.extra_loss = [&](const ppo::Minibatch& mb, policy::ActorCriticGrads& grads) {
      xs = minibatch_observations(mb);
      std::vector<std::vector<double>> xps;
      xps.reserve(xs.size());
      for (const auto& x : xs) xps.push_back(perturb(pert, x));
      const double term = adversarial_kl_term(agent.ac, xs, xps, cfg.kl_coef, &grads, cfg.exec);
      out.adversarial.policy_kl_term += term;
      n_mb += 1.0;
      return term;
    };
    hooks.after_policy_step = [&](const ppo::Minibatch&) {
      if (cfg.identity_perturber) return;
      const PerturberLossResult r = perturber_step(pert, agent.ac, xs, cfg);
      out.adversarial.perturber_loss += r.loss;
      out.adversarial.mean_distortion += r.mean_distortion;
      out.adversarial.mean_kl += r.mean_kl;
      ++out.phi_steps;
    };
  }

  out.update = ppo::ppo_update(agent.ac, agent.adam, batch, cfg, agent.shuffle_rng, hooks);
  out.theta_steps = out.update.optimizer_steps;
  if (n_mb > 0.0) {
    out.drac.loss /= n_mb;
    out.drac.policy_term /= n_mb;
    out.drac.value_term /= n_mb;
    out.adversarial.policy_kl_term /= n_mb;
  }
  if (out.phi_steps > 0) {
    const double k = static_cast<double>(out.phi_steps);
    out.adversarial.perturber_loss /= k;
    out.adversarial.mean_distortion /= k;
    out.adversarial.mean_kl /= k;
  }
  return out;
}

}  // namespace apo::adversarial
