#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "apo/policy/actor_critic.hpp"
#include "apo/policy/gaussian.hpp"
#include "apo/ppo/losses.hpp"
#include "apo/ppo/rollout.hpp"

namespace apo::testing {

inline policy::NetworkShape small_shape() {
  policy::NetworkShape s;
  s.hidden = {8, 8};
  return s;
}

inline std::vector<double> normal_vec(std::size_t n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> N(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = N(rng);
  return v;
}

// Replaces every weight and bias with N(0, scale^2) so gradients are not
// dominated by the tiny initial output layer.
inline void randomize(policy::ActorCritic& ac, Rng& rng, double scale = 0.5) {
  for (nn::MlpNet* net : {&ac.policy_net, &ac.value_net}) {
    auto p = net->mutable_parameters();
    const auto v = normal_vec(p.size(), rng, scale);
    std::copy(v.begin(), v.end(), p.begin());
  }
}

// Random batch whose "old" log-probs come from a jittered copy of the policy,
// so ratios spread around 1 and both clip branches are exercised.
inline ppo::RolloutBatch random_batch(const policy::ActorCritic& ac, std::size_t n, Rng& rng,
                                      double ratio_jitter = 0.3) {
  ppo::RolloutBatch b;
  std::normal_distribution<double> N(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    ppo::Transition t;
    t.obs = normal_vec(ac.obs_dim(), rng);
    const auto d = ac.dist(t.obs);
    t.action = policy::sample(d, rng);
    t.log_prob_old = policy::log_prob(d, t.action) + ratio_jitter * N(rng);
    t.value_old = ac.value(t.obs) + 0.3 * N(rng);
    t.reward = N(rng);
    b.transitions.push_back(std::move(t));
    b.advantages.push_back(N(rng));
    b.returns.push_back(b.transitions.back().value_old + 0.5 * N(rng));
  }
  return b;
}

inline ppo::Minibatch whole(const ppo::RolloutBatch& b, bool normalize = true) {
  std::vector<std::size_t> idx(b.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return ppo::make_minibatch(b, idx, normalize);
}

// Central differences of f over every entry of `params` (restored afterwards).
inline std::vector<double> central_diff(std::span<double> params, const std::function<double()>& f,
                                        double h = 1e-5) {
  std::vector<double> g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    const double up = f();
    params[i] = keep - h;
    const double down = f();
    params[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||); 0 when both vanish.
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(std::max(na, nb));
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

}  // namespace apo::testing
