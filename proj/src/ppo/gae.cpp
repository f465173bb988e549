#include "apo/ppo/gae.hpp"

namespace apo::ppo {

void compute_gae(RolloutBatch& batch, double gamma, double lambda) {
  const std::size_t n = batch.size();
  batch.advantages.assign(n, 0.0);
  batch.returns.assign(n, 0.0);
  double next_adv = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const Transition& tr = batch.transitions[t];
    const double not_term = tr.terminated ? 0.0 : 1.0;
    const double carry = (tr.terminated || tr.truncated) ? 0.0 : 1.0;
    const double delta = tr.reward + gamma * tr.next_value * not_term - tr.value_old;
    const double adv = delta + gamma * lambda * carry * next_adv;
    batch.advantages[t] = adv;
    batch.returns[t] = adv + tr.value_old;
    next_adv = adv;
  }
}

}  // namespace apo::ppo
