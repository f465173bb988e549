#pragma once

#include "apo/ppo/rollout.hpp"

namespace apo::ppo {

// Generalized advantage estimation, computed backward over the batch:
//   delta_t = r_t + gamma * next_value_t * (1 - terminated_t) - value_old_t
//   A_t     = delta_t + gamma * lambda * (1 - terminated_t) * (1 - truncated_t) * A_{t+1}
// Truncation keeps the bootstrap value (recorded in next_value) but ends the
// lambda chain, since the next transition belongs to a new episode.
// Fills batch.advantages and batch.returns = advantages + value_old.
void compute_gae(RolloutBatch& batch, double gamma, double lambda);

}  // namespace apo::ppo
