#include "apo/ppo/rollout.hpp"

#include <algorithm>
#include <cmath>

#include "apo/common/error.hpp"

namespace apo::ppo {

ObservationNormalizer::ObservationNormalizer(std::size_t dim) : mean_(dim, 0.0), var_(dim, 1.0) {}

void ObservationNormalizer::update(std::span<const double> obs) {
  require(obs.size() == mean_.size(), "ObservationNormalizer: dimension mismatch");
  const double total = count_ + 1.0;
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    const double delta = obs[i] - mean_[i];
    const double new_mean = mean_[i] + delta / total;
    const double m2 = var_[i] * count_ + delta * delta * count_ / total;
    mean_[i] = new_mean;
    var_[i] = m2 / total;
  }
  count_ = total;
}

std::vector<double> ObservationNormalizer::normalize(std::span<const double> obs) const {
  require(obs.size() == mean_.size(), "ObservationNormalizer: dimension mismatch");
  std::vector<double> out(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i)
    out[i] = std::clamp((obs[i] - mean_[i]) / std::sqrt(var_[i] + 1e-8), -10.0, 10.0);
  return out;
}

void ObservationNormalizer::restore(double count, std::vector<double> mean,
                                    std::vector<double> var) {
  require(mean.size() == var.size(), "ObservationNormalizer::restore: size mismatch");
  count_ = count;
  mean_ = std::move(mean);
  var_ = std::move(var);
}

std::vector<double> ObservationPipeline::process(std::span<const double> raw, double* scale_out) {
  std::vector<double> obs(raw.begin(), raw.end());
  if (normalizer) {
    if (update_normalizer) normalizer->update(obs);
    obs = normalizer->normalize(obs);
  }
  double scale = 1.0;
  if (amplitude) obs = env::amplitude_scale(obs, augment_rng, *amplitude, &scale);
  if (scale_out) *scale_out = scale;
  return obs;
}

RolloutCollector::RolloutCollector(std::unique_ptr<env::Env> env, std::uint64_t env_seed,
                                   ObservationPipeline pipeline, Rng action_rng)
    : env_(std::move(env)),
      env_seed_(env_seed),
      pipeline_(std::move(pipeline)),
      action_rng_(action_rng) {
  start_episode();
}

void RolloutCollector::start_episode() {
  auto raw = env_->reset(mix_seed(env_seed_, episode_index_++));
  current_obs_ = pipeline_.process(raw, &current_scale_);
  episode_return_ = 0.0;
  episode_length_ = 0;
}

RolloutBatch RolloutCollector::collect(const policy::ActorCritic& ac, std::size_t steps) {
  require(steps > 0, "collect_rollout: steps must be > 0");
  require(ac.obs_dim() == env_->spec().obs_dim, "collect_rollout: policy/env obs_dim mismatch");
  require(ac.action_dim() == env_->spec().action_dim,
          "collect_rollout: policy/env action_dim mismatch");
  RolloutBatch batch;
  batch.transitions.reserve(steps);

  for (std::size_t t = 0; t < steps; ++t) {
    Transition tr;
    tr.obs = current_obs_;
    tr.aug_scale = current_scale_;
    const policy::GaussianActionDist dist = ac.dist(tr.obs);
    tr.action = policy::sample(dist, action_rng_);
    tr.log_prob_old = policy::log_prob(dist, tr.action);
    tr.value_old = ac.value(tr.obs);
    if (!std::isfinite(tr.log_prob_old) || !std::isfinite(tr.value_old))
      throw NonFiniteError("collect_rollout: non-finite log-prob or value");

    env::StepResult r = env_->step(tr.action);
    tr.reward = r.reward;
    tr.terminated = r.terminated;
    tr.truncated = r.truncated && !r.terminated;
    episode_return_ += r.reward;
    ++episode_length_;
    ++global_step_;

    if (r.done()) {
      if (tr.truncated) tr.next_value = ac.value(pipeline_.process(r.next_obs));
      batch.episodes.push_back({global_step_, episode_return_, episode_length_});
      start_episode();
    } else {
      current_obs_ = pipeline_.process(r.next_obs, &current_scale_);
    }
    batch.transitions.push_back(std::move(tr));
  }

  for (std::size_t t = 0; t + 1 < steps; ++t) {
    Transition& tr = batch.transitions[t];
    if (!tr.terminated && !tr.truncated) tr.next_value = batch.transitions[t + 1].value_old;
  }
  // current_obs_ is the observation the next rollout starts from.
  batch.bootstrap_value = ac.value(current_obs_);
  Transition& last = batch.transitions.back();
  if (!last.terminated && !last.truncated) last.next_value = batch.bootstrap_value;
  return batch;
}

}  // namespace apo::ppo
