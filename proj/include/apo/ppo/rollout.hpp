#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "apo/common/rng.hpp"
#include "apo/env/env.hpp"
#include "apo/env/wrappers.hpp"
#include "apo/policy/actor_critic.hpp"

namespace apo::ppo {

struct Transition {
  std::vector<double> obs;  // as seen by the networks (after normalization/augmentation)
  std::vector<double> action;
  double log_prob_old = 0.0;
  double reward = 0.0;
  double value_old = 0.0;
  // V of the successor state: value_old of the next transition, V(final obs)
  // on truncation, the batch bootstrap value on the last transition, 0 when
  // terminated.
  double next_value = 0.0;
  bool terminated = false;
  bool truncated = false;
  double aug_scale = 1.0;
};

struct EpisodeRecord {
  std::uint64_t global_step = 0;
  double episodic_return = 0.0;
  std::size_t length = 0;
};

struct RolloutBatch {
  std::vector<Transition> transitions;
  std::vector<double> advantages;
  std::vector<double> returns;
  double bootstrap_value = 0.0;
  std::vector<EpisodeRecord> episodes;

  std::size_t size() const { return transitions.size(); }
};

// Running mean/variance of observations (parallel-variance update).
class ObservationNormalizer {
 public:
  ObservationNormalizer() = default;
  explicit ObservationNormalizer(std::size_t dim);

  void update(std::span<const double> obs);
  std::vector<double> normalize(std::span<const double> obs) const;

  std::size_t dim() const { return mean_.size(); }
  double count() const { return count_; }
  std::span<const double> mean() const { return mean_; }
  std::span<const double> var() const { return var_; }
  void restore(double count, std::vector<double> mean, std::vector<double> var);

 private:
  double count_ = 1e-4;
  std::vector<double> mean_;
  std::vector<double> var_;
};

// Observation pipeline shared by training and evaluation:
// raw -> (optional) running normalization -> (optional) amplitude scaling.
struct ObservationPipeline {
  std::optional<ObservationNormalizer> normalizer;
  std::optional<env::AmplitudeScale> amplitude;
  Rng augment_rng;
  bool update_normalizer = true;

  std::vector<double> process(std::span<const double> raw, double* scale_out = nullptr);
};

// Steps one environment with the current policy, crossing episode
// boundaries. Episode k is reset with seed mix_seed(env_seed, k).
class RolloutCollector {
 public:
  RolloutCollector(std::unique_ptr<env::Env> env, std::uint64_t env_seed,
                   ObservationPipeline pipeline, Rng action_rng);

  RolloutBatch collect(const policy::ActorCritic& ac, std::size_t steps);

  std::uint64_t global_step() const { return global_step_; }
  const env::Env& environment() const { return *env_; }
  ObservationPipeline& pipeline() { return pipeline_; }
  const ObservationPipeline& pipeline() const { return pipeline_; }

 private:
  void start_episode();

  std::unique_ptr<env::Env> env_;
  std::uint64_t env_seed_;
  ObservationPipeline pipeline_;
  Rng action_rng_;
  std::uint64_t episode_index_ = 0;
  std::uint64_t global_step_ = 0;
  std::vector<double> current_obs_;
  double current_scale_ = 1.0;
  double episode_return_ = 0.0;
  std::size_t episode_length_ = 0;
};

}  // namespace apo::ppo
