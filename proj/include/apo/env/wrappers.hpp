#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apo/common/rng.hpp"
#include "apo/env/env.hpp"

namespace apo::env {

struct NoisyWrapConfig {
  std::size_t target_dim = 32;
  double noise_std = 1.0;
  std::uint64_t rng_seed = 0;
};

// Extends every observation to `target_dim` entries. The first d entries are
// the base observation untouched; appended entry k (0-based) is drawn fresh
// each step from Normal(s[k mod d], noise_std^2).
class NoisyStateWrapper final : public Env {
 public:
  NoisyStateWrapper(std::unique_ptr<Env> base, NoisyWrapConfig cfg);

  std::string id() const override;
  const Env& base() const { return *base_; }
  Env& base() { return *base_; }
  const NoisyWrapConfig& config() const { return cfg_; }

  // Pure observation expansion; exposed for tests.
  std::vector<double> expand(std::span<const double> base_obs);

 protected:
  std::vector<double> do_reset(std::uint64_t seed) override;
  StepResult do_step(std::span<const double> action) override;

 private:
  std::unique_ptr<Env> base_;
  NoisyWrapConfig cfg_;
  Rng rng_;
};

std::unique_ptr<Env> noisy_wrap(std::unique_ptr<Env> base, const NoisyWrapConfig& cfg);

// Base env by id, wrapped when `noisy` is set.
std::unique_ptr<Env> make_env(const std::string& id, const std::optional<NoisyWrapConfig>& noisy);

// Random amplitude scaling: one factor c ~ Uniform[alpha, beta] per call,
// applied to the whole vector.
struct AmplitudeScale {
  double alpha = 0.6;
  double beta = 1.2;
  void validate() const;
};

double draw_amplitude(Rng& rng, const AmplitudeScale& range);
std::vector<double> amplitude_scale(std::span<const double> obs, Rng& rng,
                                    const AmplitudeScale& range, double* factor_out = nullptr);

}  // namespace apo::env
