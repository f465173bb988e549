#include "apo/env/wrappers.hpp"

#include <random>

#include "apo/common/error.hpp"

namespace apo::env {

namespace {

EnvSpec widened(const Env& base, const NoisyWrapConfig& cfg) {
  if (cfg.target_dim < base.spec().obs_dim)
    throw ConfigError("noisy_wrap: target_dim " + std::to_string(cfg.target_dim) +
                      " < base obs_dim " + std::to_string(base.spec().obs_dim));
  if (!(cfg.noise_std >= 0.0)) throw ConfigError("noisy_wrap: noise_std must be >= 0");
  EnvSpec s = base.spec();
  s.obs_dim = cfg.target_dim;
  return s;
}

}  // namespace

NoisyStateWrapper::NoisyStateWrapper(std::unique_ptr<Env> base, NoisyWrapConfig cfg)
    : Env(widened(*base, cfg)), base_(std::move(base)), cfg_(cfg), rng_(cfg.rng_seed) {}

std::string NoisyStateWrapper::id() const {
  return base_->id() + "-noisy" + std::to_string(cfg_.target_dim);
}

std::vector<double> NoisyStateWrapper::expand(std::span<const double> s) {
  const std::size_t d = s.size();
  require(d > 0, "NoisyStateWrapper: empty base observation");
  std::vector<double> out(cfg_.target_dim);
  std::copy(s.begin(), s.end(), out.begin());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k + d < cfg_.target_dim; ++k)
    out[d + k] = s[k % d] + cfg_.noise_std * normal(rng_);
  return out;
}

std::vector<double> NoisyStateWrapper::do_reset(std::uint64_t seed) {
  rng_.seed(mix_seed(cfg_.rng_seed, seed));
  return expand(base_->reset(seed));
}

StepResult NoisyStateWrapper::do_step(std::span<const double> action) {
  StepResult r = base_->step(action);
  r.next_obs = expand(r.next_obs);
  r.truncated = false;
  return r;
}

std::unique_ptr<Env> noisy_wrap(std::unique_ptr<Env> base, const NoisyWrapConfig& cfg) {
  return std::make_unique<NoisyStateWrapper>(std::move(base), cfg);
}

std::unique_ptr<Env> make_env(const std::string& id, const std::optional<NoisyWrapConfig>& noisy) {
  auto base = make_base_env(id);
  if (noisy) return noisy_wrap(std::move(base), *noisy);
  return base;
}

void AmplitudeScale::validate() const {
  if (!(alpha <= beta)) throw ConfigError("amplitude_scale: alpha must be <= beta");
}

double draw_amplitude(Rng& rng, const AmplitudeScale& range) {
  range.validate();
  if (range.alpha == range.beta) {
    // Consume one draw so the stream position does not depend on the range.
    (void)rng();
    return range.alpha;
  }
  std::uniform_real_distribution<double> u(range.alpha, range.beta);
  return u(rng);
}

std::vector<double> amplitude_scale(std::span<const double> obs, Rng& rng,
                                    const AmplitudeScale& range, double* factor_out) {
  const double c = draw_amplitude(rng, range);
  if (factor_out) *factor_out = c;
  std::vector<double> out(obs.begin(), obs.end());
  for (double& x : out) x *= c;
  return out;
}

}  // namespace apo::env
