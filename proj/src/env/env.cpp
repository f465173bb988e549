#include "apo/env/env.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "apo/common/error.hpp"

namespace apo::env {

void EnvSpec::validate() const {
  if (obs_dim == 0 || action_dim == 0) throw ConfigError("EnvSpec: zero dimension");
  if (action_low.size() != action_dim || action_high.size() != action_dim)
    throw ConfigError("EnvSpec: action bounds length != action_dim");
  for (std::size_t i = 0; i < action_dim; ++i)
    if (!(action_low[i] < action_high[i])) throw ConfigError("EnvSpec: action_low >= action_high");
  if (max_episode_steps == 0) throw ConfigError("EnvSpec: max_episode_steps must be > 0");
}

Env::Env(EnvSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

std::vector<double> Env::reset(std::uint64_t seed) {
  auto obs = do_reset(seed);
  require(obs.size() == spec_.obs_dim, "Env::reset: observation size mismatch");
  elapsed_ = 0;
  active_ = true;
  return obs;
}

StepResult Env::step(std::span<const double> action) {
  if (!active_) throw EnvError(id() + ": step called without an active episode (reset first)");
  require(action.size() == spec_.action_dim, "Env::step: action dimension mismatch");
  if (!all_finite(action)) throw RejectedInput(id() + ": non-finite action");
  std::vector<double> clipped(action.begin(), action.end());
  for (std::size_t i = 0; i < clipped.size(); ++i)
    clipped[i] = std::clamp(clipped[i], spec_.action_low[i], spec_.action_high[i]);

  StepResult r = do_step(clipped);
  require(r.next_obs.size() == spec_.obs_dim, "Env::step: observation size mismatch");
  if (!std::isfinite(r.reward)) throw NonFiniteError(id() + ": non-finite reward");
  ++elapsed_;
  r.truncated = elapsed_ >= spec_.max_episode_steps;
  if (r.done()) active_ = false;
  return r;
}

namespace {

EnvSpec box_spec(std::size_t obs_dim, std::size_t action_dim, std::size_t max_steps) {
  EnvSpec s;
  s.obs_dim = obs_dim;
  s.action_dim = action_dim;
  s.action_low.assign(action_dim, -1.0);
  s.action_high.assign(action_dim, 1.0);
  s.max_episode_steps = max_steps;
  return s;
}

}  // namespace

PointMassReach::PointMassReach(std::size_t max_episode_steps)
    : Env(box_spec(4, 2, max_episode_steps)) {}

void PointMassReach::set_state(std::span<const double> position, std::span<const double> velocity) {
  require(position.size() == 2 && velocity.size() == 2, "PointMassReach::set_state: need 2+2");
  pos_.assign(position.begin(), position.end());
  vel_.assign(velocity.begin(), velocity.end());
}

std::vector<double> PointMassReach::observe() const {
  return {pos_[0], pos_[1], vel_[0], vel_[1]};
}

std::vector<double> PointMassReach::do_reset(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  pos_ = {u(rng), u(rng)};
  vel_ = {0.0, 0.0};
  return observe();
}

StepResult PointMassReach::do_step(std::span<const double> action) {
  for (std::size_t i = 0; i < 2; ++i) {
    vel_[i] = 0.9 * vel_[i] + 0.1 * action[i];
    pos_[i] = pos_[i] + 0.05 * vel_[i];
    if (pos_[i] > kWall) {
      pos_[i] = kWall;
      vel_[i] = 0.0;
    } else if (pos_[i] < -kWall) {
      pos_[i] = -kWall;
      vel_[i] = 0.0;
    }
  }
  const double dx = pos_[0] - goal_[0];
  const double dy = pos_[1] - goal_[1];
  StepResult r;
  r.next_obs = observe();
  r.reward = std::exp(-(dx * dx + dy * dy));
  return r;
}

LinearStabilize::LinearStabilize(double init_scale, std::size_t max_episode_steps)
    : Env(box_spec(8, 2, max_episode_steps)),
      init_scale_(init_scale),
      a_(64, 0.0),
      b_(16, 0.0),
      x_(8, 0.0) {
  if (!(init_scale >= 0.0)) throw ConfigError("LinearStabilize: init_scale must be >= 0");
  const double angles[4] = {0.05, 0.1, 0.15, 0.2};
  for (std::size_t k = 0; k < 4; ++k) {
    const double c = std::cos(angles[k]);
    const double s = std::sin(angles[k]);
    const std::size_t i = 2 * k;
    a_[i * 8 + i] = c;
    a_[i * 8 + i + 1] = -s;
    a_[(i + 1) * 8 + i] = s;
    a_[(i + 1) * 8 + i + 1] = c;
  }
  for (std::size_t r = 0; r < 8; ++r) b_[r * 2 + (r % 2)] = 0.1;
}

void LinearStabilize::set_state(std::span<const double> x) {
  require(x.size() == 8, "LinearStabilize::set_state: need 8 values");
  x_.assign(x.begin(), x.end());
}

std::vector<double> LinearStabilize::do_reset(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : x_) v = init_scale_ * u(rng);
  return x_;
}

StepResult LinearStabilize::do_step(std::span<const double> action) {
  std::vector<double> next(8, 0.0);
  for (std::size_t r = 0; r < 8; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < 8; ++c) acc += a_[r * 8 + c] * x_[c];
    acc += b_[r * 2] * action[0] + b_[r * 2 + 1] * action[1];
    next[r] = acc;
  }
  x_ = std::move(next);
  double cost = 0.0;
  for (double v : x_) cost += v * v;
  cost += 0.01 * (action[0] * action[0] + action[1] * action[1]);
  StepResult r;
  r.next_obs = x_;
  r.reward = 0.0 - cost;
  return r;
}

std::unique_ptr<Env> make_base_env(const std::string& id) {
  if (id == "pointmass") return std::make_unique<PointMassReach>();
  if (id == "linstab") return std::make_unique<LinearStabilize>();
  throw ConfigError("unknown environment id '" + id + "' (expected pointmass or linstab)");
}

}  // namespace apo::env
