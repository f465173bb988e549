#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "apo/common/rng.hpp"

namespace apo::env {

struct EnvSpec {
  std::size_t obs_dim = 0;
  std::size_t action_dim = 0;
  std::vector<double> action_low;
  std::vector<double> action_high;
  std::size_t max_episode_steps = 500;

  void validate() const;
};

struct StepResult {
  std::vector<double> next_obs;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  bool done() const { return terminated || truncated; }
};

// Gym-style episodic environment. The public reset/step pair enforces the
// episode contract (action clipping, time-limit truncation, no stepping a
// finished episode); subclasses implement the dynamics.
class Env {
 public:
  explicit Env(EnvSpec spec);
  virtual ~Env() = default;
  Env(const Env&) = delete;
  Env& operator=(const Env&) = delete;

  const EnvSpec& spec() const { return spec_; }
  virtual std::string id() const = 0;

  // Deterministic in `seed`.
  std::vector<double> reset(std::uint64_t seed);
  // Actions are clipped to [action_low, action_high]. Throws EnvError when
  // called before reset or after the episode ended.
  StepResult step(std::span<const double> action);

  std::size_t elapsed_steps() const { return elapsed_; }
  bool episode_active() const { return active_; }

 protected:
  virtual std::vector<double> do_reset(std::uint64_t seed) = 0;
  // `action` is already clipped. Leave `truncated` false; the base sets it.
  virtual StepResult do_step(std::span<const double> action) = 0;

 private:
  EnvSpec spec_;
  std::size_t elapsed_ = 0;
  bool active_ = false;
};

// Planar point mass driven toward the origin.
//   v <- 0.9 v + 0.1 a,  p <- p + 0.05 v,  reward = exp(-|p - goal|^2)
// Initial p ~ Uniform[-1, 1]^2, v = 0. Positions are confined to
// [-2, 2]^2 (hitting a wall zeroes that velocity component), so
// reward lies in [exp(-8), 1]. Never terminates; truncates at 500 steps.
// A policy can collect at most max_episode_steps reward per episode, which
// is the return ceiling used by the learning checks.
class PointMassReach final : public Env {
 public:
  static constexpr double kWall = 2.0;

  explicit PointMassReach(std::size_t max_episode_steps = 500);
  std::string id() const override { return "pointmass"; }

  // Directly place the mass (for tests and scripted checks).
  void set_state(std::span<const double> position, std::span<const double> velocity);
  std::span<const double> position() const { return pos_; }
  std::span<const double> velocity() const { return vel_; }

  double return_ceiling() const { return static_cast<double>(spec().max_episode_steps); }

 protected:
  std::vector<double> do_reset(std::uint64_t seed) override;
  StepResult do_step(std::span<const double> action) override;

 private:
  std::vector<double> observe() const;
  std::vector<double> pos_{0.0, 0.0};
  std::vector<double> vel_{0.0, 0.0};
  std::vector<double> goal_{0.0, 0.0};
};

// Eight-dimensional linear system x <- A x + B a with two inputs.
// A is block-diagonal with four 2x2 rotations (angles 0.05, 0.1, 0.15, 0.2
// rad), so the open-loop state norm is preserved and only control decays it.
// B couples input 0 to the even coordinates and input 1 to the odd ones
// with gain 0.1. reward = -x^T x - 0.01 a^T a. Initial x ~ Uniform[-s, s]^8
// with s = init_scale. No process noise.
class LinearStabilize final : public Env {
 public:
  explicit LinearStabilize(double init_scale = 1.0, std::size_t max_episode_steps = 500);
  std::string id() const override { return "linstab"; }

  void set_state(std::span<const double> x);
  std::span<const double> state() const { return x_; }

 protected:
  std::vector<double> do_reset(std::uint64_t seed) override;
  StepResult do_step(std::span<const double> action) override;

 private:
  double init_scale_;
  std::vector<double> a_;  // 8x8 row-major
  std::vector<double> b_;  // 8x2 row-major
  std::vector<double> x_;
};

// "pointmass" or "linstab".
std::unique_ptr<Env> make_base_env(const std::string& id);

}  // namespace apo::env
