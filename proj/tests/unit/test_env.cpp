#include <doctest.h>

#include <cmath>

#include "apo/common/error.hpp"
#include "apo/env/env.hpp"
#include "apo/env/wrappers.hpp"

using namespace apo;

TEST_CASE("pointmass dynamics by hand") {
  env::PointMassReach e;
  e.reset(1);
  e.set_state(std::vector<double>{0.5, -0.5}, std::vector<double>{0.0, 0.2});
  const auto r = e.step(std::vector<double>{1.0, -1.0});
  // v = 0.9 v + 0.1 a; p += 0.05 v
  CHECK(e.velocity()[0] == doctest::Approx(0.1));
  CHECK(e.velocity()[1] == doctest::Approx(0.18 - 0.1));
  CHECK(e.position()[0] == doctest::Approx(0.5 + 0.005));
  CHECK(e.position()[1] == doctest::Approx(-0.5 + 0.05 * 0.08));
  const double px = e.position()[0], py = e.position()[1];
  CHECK(r.reward == doctest::Approx(std::exp(-(px * px + py * py))));
  CHECK(r.next_obs == std::vector<double>{px, py, e.velocity()[0], e.velocity()[1]});
}

TEST_CASE("pointmass clips actions and stops at the walls") {
  env::PointMassReach e;
  e.reset(2);
  e.set_state(std::vector<double>{1.999, 0.0}, std::vector<double>{1.0, 0.0});
  e.step(std::vector<double>{50.0, 0.0});  // clipped to 1
  CHECK(e.position()[0] == env::PointMassReach::kWall);
  CHECK(e.velocity()[0] == 0.0);
}

TEST_CASE("reward is bounded by one per step, so the ceiling is the horizon") {
  env::PointMassReach e;
  e.reset(3);
  e.set_state(std::vector<double>{0.0, 0.0}, std::vector<double>{0.0, 0.0});
  double total = 0.0;
  env::StepResult r;
  do {
    r = e.step(std::vector<double>{0.0, 0.0});
    total += r.reward;
  } while (!r.done());
  CHECK(total == doctest::Approx(e.return_ceiling()));
  CHECK(r.truncated);
  CHECK_FALSE(r.terminated);
  CHECK(e.elapsed_steps() == 500);
}

TEST_CASE("episode lifecycle errors") {
  env::PointMassReach e(3);
  CHECK_THROWS_AS(e.step(std::vector<double>{0.0, 0.0}), EnvError);
  e.reset(0);
  CHECK_THROWS_AS(e.step(std::vector<double>{0.0}), ContractViolation);
  for (int i = 0; i < 3; ++i) e.step(std::vector<double>{0.0, 0.0});
  CHECK_FALSE(e.episode_active());
  CHECK_THROWS_AS(e.step(std::vector<double>{0.0, 0.0}), EnvError);
  CHECK_THROWS_AS(env::make_base_env("cartpole"), ConfigError);
}

TEST_CASE("reset is a pure function of the seed") {
  env::PointMassReach a, b;
  CHECK(a.reset(17) == b.reset(17));
  CHECK(a.reset(17) != a.reset(18));
  for (double x : a.reset(99)) CHECK(std::abs(x) <= 1.0);
}

TEST_CASE("linear stabilize: zero state and zero action give zero return") {
  env::LinearStabilize e(0.0);
  const auto obs = e.reset(5);
  for (double x : obs) CHECK(x == 0.0);
  double total = 0.0;
  env::StepResult r;
  do {
    r = e.step(std::vector<double>{0.0, 0.0});
    total += r.reward;
  } while (!r.done());
  CHECK(total == 0.0);
  CHECK_FALSE(std::signbit(total));
}

TEST_CASE("linear stabilize: uncontrolled state norm is preserved (rotation blocks)") {
  env::LinearStabilize e;
  const auto x0 = e.reset(6);
  double n0 = 0.0;
  for (double v : x0) n0 += v * v;
  const auto r = e.step(std::vector<double>{0.0, 0.0});
  double n1 = 0.0;
  for (double v : r.next_obs) n1 += v * v;
  CHECK(n1 == doctest::Approx(n0).epsilon(1e-12));
  CHECK(r.reward == doctest::Approx(-n1));
}

TEST_CASE("noisy wrapper shape, prefix and id") {
  auto e = env::make_env("pointmass", env::NoisyWrapConfig{});
  CHECK(e->spec().obs_dim == 32);
  CHECK(e->id() == "pointmass-noisy32");
  auto& w = dynamic_cast<env::NoisyStateWrapper&>(*e);
  const auto obs = e->reset(4);
  CHECK(obs.size() == 32);
  const auto& base = dynamic_cast<const env::PointMassReach&>(w.base());
  CHECK(obs[0] == base.position()[0]);
  CHECK(obs[1] == base.position()[1]);
  const auto r = e->step(std::vector<double>{0.3, 0.3});
  CHECK(r.next_obs[0] == base.position()[0]);
  CHECK(r.next_obs[3] == base.velocity()[1]);
}

TEST_CASE("noisy wrapper: zero noise copies source elements cyclically") {
  auto e = env::make_env("linstab", env::NoisyWrapConfig{20, 0.0, 0});
  const auto obs = e->reset(8);
  for (std::size_t k = 8; k < 20; ++k) CHECK(obs[k] == obs[(k - 8) % 8]);
}

TEST_CASE("noisy wrapper is reproducible per reset seed and fresh per step") {
  auto a = env::make_env("pointmass", env::NoisyWrapConfig{});
  auto b = env::make_env("pointmass", env::NoisyWrapConfig{});
  CHECK(a->reset(3) == b->reset(3));
  const auto s1 = a->step(std::vector<double>{0.0, 0.0}).next_obs;
  const auto s2 = a->step(std::vector<double>{0.0, 0.0}).next_obs;
  CHECK(s1[10] != s2[10]);
  auto c = env::make_env("pointmass", env::NoisyWrapConfig{32, 1.0, 7});
  CHECK(c->reset(3) != b->reset(3));
}

TEST_CASE("noisy wrapper rejects a target below the base dimension or negative noise") {
  CHECK_THROWS(env::make_env("linstab", env::NoisyWrapConfig{7, 1.0, 0}));
  CHECK_THROWS(env::make_env("pointmass", env::NoisyWrapConfig{32, -1.0, 0}));
}

TEST_CASE("amplitude scaling draws one factor per call within range") {
  Rng rng(1);
  const env::AmplitudeScale range{};
  const std::vector<double> x{1.0, -2.0, 0.5};
  for (int t = 0; t < 1000; ++t) {
    double c = 0.0;
    const auto y = env::amplitude_scale(x, rng, range, &c);
    CHECK(c >= 0.6);
    CHECK(c <= 1.2);
    for (std::size_t i = 0; i < 3; ++i) CHECK(y[i] == x[i] * c);
  }
  // degenerate range: identity, but the draw is still consumed
  Rng r1(5), r2(5);
  const auto y = env::amplitude_scale(x, r1, env::AmplitudeScale{1.0, 1.0});
  CHECK(y == x);
  r2.discard(1);
  CHECK(r1() == r2());
  CHECK_THROWS(env::AmplitudeScale{1.2, 0.6}.validate());
}
