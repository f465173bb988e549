#include <doctest.h>

#include <cmath>
#include <set>

#include "apo/common/error.hpp"
#include "apo/env/wrappers.hpp"
#include "apo/ppo/config.hpp"
#include "apo/ppo/gae.hpp"
#include "apo/ppo/losses.hpp"
#include "apo/ppo/rollout.hpp"
#include "apo/ppo/update.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace apo;
using apo::testing::central_diff;
using apo::testing::relative_error;

namespace {

// One transition with a chosen ratio and advantage, for loss arithmetic.
struct Single {
  policy::ActorCritic ac{2, 1, 3};
  ppo::RolloutBatch batch;
  Single(double ratio, double adv, double v_old = 0.0, double ret = 0.0) {
    ppo::Transition t;
    t.obs = {0.2, -0.1};
    t.action = {0.4};
    t.log_prob_old = policy::log_prob(ac.dist(t.obs), t.action) - std::log(ratio);
    t.value_old = v_old;
    batch.transitions.push_back(t);
    batch.advantages = {adv};
    batch.returns = {ret};
  }
  ppo::Minibatch mb() const { return apo::testing::whole(batch, false); }
};

}  // namespace

TEST_CASE("config defaults and validation") {
  ppo::TrainConfig c;
  CHECK(c.rollout_steps == 2048);
  CHECK(c.learning_rate == 3e-4);
  CHECK(c.gamma == 0.99);
  CHECK(c.gae_lambda == 0.95);
  CHECK(c.num_minibatches == 32);
  CHECK(c.update_epochs == 10);
  CHECK(c.clip_coef == 0.2);
  CHECK(c.value_coef == 0.5);
  CHECK(c.entropy_coef == 0.0);
  CHECK(c.normalize_advantage);
  CHECK(c.clip_value_loss);
  CHECK(c.minibatch_size() == 64);
  c.validate();
  c.num_minibatches = 30;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(ppo::agent_mode_from_string("APO") == ppo::AgentMode::apo);
  CHECK_THROWS_AS(ppo::agent_mode_from_string("sac"), ConfigError);
}

TEST_CASE("GAE equals the direct double sum") {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    auto inst = apo::testing::random_gae_instance(rng, 1 + t, true);
    const double gamma = 0.9 + 0.09 * (t % 3), lambda = 0.5 + 0.1 * (t % 5);
    ppo::compute_gae(inst, gamma, lambda);
    const auto ref = apo::testing::gae_direct(inst, gamma, lambda);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK(inst.advantages[i] == doctest::Approx(ref[i]).epsilon(1e-10));
      CHECK(inst.returns[i] == doctest::Approx(ref[i] + inst.transitions[i].value_old).epsilon(1e-10));
    }
  }
}

TEST_CASE("GAE at lambda 1 is the discounted n-step return minus the value") {
  Rng rng(2);
  for (int t = 0; t < 30; ++t) {
    auto inst = apo::testing::random_gae_instance(rng, 5 + t, true);
    ppo::compute_gae(inst, 0.97, 1.0);
    const auto ref = apo::testing::nstep_advantage(inst, 0.97);
    for (std::size_t i = 0; i < ref.size(); ++i)
      CHECK(inst.advantages[i] == doctest::Approx(ref[i]).epsilon(1e-10));
  }
}

TEST_CASE("GAE: termination cuts bootstrap, truncation bootstraps but cuts the trace") {
  ppo::RolloutBatch b;
  b.transitions.resize(3);
  for (auto& tr : b.transitions) {
    tr.reward = 1.0;
    tr.value_old = 0.5;
    tr.next_value = 0.5;
  }
  b.transitions[0].terminated = true;
  b.transitions[0].next_value = 100.0;  // ignored
  b.transitions[1].truncated = true;
  b.transitions[1].next_value = 2.0;
  ppo::compute_gae(b, 0.9, 0.8);
  CHECK(b.advantages[0] == doctest::Approx(1.0 - 0.5));
  CHECK(b.advantages[1] == doctest::Approx(1.0 + 0.9 * 2.0 - 0.5));
  CHECK(b.advantages[2] == doctest::Approx(1.0 + 0.9 * 0.5 - 0.5));
}

TEST_CASE("advantage normalization") {
  const auto n = ppo::normalize_advantages(std::vector<double>{1.0, 2.0, 3.0, 6.0});
  double m = 0.0, s = 0.0;
  for (double x : n) m += x;
  m /= 4.0;
  for (double x : n) s += (x - m) * (x - m);
  CHECK(std::abs(m) < 1e-12);
  CHECK(std::sqrt(s / 3.0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("clipped surrogate arithmetic") {
  {
    Single s(1.5, 1.0);
    CHECK(ppo::ppo_policy_loss(s.ac, s.mb(), 0.2, nullptr).loss == doctest::Approx(-1.2));
  }
  {
    Single s(0.5, 1.0);  // positive advantage, ratio below range: unclipped term is smaller
    CHECK(ppo::ppo_policy_loss(s.ac, s.mb(), 0.2, nullptr).loss == doctest::Approx(-0.5));
  }
  {
    Single s(0.5, -1.0);  // negative advantage, ratio below range: clip binds
    const auto st = ppo::ppo_policy_loss(s.ac, s.mb(), 0.2, nullptr);
    CHECK(st.loss == doctest::Approx(0.8));
    CHECK(st.clip_fraction == 1.0);
    CHECK(st.mean_ratio == doctest::Approx(0.5));
  }
  {
    Single s(1.0, 2.0);
    const auto st = ppo::ppo_policy_loss(s.ac, s.mb(), 0.2, nullptr);
    CHECK(st.loss == doctest::Approx(-2.0));
    CHECK(st.clip_fraction == 0.0);
    CHECK(st.approx_kl == doctest::Approx(0.0));
  }
}

TEST_CASE("clipped value loss arithmetic") {
  const double v = Single(1.0, 0.0).ac.value(std::vector<double>{0.2, -0.1});
  // value_old far below V: the clipped prediction (v_old + 0.2) is worse, so it is chosen
  Single c(1.0, 0.0, v - 1.0, v + 0.5);
  const double clipped = -1.3, unclipped = -0.5;
  const double want = 0.5 * 0.5 * std::max(clipped * clipped, unclipped * unclipped);
  CHECK(ppo::value_loss(c.ac, c.mb(), {true, 0.2, 0.5}, nullptr) == doctest::Approx(want));
  CHECK(ppo::value_loss(c.ac, c.mb(), {false, 0.2, 0.5}, nullptr) ==
        doctest::Approx(0.25 * unclipped * unclipped));
}

TEST_CASE("policy and value loss gradients match central differences") {
  Rng rng(3);
  for (int t = 0; t < 5; ++t) {
    policy::ActorCritic ac(3, 2, 100 + t, apo::testing::small_shape());
    apo::testing::randomize(ac, rng);
    ac.log_std = {0.1, -0.3};
    const auto batch = apo::testing::random_batch(ac, 12, rng);
    const auto mb = apo::testing::whole(batch);

    policy::ActorCriticGrads g(ac);
    ppo::ppo_policy_loss(ac, mb, 0.2, &g);
    auto pl = [&] { return ppo::ppo_policy_loss(ac, mb, 0.2, nullptr).loss; };
    auto fd_pol = central_diff(ac.policy_net.mutable_parameters(), pl);
    auto fd_ls = central_diff(ac.log_std, pl);
    CHECK(relative_error(g.policy(), fd_pol) < 1e-6);
    CHECK(relative_error(g.log_std(), fd_ls) < 1e-6);
    for (double x : g.value()) CHECK(x == 0.0);

    g.zero();
    const ppo::ValueLossConfig vc{true, 0.2, 0.5};
    ppo::value_loss(ac, mb, vc, &g);
    auto vl = [&] { return ppo::value_loss(ac, mb, vc, nullptr); };
    CHECK(relative_error(g.value(), central_diff(ac.value_net.mutable_parameters(), vl)) < 1e-6);
    for (double x : g.policy()) CHECK(x == 0.0);
  }
}

TEST_CASE("losses: serial and parallel kernels agree bit for bit") {
  Rng rng(4);
  policy::ActorCritic ac(5, 2, 7);
  const auto batch = apo::testing::random_batch(ac, 64, rng);
  const auto mb = apo::testing::whole(batch);
  policy::ActorCriticGrads gs(ac), gp(ac);
  const auto ss = ppo::ppo_policy_loss(ac, mb, 0.2, &gs, kernels::Exec::serial);
  const auto sp = ppo::ppo_policy_loss(ac, mb, 0.2, &gp, kernels::Exec::parallel);
  const double vs = ppo::value_loss(ac, mb, {}, &gs, kernels::Exec::serial);
  const double vp = ppo::value_loss(ac, mb, {}, &gp, kernels::Exec::parallel);
  CHECK(ss.loss == sp.loss);
  CHECK(ss.clip_fraction == sp.clip_fraction);
  CHECK(vs == vp);
  CHECK(std::equal(gs.all().begin(), gs.all().end(), gp.all().begin()));
}

TEST_CASE("ratio is one on the first minibatch of an update") {
  Rng rng(5);
  ppo::TrainConfig cfg;
  cfg.rollout_steps = 256;
  cfg.num_minibatches = 4;
  cfg.update_epochs = 3;
  cfg.total_timesteps = 256;
  policy::ActorCritic ac(4, 2, 1);
  auto env = env::make_env("pointmass", std::nullopt);
  ppo::RolloutCollector col(std::move(env), 1, {}, Rng(2));
  auto batch = col.collect(ac, 256);
  ppo::compute_gae(batch, cfg.gamma, cfg.gae_lambda);
  nn::AdamState adam(ac.parameter_count());
  Rng shuffle(3);
  const auto st = ppo::ppo_update(ac, adam, batch, cfg, shuffle);
  CHECK(st.initial_clip_fraction == 0.0);
  CHECK(st.optimizer_steps == 12);
  CHECK(adam.step_count() == 12);
}

TEST_CASE("rollout collection") {
  policy::ActorCritic ac(4, 2, 1);
  auto env = env::make_env("pointmass", std::nullopt);
  ppo::RolloutCollector col(std::move(env), 9, {}, Rng(2));
  auto b = col.collect(ac, 1200);
  CHECK(b.size() == 1200);
  CHECK(col.global_step() == 1200);
  REQUIRE(b.episodes.size() == 2);
  CHECK(b.episodes[0].global_step == 500);
  CHECK(b.episodes[0].length == 500);
  CHECK(b.episodes[1].global_step == 1000);
  CHECK(b.transitions[499].truncated);
  double ret = 0.0;
  for (std::size_t i = 0; i < 500; ++i) ret += b.transitions[i].reward;
  CHECK(ret == doctest::Approx(b.episodes[0].episodic_return));
  // successor values line up inside an episode
  CHECK(b.transitions[10].next_value == b.transitions[11].value_old);
  CHECK(b.transitions.back().next_value == b.bootstrap_value);
  for (const auto& tr : b.transitions) CHECK(tr.aug_scale == 1.0);

  // same seeds, same batch
  auto env2 = env::make_env("pointmass", std::nullopt);
  ppo::RolloutCollector col2(std::move(env2), 9, {}, Rng(2));
  auto b2 = col2.collect(ac, 1200);
  CHECK(b2.transitions[777].action == b.transitions[777].action);
}

TEST_CASE("observation normalizer tracks mean and variance") {
  ppo::ObservationNormalizer n(2);
  Rng rng(6);
  std::normal_distribution<double> a(3.0, 2.0), b(-1.0, 0.5);
  for (int i = 0; i < 20000; ++i) n.update(std::vector<double>{a(rng), b(rng)});
  CHECK(n.mean()[0] == doctest::Approx(3.0).epsilon(0.02));
  CHECK(n.mean()[1] == doctest::Approx(-1.0).epsilon(0.02));
  CHECK(std::sqrt(n.var()[0]) == doctest::Approx(2.0).epsilon(0.02));
  const auto z = n.normalize(std::vector<double>{3.0, 1000.0});
  CHECK(std::abs(z[0]) < 0.05);
  CHECK(z[1] == 10.0);  // clipped
}
