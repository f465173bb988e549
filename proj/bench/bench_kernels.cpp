// Serial vs OpenMP loss kernels on a full-size minibatch.
//   bench_kernels --benchmark_filter=Ppo

#include <benchmark/benchmark.h>

#include "apo/adversarial/perturber.hpp"
#include "apo/ppo/losses.hpp"
#include "support.hpp"

using namespace apo;

namespace {

constexpr std::size_t kObs = 32, kAct = 2;

struct Fixture {
  policy::ActorCritic ac{kObs, kAct, 1};
  adversarial::PerturberNet pert{kObs, 2, 0.5};
  ppo::RolloutBatch batch;
  std::vector<std::vector<double>> xs;

  explicit Fixture(std::size_t n) {
    Rng rng(3);
    batch = apo::testing::random_batch(ac, n, rng);
    const auto mb = apo::testing::whole(batch);
    xs = adversarial::minibatch_observations(mb);
  }
};

kernels::Exec exec_of(const benchmark::State& s) {
  return s.range(1) ? kernels::Exec::parallel : kernels::Exec::serial;
}

void BM_PpoPolicyLoss(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  const auto mb = apo::testing::whole(f.batch);
  policy::ActorCriticGrads g(f.ac);
  for (auto _ : state) {
    g.zero();
    benchmark::DoNotOptimize(ppo::ppo_policy_loss(f.ac, mb, 0.2, &g, exec_of(state)).loss);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ValueLoss(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  const auto mb = apo::testing::whole(f.batch);
  policy::ActorCriticGrads g(f.ac);
  for (auto _ : state) {
    g.zero();
    benchmark::DoNotOptimize(ppo::value_loss(f.ac, mb, {}, &g, exec_of(state)));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PerturberLoss(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  std::vector<double> g(f.pert.net.parameter_count());
  for (auto _ : state) {
    std::fill(g.begin(), g.end(), 0.0);
    benchmark::DoNotOptimize(adversarial::perturber_loss(f.pert, f.ac, f.xs, 1.0, g, exec_of(state)).loss);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void args(benchmark::internal::Benchmark* b) {
  b->ArgNames({"n", "parallel"});
  for (long n : {64, 512})
    for (long p : {0, 1}) b->Args({n, p});
}

}  // namespace

BENCHMARK(BM_PpoPolicyLoss)->Apply(args);
BENCHMARK(BM_ValueLoss)->Apply(args);
BENCHMARK(BM_PerturberLoss)->Apply(args);
BENCHMARK_MAIN();
