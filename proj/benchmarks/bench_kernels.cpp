#include <benchmark/benchmark.h>

#include <random>

#include <ksred/dynamics3.hpp>
#include <ksred/kepler.hpp>

using namespace ksred;

namespace {

RegState sample_state() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  RegState st;
  for (auto& p : st.pairs) {
    p.Q = {n(rng), n(rng), n(rng), n(rng)};
    p.P = {n(rng), n(rng), n(rng), n(rng)};
  }
  st.params = {{1.0, 1.3, 0.7}, -1.0};
  return st;
}

}  // namespace

static void BM_KsLift(benchmark::State& state) {
  const Vec3 q(0.3, -1.2, 0.5), p(0.1, 0.4, -0.9);
  for (auto _ : state) benchmark::DoNotOptimize(ks_lift(q, p));
}
BENCHMARK(BM_KsLift);

static void BM_HeggieRhs(benchmark::State& state) {
  const RegState st = sample_state();
  for (auto _ : state) benchmark::DoNotOptimize(heggie_rhs(st));
}
BENCHMARK(BM_HeggieRhs);

static void BM_ExtractInvariants(benchmark::State& state) {
  const RegState st = sample_state();
  for (auto _ : state) benchmark::DoNotOptimize(extract_invariants(st.pairs));
}
BENCHMARK(BM_ExtractInvariants);

static void BM_ReducedVelocity(benchmark::State& state) {
  const RegState st = sample_state();
  const MatrixXcd M = extract_invariants(st.pairs).hermitian();
  for (auto _ : state) benchmark::DoNotOptimize(reduced_velocity(M, st.params));
}
BENCHMARK(BM_ReducedVelocity);

static void BM_LiePoissonRhs(benchmark::State& state) {
  const RegState st = sample_state();
  const InvariantBasis basis(3);
  const StructureTensor t(basis);
  const GramPair g = extract_invariants(st.pairs);
  const VectorXd x = basis.coordinates(g);
  const VectorXd grad = coordinate_gradient(basis, g, st.params);
  for (auto _ : state) benchmark::DoNotOptimize(t.lie_poisson_rhs(x, grad));
}
BENCHMARK(BM_LiePoissonRhs);

static void BM_StructureTensor(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(structure_tensor(m));
}
BENCHMARK(BM_StructureTensor)->Arg(1)->Arg(3)->Arg(6)->Unit(benchmark::kMillisecond);

static void BM_CanonicalFlowStep(benchmark::State& state) {
  const RegState st = ingest_bodies({Vec3(0.25, 0, 0), Vec3(-0.25, 0, 0), Vec3(0, 1.5, 0.1)},
                                    {Vec3(0, 0.7, 0), Vec3(0, -0.7, 0), Vec3(-0.7, 0, 0.07)}, {1.0, 1.0, 1.0});
  for (auto _ : state) benchmark::DoNotOptimize(canonical_flow(st, 1.0, 1e-3, {1e-4, 1000}));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_CanonicalFlowStep)->Unit(benchmark::kMillisecond);

static void BM_KeplerFlow(benchmark::State& state) {
  const KeplerParams params{0.5, 1.0, -0.5};
  const PairState s0 = kepler_orbit_state(params, 0.6);
  const double T = fictitious_period(params);
  for (auto _ : state) benchmark::DoNotOptimize(kepler_flow(s0, params, T, T / 1000));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_KeplerFlow)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
