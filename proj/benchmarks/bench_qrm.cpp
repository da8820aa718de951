#include <benchmark/benchmark.h>

#include <random>

#include "qrm/model_io.hpp"
#include "qrm/perturbation.hpp"

using namespace qrm;

namespace {

QrmModel sized_model(Index na, Index nc, Index nb, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  auto random_density = [&](Index n) {
    CMat m(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) m(i, j) = Complex(nd(rng), nd(rng));
    CMat rho = m * m.adjoint();
    rho /= rho.trace();
    return CMat(0.5 * (rho + rho.adjoint()));
  };
  QrmModel m;
  m.dims = {na, nc, nb};
  m.reset_a = {random_density(na), 1.0};
  m.reset_b = {random_density(nb), 2.0};
  CMat h(m.dims.total(), m.dims.total());
  for (Index i = 0; i < h.rows(); ++i)
    for (Index j = 0; j < h.cols(); ++j) h(i, j) = Complex(nd(rng), nd(rng));
  m.h_coupling = 0.5 * (h + h.adjoint());
  m.g = 0.01;
  return m;
}

void BM_Kron(benchmark::State& state) {
  const Index n = state.range(0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  CMat a(n, n), b(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      a(i, j) = Complex(nd(rng), nd(rng));
      b(i, j) = Complex(nd(rng), nd(rng));
    }
  for (auto _ : state) benchmark::DoNotOptimize(kron(a, b));
}
BENCHMARK(BM_Kron)->Arg(8)->Arg(16)->Arg(32);

void BM_PartialTrace(benchmark::State& state) {
  const Index nc = state.range(0);
  const QrmModel m = sized_model(3, nc, 3);
  const CMat rho = m.h_coupling;
  for (auto _ : state) benchmark::DoNotOptimize(partial_trace(rho, m.dims, Part::AB));
}
BENCHMARK(BM_PartialTrace)->Arg(2)->Arg(4);

void BM_BuildLindbladian(benchmark::State& state) {
  const Index nc = state.range(0);
  const QrmModel m = sized_model(2, nc, 2);
  for (auto _ : state) benchmark::DoNotOptimize(build_lindbladian(m, 0.01));
}
BENCHMARK(BM_BuildLindbladian)->Arg(2)->Arg(3)->Arg(4);

void BM_SuperopEigvals(benchmark::State& state) {
  const Index nc = state.range(0);
  const QrmModel m = sized_model(2, nc, 2);
  const SuperOp l = build_lindbladian(m, 0.01);
  for (auto _ : state) benchmark::DoNotOptimize(eigvals(l.m));
}
BENCHMARK(BM_SuperopEigvals)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_SuperopExpm(benchmark::State& state) {
  const Index nc = state.range(0);
  const QrmModel m = sized_model(2, nc, 2);
  const SuperOp l = build_lindbladian(m, 0.01);
  for (auto _ : state) benchmark::DoNotOptimize(expm(CMat(2.5 * l.m)));
}
BENCHMARK(BM_SuperopExpm)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_UncoupledTable(benchmark::State& state) {
  const Index nc = state.range(0);
  const QrmModel m = sized_model(2, nc, 2);
  for (auto _ : state) benchmark::DoNotOptimize(UncoupledOperator(m));
}
BENCHMARK(BM_UncoupledTable)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_SeriesOrder(benchmark::State& state) {
  const QrmModel m = preset_model("three-qubit");
  PerturbationContext ctx(m);
  SteadyStateSolver solver(ctx);
  const CMat rho0 = solver.rho0();
  for (auto _ : state) benchmark::DoNotOptimize(solver.apply_map(rho0));
}
BENCHMARK(BM_SeriesOrder)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
