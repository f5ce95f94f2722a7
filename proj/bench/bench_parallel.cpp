// Serial reference (threads = 1) against the OpenMP kernels on the same seeded instances.

#include <benchmark/benchmark.h>

#include "dualkit/correction.hpp"
#include "dualkit/problems.hpp"
#include "dualkit/projsplit.hpp"

using namespace dualkit;

namespace {

SolverConfig config(const benchmark::State& state, int iters, double tau)
{
  SolverConfig cfg;
  cfg.max_iters = iters;
  cfg.tau = tau;
  cfg.threads = static_cast<int>(state.range(0));
  cfg.record_fractional = false;
  return cfg;
}

void BM_psc(benchmark::State& state)
{
  const int J = 8;
  const Index d = 400;
  const ConvexFn E = ConvexFn::quadratic(random_spd(1, d, 50.0), Vector::Ones(d));
  const Decomposition dec = Decomposition::blocks(std::vector<Index>(J, d / J));
  const LocalSolver ls;
  const SolverConfig cfg = config(state, 20, 1.0 / J);
  for (auto _ : state) { benchmark::DoNotOptimize(psc(E, dec, ls, cfg, Vector::Zero(d)).last()); }
}

void BM_parallel_dykstra(benchmark::State& state)
{
  const int J = 8;
  const PocsProblem P = random_pocs(2, 2000, J);
  const SolverConfig cfg = config(state, 50, 1.0 / J);
  for (auto _ : state) { benchmark::DoNotOptimize(parallel_dykstra(P, cfg).last()); }
}

void BM_parallel_dr(benchmark::State& state)
{
  const int J = 8;
  const MultiConvexProblem P = random_multiconvex(3, 120, J);
  const Blocks v0(J, Vector::Zero(P.dim()));
  const Vector u0 = grad_conjugate(P.F, Vector::Zero(P.dim()));
  const LocalSolver ls;
  const SolverConfig cfg = config(state, 20, 1.0 / J);
  for (auto _ : state) { benchmark::DoNotOptimize(parallel_dr(P, ls, cfg, u0, v0).last()); }
}

} // namespace

BENCHMARK(BM_psc)->ArgName("threads")->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_parallel_dykstra)->ArgName("threads")->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_parallel_dr)->ArgName("threads")->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
