// Serial reference path against the OpenMP kernels on the reconstruction grids.

#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "pcls/adjoint.hpp"

using namespace pcls;

namespace {

struct State {
  Grid grid;
  NodalField A, phi, p;
  QuadVectorField mbar;
  Material material{MaterialCurve{}};
};

const State& state(int dim) {
  static std::map<int, State> cache;
  auto it = cache.find(dim);
  if (it != cache.end()) return it->second;
  const Grid g = build_grid(dim);
  std::mt19937_64 rng(dim);
  std::uniform_real_distribution<double> u(-0.3, 0.3), w(1.0, 2.0);
  NodalField A = NodalField::zeros(g), phi = NodalField::zeros(g), p = NodalField::zeros(g);
  for (int n = 0; n < g.n_nodes(); ++n) {
    A.values[n] = u(rng);
    p.values[n] = u(rng);
    phi.values[n] = w(rng);
  }
  for (int n : g.boundary_nodes()) A.values[n] = p.values[n] = 0.0;
  QuadVectorField mbar = gradient_at_quad(p);
  return cache.emplace(dim, State{g, A, phi, p, mbar}).first->second;
}

Exec exec_of(const benchmark::State& s) { return s.range(1) == 0 ? Exec::serial : Exec::parallel; }

void BM_Mass(benchmark::State& s) {
  const auto& st = state(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(assemble_mass(st.grid, exec_of(s)));
}

void BM_Tangent(benchmark::State& s) {
  const auto& st = state(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(assemble_tangent(st.A, st.phi, st.material, exec_of(s)));
}

void BM_Residual(benchmark::State& s) {
  const auto& st = state(static_cast<int>(s.range(0)));
  const SourceField J([](double x, double) { return 500.0 * x; });
  for (auto _ : s) benchmark::DoNotOptimize(assemble_residual(st.A, st.phi, J, st.material, exec_of(s)));
}

void BM_GradientFunctional(benchmark::State& s) {
  const auto& st = state(static_cast<int>(s.range(0)));
  for (auto _ : s)
    benchmark::DoNotOptimize(gradient_functional(st.A, st.p, st.phi, st.material, 0.001, exec_of(s)));
}

void BM_QuadGradients(benchmark::State& s) {
  const auto& st = state(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(gradient_at_quad(st.A, exec_of(s)));
}

void BM_Misfit(benchmark::State& s) {
  const auto& st = state(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(evaluate_misfit(st.A, st.mbar, exec_of(s)));
}

// Args: {dim, 0 = serial | 1 = parallel}
#define PCLS_KERNEL(fn) BENCHMARK(fn)->ArgsProduct({{40, 50, 200}, {0, 1}})->ArgNames({"dim", "parallel"})

PCLS_KERNEL(BM_Mass);
PCLS_KERNEL(BM_Tangent);
PCLS_KERNEL(BM_Residual);
PCLS_KERNEL(BM_GradientFunctional);
PCLS_KERNEL(BM_QuadGradients);
PCLS_KERNEL(BM_Misfit);

}  // namespace

BENCHMARK_MAIN();
