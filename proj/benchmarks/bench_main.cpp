#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "kpzlab/fields.hpp"
#include "kpzlab/kpz_reference.hpp"
#include "kpzlab/model_objects.hpp"
#include "kpzlab/solver.hpp"
#include "kpzlab/spectral_noise.hpp"

using namespace kpzlab;

namespace {

const PolynomialSmoothing kQ = PolynomialSmoothing::validate({1.0, 1.0});

SolverConfig macro_config(double eps) {
  auto c = SolverConfig::macro(eps, 0.05, kQ, Nonlinearity::preset("cos"));
  c.seed = 7;
  return c;
}

void BM_EtdStep(benchmark::State& state) {
  const double eps = 1.0 / static_cast<double>(state.range(0));
  auto config = macro_config(eps);
  EtdStepper stepper(config);
  std::vector<cplx> hhat(stepper.modes());
  std::vector<double> h(config.nx);
  for (std::size_t j = 0; j < config.nx; ++j) h[j] = std::sin(2.0 * M_PI * j / config.nx);
  stepper.to_modal(h.data(), hhat);
  const std::vector<cplx> forcing(stepper.modes(), cplx(0.0, 0.0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(stepper.step(hhat, forcing.data(), forcing.size()));
    hhat[1] = cplx(0.0, -0.5);
  }
  state.counters["nx"] = static_cast<double>(config.nx);
}
BENCHMARK(BM_EtdStep)->Arg(10)->Arg(20)->Arg(40);

void BM_NoiseForcing(benchmark::State& state) {
  const double eps = 1.0 / static_cast<double>(state.range(0));
  const auto config = macro_config(eps);
  const auto table = ModeTable::build(config.q, config.theta, config.frame);
  const auto cloud = solver_cloud(config);
  for (auto _ : state) benchmark::DoNotOptimize(noise_forcing(cloud, table, 0.0, config.dt, config.nt - 1));
  state.counters["points"] = static_cast<double>(cloud.points.size());
  state.counters["modes"] = static_cast<double>(table.K + 1);
}
BENCHMARK(BM_NoiseForcing)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_FreeField(benchmark::State& state) {
  const double eps = 1.0 / static_cast<double>(state.range(0));
  const auto table = ModeTable::build(kQ, Mollifier::gaussian(), Frame::macro(eps));
  const GridSpec grid{33, static_cast<std::size_t>(8.0 / eps), 0.0, eps * eps / 8.0};
  const double hist = free_field_history(table);
  const auto cloud = free_field_cloud(table, -hist, grid.t0 + grid.dt * (grid.nt - 1), 3);
  for (auto _ : state) benchmark::DoNotOptimize(free_field(cloud, table, grid));
  state.counters["points"] = static_cast<double>(cloud.points.size());
}
BENCHMARK(BM_FreeField)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_ApplyKprime(benchmark::State& state) {
  const double eps = 0.1;
  const std::size_t nx = static_cast<std::size_t>(state.range(0));
  const double dt = eps * eps / 8.0;
  const auto nt = static_cast<std::size_t>(std::ceil(3.5 / dt));
  SpaceTimeField f(nt, nx, -3.0, dt, Frame::macro(eps));
  for (std::size_t n = 0; n < nt; ++n)
    for (std::size_t j = 0; j < nx; ++j) f.at(n, j) = std::cos(2.0 * M_PI * j / nx + 0.3 * n * dt);
  for (auto _ : state) benchmark::DoNotOptimize(apply_kprime(f, kQ, eps));
  state.counters["rows"] = static_cast<double>(nt);
}
BENCHMARK(BM_ApplyKprime)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_ColeHopf(benchmark::State& state) {
  CHConfig c;
  c.nx = static_cast<std::size_t>(state.range(0));
  c.T = 0.05;
  std::uint64_t seed = 0;
  const std::vector<double> h0(c.nx, 0.0);
  for (auto _ : state) {
    c.seed = seed++;
    benchmark::DoNotOptimize(solve_cole_hopf(c, h0));
  }
  state.counters["steps"] = static_cast<double>(c.steps());
}
BENCHMARK(BM_ColeHopf)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
