#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "kpzlab/error.hpp"
#include "kpzlab/kpz_reference.hpp"
#include "kpzlab/quadrature.hpp"
#include "kpzlab/rng.hpp"

using namespace kpzlab;

namespace {

std::vector<double> profile(std::size_t nx, double c0, double c1, double s2) {
  std::vector<double> h(nx);
  for (std::size_t j = 0; j < nx; ++j) {
    const double x = static_cast<double>(j) / nx;
    h[j] = c0 + c1 * std::cos(2.0 * std::numbers::pi * x) + s2 * std::sin(4.0 * std::numbers::pi * x);
  }
  return h;
}

double periodic_heat_kernel(double z, double t) {
  double s = 0.0;
  for (int n = -8; n <= 8; ++n) s += std::exp(-(z + n) * (z + n) / (4.0 * t));
  return s / std::sqrt(4.0 * std::numbers::pi * t);
}

}  // namespace

TEST_CASE("noiseless Cole-Hopf matches the heat-semigroup oracle") {
  CHConfig c;
  c.a = 0.7;
  c.nx = 32;
  c.T = 0.05;
  c.noise = false;
  const auto h0 = profile(c.nx, 0.0, 0.5, 0.3);
  const auto r = solve_cole_hopf(c, h0);
  for (std::size_t j = 0; j < c.nx; ++j) {
    const double x = static_cast<double>(j) / c.nx;
    const double z = composite_gauss(
        [&](double y) {
          const double hy = 0.5 * std::cos(2.0 * std::numbers::pi * y) + 0.3 * std::sin(4.0 * std::numbers::pi * y);
          return periodic_heat_kernel(x - y, c.T) * std::exp(c.a * hy);
        },
        0.0, 1.0, 64);
    CHECK(r.h[j] == doctest::Approx(std::log(z) / c.a).epsilon(1e-10));
  }
  CHECK(r.ito_constant == doctest::Approx(0.7 * 32 / 2.0));
}

TEST_CASE("constant initial height shifts the law") {
  CHConfig c;
  c.a = 1.0;
  c.nx = 16;
  c.T = 0.05;
  std::vector<double> s0, s2;
  for (std::size_t r = 0; r < 500; ++r) {
    c.seed = derive_seed(1, "shift/0", r);
    s0.push_back(solve_cole_hopf(c, std::vector<double>(c.nx, 0.0)).h[0]);
    c.seed = derive_seed(1, "shift/2", r);
    s2.push_back(solve_cole_hopf(c, std::vector<double>(c.nx, 2.0)).h[0] - 2.0);
  }
  const auto ks = ks_compare(s0, s2, 1000, 4);
  CHECK(ks.p_value > 0.01);

  c.seed = 9;
  const auto a = solve_cole_hopf(c, std::vector<double>(c.nx, 0.0));
  const auto b = solve_cole_hopf(c, std::vector<double>(c.nx, 2.0));
  for (std::size_t j = 0; j < c.nx; ++j) CHECK(b.h[j] - 2.0 == doctest::Approx(a.h[j]).epsilon(1e-10));
}

TEST_CASE("small coupling approaches the additive equation") {
  CHConfig c;
  c.nx = 32;
  c.T = 0.1;
  c.seed = 17;
  const auto h0 = profile(c.nx, 0.0, 0.2, 0.0);
  const auto lin = solve_additive_she(c, h0);
  std::vector<double> diffs;
  for (double a : {0.04, 0.02, 0.01}) {
    c.a = a;
    const auto h = solve_cole_hopf(c, h0).h;
    double s = 0.0;
    for (std::size_t j = 0; j < c.nx; ++j) s += (h[j] - lin[j]) * (h[j] - lin[j]);
    diffs.push_back(std::sqrt(s / c.nx));
  }
  CHECK(diffs[0] > 0.0);
  CHECK(diffs[1] / diffs[0] == doctest::Approx(0.5).epsilon(0.1));
  CHECK(diffs[2] / diffs[1] == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("Cole-Hopf consistency and failure modes") {
  CHConfig c;
  c.a = 0.8;
  c.nx = 32;
  c.dt = 1e-4;
  const auto h0 = profile(c.nx, 0.1, 0.4, 0.0);
  CHECK(cole_hopf_residual(c, h0) < 10.0 * c.dt);

  CHConfig zero = c;
  zero.a = 0.0;
  CHECK_THROWS_AS(solve_cole_hopf(zero, h0), LabError);

  CHConfig wild;
  wild.a = 30.0;
  wild.nx = 64;
  wild.dt = 0.01;
  wild.T = 0.1;
  try {
    solve_cole_hopf(wild, std::vector<double>(wild.nx, 0.0));
    FAIL("expected PositivityLost");
  } catch (const LabError& e) {
    CHECK(e.kind() == ErrorKind::PositivityLost);
  }
}

TEST_CASE("two-sample KS statistic") {
  const std::vector<double> x{0.3, -1.0, 2.0, 0.5, 0.5};
  CHECK(ks_statistic(x, x) == 0.0);
  CHECK(ks_compare(x, x, 200, 1).p_value == doctest::Approx(1.0));
  const std::vector<double> hi{10.0, 11.0, 12.5};
  CHECK(ks_statistic(x, hi) == 1.0);
  CHECK(ks_statistic(std::vector<double>{0.0, 1.0}, std::vector<double>{0.5}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(ks_statistic(std::vector<double>{}, x), LabError);
  const auto centered = median_centered(std::vector<double>{1.0, 5.0, 2.0});
  CHECK(centered[0] == -1.0);
  CHECK(centered[1] == 3.0);
}

TEST_CASE("KS permutation p-value is calibrated") {
  CounterRng rng(2026);
  const std::size_t trials = 200;
  std::size_t rejected = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<double> a(1000), b(1000);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    if (ks_compare(a, b, 1000, derive_seed(2026, "ks-calibration", t)).p_value < 0.05) ++rejected;
  }
  const double rate = static_cast<double>(rejected) / trials;
  MESSAGE("rejection rate " << rate);
  CHECK(rate >= 0.03);
  CHECK(rate <= 0.07);
}
