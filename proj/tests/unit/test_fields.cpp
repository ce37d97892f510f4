#include <doctest.h>

#include <cmath>
#include <vector>

#include "kpzlab/error.hpp"
#include "kpzlab/fields.hpp"
#include "kpzlab/quadrature.hpp"
#include "kpzlab/rng.hpp"
#include "kpzlab/stats.hpp"

using namespace kpzlab;

namespace {

const PolynomialSmoothing& quartic() {
  static const auto q = PolynomialSmoothing::validate({1.0, 1.0});
  return q;
}

// Standard error of the sample variance from the fourth central moment.
double variance_stderr(const std::vector<double>& x) {
  const double m = mean(x);
  double m2 = 0, m4 = 0;
  for (double v : x) {
    const double d = v - m;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= x.size();
  m4 /= x.size();
  return std::sqrt((m4 - m2 * m2) / x.size());
}

}  // namespace

TEST_CASE("nonlinearity presets and validation") {
  for (const char* name : {"w2", "w4", "cos"}) {
    const auto f = Nonlinearity::preset(name);
    CHECK_NOTHROW(validate_nonlinearity(f));
    CHECK(f.F(1.3) == f.F(-1.3));
  }
  CHECK_THROWS_AS(Nonlinearity::preset("w3"), LabError);

  auto odd = Nonlinearity::preset("w2");
  odd.F = [](double w) { return w * w + 0.1 * w; };
  CHECK_THROWS_AS(validate_nonlinearity(odd), LabError);

  auto fast = Nonlinearity::preset("w4");
  fast.growth_M = 2.0;
  CHECK_THROWS_AS(validate_nonlinearity(fast), LabError);

  // a tabulated w^2 reproduces the preset
  std::vector<double> samples;
  for (int j = 0; j < 41; ++j) samples.push_back(0.1 * j * 0.1 * j);
  const auto tab = Nonlinearity::table(samples, 0.1, "w2-table");
  CHECK_NOTHROW(validate_nonlinearity(tab));
  CHECK(tab.F(1.234) == doctest::Approx(1.234 * 1.234).epsilon(1e-6));
  CHECK(tab.F(-2.5) == doctest::Approx(6.25).epsilon(1e-6));
  CHECK(tab.dF(1.7) == doctest::Approx(3.4).epsilon(1e-4));
  CHECK(tab.d2F(0.9) == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(tab.F(7.0) == doctest::Approx(49.0).epsilon(1e-4));
}

TEST_CASE("free field: Malliavin identity and agreement with the point sum") {
  const double eps = 0.25;
  const auto table = ModeTable::build(quartic(), Mollifier::gaussian(), Frame::macro(eps));
  const GridSpec grid{5, 32, 0.0, eps * eps / 8.0};
  const double t_end = grid.t0 + grid.dt * (grid.nt - 1);
  auto cloud = free_field_cloud(table, grid.t0, t_end, 314);
  const auto base = free_field(cloud, table, grid);
  CHECK(base.tail_estimate < 1e-15);

  // grid values against the direct sum over the cloud
  double worst = 0.0, scale = 0.0;
  for (std::size_t n = 0; n < grid.nt; ++n)
    for (std::size_t j = 0; j < grid.nx; j += 5) {
      const double direct = psi_at(cloud, table, base.psi.time(n), base.psi.space(j));
      worst = std::max(worst, std::abs(direct - base.psi.at(n, j)));
      scale = std::max(scale, std::abs(direct));
    }
  CHECK(worst < 1e-11 * scale);

  const Point u{0.01, 0.37};
  cloud.points.push_back(u);
  const auto bumped = free_field(cloud, table, grid);
  double dev = 0.0, kscale = 0.0;
  for (std::size_t n = 0; n < grid.nt; ++n)
    for (std::size_t j = 0; j < grid.nx; ++j) {
      const double k = psi_point_kernel(table, base.psi.time(n), base.psi.space(j), u);
      dev = std::max(dev, std::abs(bumped.psi.at(n, j) - base.psi.at(n, j) - k));
      kscale = std::max(kscale, std::abs(k));
    }
  CHECK(dev < 1e-11 * kscale);

  PointCloud short_cloud = cloud;
  short_cloud.box.t_lo = -0.01;
  CHECK_THROWS_AS(free_field(short_cloud, table, grid), LabError);
}

TEST_CASE("free-field variance: closed form against direct quadrature") {
  const double eps = 0.25;
  const auto table = ModeTable::build(quartic(), Mollifier::gaussian(), Frame::macro(eps));
  const double edge = 6.0 * table.sigma();
  const double tail = free_field_tail(table, 1e-12);
  // int over point locations of the squared kernel at the origin
  auto row = [&](double tau) {
    return composite_gauss(
        [&](double y) {
          const double k = psi_point_kernel(table, 0.0, 0.0, Point{-tau, y});
          return k * k;
        },
        0.0, 1.0, 16);
  };
  const double direct = table.frame.intensity() * (composite_gauss(row, -edge, edge, 24) + composite_gauss(row, edge, tail, 60));
  CHECK(psi_variance(table) == doctest::Approx(direct).epsilon(1e-6));
  const auto kq = point_kernel_quadrature(table);
  CHECK(kq.integrate([](double g) { return g * g; }) == doctest::Approx(direct).epsilon(1e-6));
}

TEST_CASE("free field Monte Carlo: mean zero, variance and stationarity") {
  const double eps = 0.2;
  const auto table = ModeTable::build(quartic(), Mollifier::gaussian(), Frame::macro(eps));
  const double target = eps * psi_variance(table);
  const std::size_t R = 3000;
  const GridSpec grid{8, 32, 0.0, eps * eps / 8.0};
  const double t_end = grid.t0 + grid.dt * (grid.nt - 1);
  CounterRng pick(77);
  std::vector<std::pair<std::size_t, std::size_t>> nodes;
  for (int i = 0; i < 5; ++i)
    nodes.emplace_back(static_cast<std::size_t>(pick.uniform() * grid.nt), static_cast<std::size_t>(pick.uniform() * grid.nx));
  std::vector<std::vector<double>> samples(nodes.size(), std::vector<double>(R));
  for (std::size_t r = 0; r < R; ++r) {
    const auto cloud = free_field_cloud(table, grid.t0, t_end, derive_seed(5, "ff", r));
    const auto ff = free_field(cloud, table, grid);
    for (std::size_t i = 0; i < nodes.size(); ++i)
      samples[i][r] = std::sqrt(eps) * ff.psi.at(nodes[i].first, nodes[i].second);
  }
  const auto m = mean_estimate(samples[0]);
  CHECK(std::abs(m.mean) < 3 * m.stderr_);
  for (const auto& s : samples) {
    const double v = variance(s);
    CHECK(std::abs(v - target) < 3 * variance_stderr(s));
  }
}

TEST_CASE("coupling constants at finite eps") {
  const auto w2 = Nonlinearity::preset("w2");
  const auto est = coupling_mc(w2, quartic(), Mollifier::gaussian(), 0.1, 1000, 1);
  CHECK(std::abs(est.value - 1.0) < 1e-12);
  CHECK(est.stderr_ == 0.0);
  CHECK_THROWS_AS(coupling_mc(w2, quartic(), Mollifier::gaussian(), 0.1, 10, 1), LabError);

  const double eps = 0.1;
  const auto table = ModeTable::build(quartic(), Mollifier::gaussian(), Frame::macro(eps));
  const double oracle = 6.0 * eps * psi_variance(table);
  const auto w4 = Nonlinearity::preset("w4");
  const auto q4 = coupling_quadrature(w4, quartic(), Mollifier::gaussian(), eps);
  CHECK(q4.value == doctest::Approx(oracle).epsilon(1e-6));
  const auto mc4 = coupling_mc(w4, quartic(), Mollifier::gaussian(), eps, 3000, 2);
  CHECK(std::abs(mc4.value - oracle) < 3 * mc4.stderr_);

  const auto cosf = Nonlinearity::preset("cos");
  const auto qc = coupling_quadrature(cosf, quartic(), Mollifier::gaussian(), eps);
  const auto mcc = coupling_mc(cosf, quartic(), Mollifier::gaussian(), eps, 3000, 3);
  CHECK(std::abs(mcc.value - qc.value) < 3 * mcc.stderr_);
  CHECK(qc.value < 0.0);
  // deterministic under the seed
  const auto again = coupling_mc(cosf, quartic(), Mollifier::gaussian(), eps, 3000, 3);
  CHECK(again.value == mcc.value);
  CHECK(again.stderr_ == mcc.stderr_);
}

TEST_CASE("plane coupling constant") {
  const auto w2 = Nonlinearity::preset("w2");
  const auto lim2 = coupling_limit(w2, quartic(), Mollifier::gaussian(), {8, 16}, 0, 1);
  CHECK(lim2.estimate.value == 1.0);

  const auto w4 = Nonlinearity::preset("w4");
  const auto lim4 = coupling_limit(w4, quartic(), Mollifier::gaussian(), {8, 16}, 1500, 9);
  REQUIRE(lim4.ladder.size() == 2);
  CHECK(std::abs(lim4.estimate.value - 6.0 * lim4.ladder.back().g2) < 3 * lim4.estimate.stderr_);

  CHECK_THROWS_AS(coupling_limit(w2, quartic(), Mollifier::gaussian(), {4, 8}, 0, 1), LabError);
  CHECK_THROWS_AS(coupling_limit(w2, quartic(), Mollifier::gaussian(), {1, 2, 16}, 0, 1), LabError);
  CHECK_NOTHROW(coupling_limit(w2, quartic(), Mollifier::gaussian(), {8, 16, 32}, 0, 1));

  // the finite-eps couplings approach the plane value monotonically for F = cos
  const auto cosf = Nonlinearity::preset("cos");
  const auto lim = coupling_limit(cosf, quartic(), Mollifier::gaussian(), {16, 32}, 0, 1);
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {0.2, 0.1, 0.05}) {
    const auto a = coupling_quadrature(cosf, quartic(), Mollifier::gaussian(), eps);
    const double gap = std::abs(a.value - lim.extrapolated);
    CHECK(gap < prev);
    prev = gap;
  }
}

TEST_CASE("first-order renormalisation constants") {
  const double eps = 0.1;
  const auto table = ModeTable::build(quartic(), Mollifier::gaussian(), Frame::macro(eps));
  const auto t = renorm_constants(Nonlinearity::preset("w2"), quartic(), Mollifier::gaussian(), eps, 3000, 4);
  CHECK(t.a_eps == 1.0);
  const auto& c = t.at("2'");
  CHECK(std::abs(c.value - psi_variance(table)) < 3 * c.stderr_);
  CHECK(t.drift == doctest::Approx(c.value));
  CHECK_THROWS_AS(t.at("2'2'0"), LabError);

  // C_<2'> grows as eps decreases
  double prev = 0.0;
  for (double e : {0.2, 0.1, 0.05}) {
    const auto tab = ModeTable::build(quartic(), Mollifier::gaussian(), Frame::macro(e));
    CHECK(psi_variance(tab) > prev);
    prev = psi_variance(tab);
  }
}
