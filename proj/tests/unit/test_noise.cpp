#include <cmath>
#include <numbers>

#include "doctest.h"
#include "kpzlab/error.hpp"
#include "kpzlab/noise.hpp"
#include "kpzlab/quadrature.hpp"
#include "kpzlab/rng.hpp"
#include "kpzlab/smoothing.hpp"
#include "kpzlab/spectral_noise.hpp"
#include "kpzlab/stats.hpp"

using namespace kpzlab;

TEST_CASE("sample_cloud counts and determinism") {
  CHECK(sample_cloud(Box{1.0, 1.0, 3.0}, 5.0, 1).points.empty());
  const int draws = 10000;
  std::vector<double> counts(draws);
  for (int i = 0; i < draws; ++i)
    counts[i] = static_cast<double>(sample_cloud(Box{0.0, 10.0, 10.0}, 1.0, derive_seed(3, "count", i)).points.size());
  const double m = mean(counts);
  CHECK(std::fabs(m - 100.0) < 3.0 * std::sqrt(100.0 / draws));
  const double v = variance(counts);
  const double se = bootstrap_stderr(counts, [](std::span<const double> s) { return variance(s); }, 200, 11);
  CHECK(std::fabs(v - 100.0) < 3.0 * se);

  auto a = sample_cloud(Box{-1.0, 2.0, 4.0}, 7.0, 99);
  auto b = sample_cloud(Box{-1.0, 2.0, 4.0}, 7.0, 99);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].t == b.points[i].t);
    CHECK(a.points[i].x == b.points[i].x);
    CHECK(a.points[i].t >= -1.0);
    CHECK(a.points[i].t < 2.0);
    CHECK(a.points[i].x >= 0.0);
    CHECK(a.points[i].x < 4.0);
  }
  CHECK_THROWS_AS(sample_cloud(Box{0.0, 1e6, 1e6}, 1.0, 1), LabError);
}

TEST_CASE("mollifiers validate") {
  CHECK_NOTHROW(validate_mollifier(Mollifier::gaussian()));
  CHECK_NOTHROW(validate_mollifier(Mollifier::bump()));
  auto skew = Mollifier::custom([](double t, double x) { return std::exp(-t * t - (x - 0.1) * (x - 0.1)) / std::numbers::pi; });
  CHECK_THROWS_AS(validate_mollifier(skew), LabError);
}

TEST_CASE("periodized mollifier") {
  for (const Mollifier& th : {Mollifier::gaussian(), Mollifier::bump()}) {
    auto per = periodize_mollifier(th, 0.5);
    const double P = per.period();
    const double mass = composite_gauss(
        [&](double t) { return composite_gauss([&](double x) { return per(t, x); }, -P / 2, P / 2, 64); }, -8.0, 8.0, 64);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
    for (double t : {-0.3, 0.0, 0.8})
      for (double x : {0.1, 0.6, 0.95}) CHECK(per(t, -x) == doctest::Approx(per(t, x)).epsilon(1e-14));
  }
  auto g = Mollifier::gaussian();
  auto per = periodize_mollifier(g, 0.05);
  for (double t : {0.0, 0.5})
    for (double x : {0.0, 0.25, 0.5}) CHECK(std::fabs(per(t, x) - g(t, x)) < 1e-12);
  auto flat = Mollifier::custom([](double, double) { return 0.0; }, 0.0);
  CHECK_THROWS_AS(periodize_mollifier(flat, 0.1), LabError);
  try {
    periodize_mollifier(flat, 0.1);
  } catch (const LabError& e) {
    CHECK(e.kind() == ErrorKind::TailNotSummable);
  }
  auto slow = Mollifier::custom([](double t, double x) {
    const double r = std::sqrt(std::fabs(t)) + std::fabs(x);
    return std::pow(1.0 + r, -5.0);
  }, 1.0, 4.0);
  CHECK(periodize_mollifier(slow, 0.1).images() > 0);
}

TEST_CASE("point kernel of the mode table equals the nodal mollifier translate") {
  auto q = PolynomialSmoothing::validate({1.0, 1.0});
  const Frame f = Frame::macro(0.1);
  auto table = ModeTable::build(q, Mollifier::gaussian(), f);
  auto per = periodize_mollifier(Mollifier::gaussian(), f.space_scale / f.length);
  Point p{0.003, 0.41};
  for (double t : {0.0, 0.004, 0.01})
    for (double x : {0.0, 0.4, 0.47, 0.9}) {
      const double direct = f.amplitude * per((t - p.t) / f.time_scale, (x - p.x) / f.space_scale);
      CHECK(std::fabs(noise_point_kernel(table, t, x, p) - direct) < 1e-12 * f.amplitude);
    }
}

TEST_CASE("synthesized noise: mean zero and covariance against the autocorrelation") {
  const double eps = 0.1;
  const Frame micro = Frame::micro(eps);
  const auto theta = Mollifier::gaussian();
  GridSpec grid{2, 100, 0.0, 0.5};
  const int reps = 10000;
  std::vector<double> a(reps), b(reps), avg(reps);
  for (int r = 0; r < reps; ++r) {
    auto cloud = sample_cloud(padded_box(micro, theta, 0.0, 0.5), micro.intensity(), derive_seed(17, "cov", r));
    auto xi = synthesize_noise(cloud, theta, micro, grid);
    a[r] = xi.at(0, 0);
    b[r] = xi.at(1, 7);  // (0.5, 0.7)
    avg[r] = mean(xi.values);
  }
  auto ea = mean_estimate(a);
  CHECK(std::fabs(ea.mean) < 3.0 * ea.stderr_);
  auto eavg = mean_estimate(avg);
  CHECK(std::fabs(eavg.mean) < 3.0 * eavg.stderr_);

  std::vector<double> prod(reps);
  const double ma = mean(a), mb = mean(b);
  for (int r = 0; r < reps; ++r) prod[r] = (a[r] - ma) * (b[r] - mb);
  auto ec = mean_estimate(prod);
  // Autocorrelation of the periodized mollifier by quadrature.
  auto per = periodize_mollifier(theta, eps);
  const double vt = 0.5, vx = 0.7;
  const double oracle = composite_gauss(
      [&](double t) {
        return composite_gauss([&](double x) { return per(t, x) * per(t + vt, x + vx); }, -5.0, 5.0, 80);
      },
      -7.0, 7.0, 80);
  CHECK(oracle == doctest::Approx(std::exp(-(vt * vt + vx * vx) / 2.0) / (2.0 * std::numbers::pi)).epsilon(1e-9));
  CHECK(std::fabs(ec.mean - oracle) < 3.0 * ec.stderr_);
}

TEST_CASE("micro and macro synthesis agree after the change of variables") {
  const double eps = 0.25;
  const Frame macro = Frame::macro(eps), micro = Frame::micro(eps);
  const auto theta = Mollifier::gaussian();
  GridSpec gmacro{9, 32, 0.0, eps * eps / 8.0};
  GridSpec gmicro{9, 32, 0.0, 1.0 / 8.0};
  auto cloud = sample_cloud(padded_box(macro, theta, 0.0, gmacro.dt * 8), macro.intensity(), 5);
  auto cmicro = map_cloud(cloud, macro, micro);
  auto xm = synthesize_noise(cloud, theta, macro, gmacro);
  auto xu = synthesize_noise(cmicro, theta, micro, gmicro);
  double worst = 0.0;
  for (std::size_t i = 0; i < xm.values.size(); ++i)
    worst = std::max(worst, std::fabs(xm.values[i] - std::pow(eps, -1.5) * xu.values[i]) / (1.0 + std::fabs(xm.values[i])));
  CHECK(worst < 1e-12);
  auto again = synthesize_noise(cloud, theta, macro, gmacro);
  CHECK(again.values == xm.values);
}

TEST_CASE("coverage is enforced") {
  const Frame macro = Frame::macro(0.2);
  GridSpec g{5, 32, 0.0, 0.004};
  auto cloud = sample_cloud(Box{0.0, 0.016, 1.0}, macro.intensity(), 1);
  CHECK_THROWS_AS(synthesize_noise(cloud, Mollifier::gaussian(), macro, g), LabError);
}
