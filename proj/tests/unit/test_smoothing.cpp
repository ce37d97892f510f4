#include <cmath>
#include <numbers>

#include "doctest.h"
#include "kpzlab/error.hpp"
#include "kpzlab/fft.hpp"
#include "kpzlab/smoothing.hpp"

using namespace kpzlab;

namespace {

ErrorKind kind_of(const std::vector<double>& c) {
  try {
    PolynomialSmoothing::validate(c);
  } catch (const LabError& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

// Periodized heat kernel of d_t = d_x^2 by images.
double heat_images(double t, double x) {
  double s = 0.0;
  for (int j = -20; j <= 20; ++j) s += std::exp(-(x + j) * (x + j) / (4.0 * t)) / std::sqrt(4.0 * std::numbers::pi * t);
  return s;
}

const PolynomialSmoothing kQ = PolynomialSmoothing::validate({1.0, 1.0});

}  // namespace

TEST_CASE("validate_smoothing rejects each failing clause") {
  CHECK(kind_of({1.0}) == ErrorKind::DegreeTooLow);
  CHECK(kind_of({1.0, -1.0}) == ErrorKind::NotPositive);
  CHECK(kind_of({2.0, 1.0}) == ErrorKind::QuadraticNotUnit);
  // r^2 - 3 r^4 + r^6 dips below zero near r^2 = 1.5 although the leading term is positive.
  CHECK(kind_of({1.0, -3.0, 1.0}) == ErrorKind::NotPositive);
  auto q = PolynomialSmoothing::validate({1.0, 1.0});
  CHECK(q.degree_half() == 2);
  CHECK(q(0.0) == 0.0);
  CHECK(PolynomialSmoothing::validate({1.0, -1.0, 1.0}).degree_half() == 3);
}

TEST_CASE("multiplier values") {
  MultiplierFamily f0(kQ, 0.0, 16);
  CHECK(f0.multiplier(2) == doctest::Approx(std::pow(4.0 * std::numbers::pi, 2)).epsilon(1e-15));
  CHECK(f0.multiplier(0) == 0.0);
  MultiplierFamily f5(kQ, 0.5, 16);
  const double pi = std::numbers::pi;
  CHECK(f5.multiplier(1) == doctest::Approx(4.0 * (pi * pi + pi * pi * pi * pi)).epsilon(1e-14));
  CHECK(f5.multiplier(1) == doctest::Approx(429.115).epsilon(1e-6));
  CHECK(f5.multiplier(-3) == f5.multiplier(3));
  CHECK(f5.multiplier(0) == 0.0);
  CHECK_THROWS_AS(f5.multiplier(17), LabError);
}

TEST_CASE("multiplier converges to the Laplacian symbol at rate eps^2") {
  // For Q = r^2 + r^4, (m_eps(k) - m_0(k)) / eps^2 = (2 pi k)^4 exactly.
  for (long k : {1L, 3L, 7L}) {
    MultiplierFamily f0(kQ, 0.0, 10);
    for (double eps : {0.2, 0.05, 0.01}) {
      MultiplierFamily fe(kQ, eps, 10);
      const double ratio = (fe.multiplier(k) - f0.multiplier(k)) / (eps * eps);
      CHECK(ratio == doctest::Approx(std::pow(2.0 * std::numbers::pi * k, 4)).epsilon(1e-9));
    }
  }
}

TEST_CASE("semigroup property and mass conservation per mode") {
  MultiplierFamily f(kQ, 0.1, 64);
  for (long k = 0; k <= 64; ++k) {
    const double m = f.multiplier(k);
    const double s = 0.013, t = 0.0042;
    CHECK(std::exp(-m * (s + t)) == doctest::Approx(std::exp(-m * s) * std::exp(-m * t)).epsilon(1e-13).scale(1e-300));
  }
  // e^{tL} f keeps the spatial mean of f.
  const std::size_t n = 64;
  RealFft fft(n);
  std::vector<double> g(n), h(n);
  for (std::size_t j = 0; j < n; ++j) g[j] = 1.3 + std::sin(2 * std::numbers::pi * 3 * j / n) + 0.2 * std::cos(2 * std::numbers::pi * 11 * j / n);
  std::vector<cplx> c(n / 2 + 1);
  fft.forward(g.data(), c.data());
  const double mean0 = c[0].real();
  for (std::size_t k = 0; k < c.size(); ++k) c[k] *= std::exp(-f.multiplier(static_cast<long>(k)) * 0.01);
  fft.inverse(c.data(), h.data());
  double mean1 = 0.0;
  for (double v : h) mean1 += v / n;
  CHECK(mean1 == doctest::Approx(mean0).epsilon(1e-14));
}

TEST_CASE("greens function: mass, heat-kernel oracle, parity, non-anticipation") {
  SUBCASE("spatial integral is one") {
    MultiplierFamily f(kQ, 0.1, 60);
    GridSpec g{12, 256, -0.01, 0.01};
    auto gp = greens_function(f, g);
    for (std::size_t n = 0; n < g.nt; ++n) {
      double s = 0.0;
      for (std::size_t j = 0; j < g.nx; ++j) s += gp.P.at(n, j) / g.nx;
      if (gp.P.time(n) > 0.0) CHECK(s == doctest::Approx(1.0).epsilon(1e-13));
      else CHECK(s == 0.0);
    }
  }
  SUBCASE("eps = 0 agrees with the periodized heat kernel") {
    MultiplierFamily f0(kQ, 0.0, 40);
    GridSpec g{3, 64, 0.1, 0.1};
    auto gp = greens_function(f0, g);
    CHECK(gp.P.at(0, 16) == doctest::Approx(heat_images(0.1, 0.25)).epsilon(1e-8));
    CHECK(std::fabs(gp.P.at(0, 16) - heat_images(0.1, 0.25)) < 1e-8);
  }
  SUBCASE("even in x on the full grid, derivative odd") {
    MultiplierFamily f(kQ, 0.05, 200);
    GridSpec g{40, 128, 0.0005, 0.003};
    auto gp = greens_function(f, g);
    double worst = 0.0, worst_d = 0.0;
    for (std::size_t n = 0; n < g.nt; ++n)
      for (std::size_t j = 1; j < g.nx; ++j) {
        worst = std::max(worst, std::fabs(gp.P.at(n, j) - gp.P.at(n, g.nx - j)));
        worst_d = std::max(worst_d, std::fabs(gp.dP.at(n, j) + gp.dP.at(n, g.nx - j)));
      }
    CHECK(worst < 1e-10);
    CHECK(worst_d < 1e-8);
  }
  SUBCASE("derivative field matches pointwise evaluation") {
    MultiplierFamily f(kQ, 0.1, 80);
    GridSpec g{4, 64, 0.002, 0.01};
    auto gp = greens_function(f, g);
    for (std::size_t n = 0; n < g.nt; ++n)
      for (std::size_t j = 0; j < g.nx; j += 5) {
        CHECK(gp.P.at(n, j) == doctest::Approx(green_derivative(kQ, 0.1, gp.P.time(n), gp.P.space(j), 0, 0)).epsilon(1e-9).scale(1.0));
        CHECK(gp.dP.at(n, j) == doctest::Approx(green_derivative(kQ, 0.1, gp.P.time(n), gp.P.space(j), 0, 1)).epsilon(1e-9).scale(1.0));
      }
  }
  SUBCASE("insufficient cutoff is refused") {
    MultiplierFamily f(kQ, 0.1, 5);
    GridSpec g{4, 64, 1e-4, 0.01};
    CHECK_THROWS_AS(greens_function(f, g), LabError);
    try {
      greens_function(f, g);
    } catch (const LabError& e) {
      CHECK(e.kind() == ErrorKind::UnresolvedMode);
    }
  }
}

TEST_CASE("pointwise heat-kernel derivatives: image and mode sums agree") {
  auto q = PolynomialSmoothing::laplacian();
  for (double t : {0.3, 0.45})
    for (double x : {0.05, 0.3})
      for (int m = 0; m <= 1; ++m)
        for (int l = 0; l <= 2; ++l) {
          // t slightly above the switch point uses mode sums.
          const double a = green_derivative(q, 0.0, t, x, m, l);
          const double b = green_derivative(kQ, 0.0, t, x, m, l);
          CHECK(a == doctest::Approx(b).epsilon(1e-9).scale(1e-12));
        }
  // image branch against central differences of the image branch
  const double t = 0.01, x = 0.07, h = 1e-5;
  const double dt_num = (green_derivative(kQ, 0.0, t + h * 1e-2, x, 0, 0) - green_derivative(kQ, 0.0, t - h * 1e-2, x, 0, 0)) / (2e-2 * h);
  CHECK(green_derivative(kQ, 0.0, t, x, 1, 0) == doctest::Approx(dt_num).epsilon(1e-5));
  const double dx_num = (green_derivative(kQ, 0.0, t, x + h, 0, 1) - green_derivative(kQ, 0.0, t, x - h, 0, 1)) / (2 * h);
  CHECK(green_derivative(kQ, 0.0, t, x, 0, 2) == doctest::Approx(dx_num).epsilon(1e-6));
}

TEST_CASE("kernel decomposition") {
  MultiplierFamily f(kQ, 0.1, 60);
  GridSpec g{150, 64, -0.02, 0.01};
  auto gp = greens_function(f, g);
  auto kp = decompose_kernel(gp.P);
  for (std::size_t n = 0; n < g.nt; ++n) {
    const double t = gp.P.time(n);
    for (std::size_t j = 0; j < g.nx; ++j) {
      CHECK(std::fabs(kp.K.at(n, j) + kp.R.at(n, j) - gp.P.at(n, j)) <= 4e-16 * std::fabs(gp.P.at(n, j)));
      if (t <= 0.0 || t >= 1.0) CHECK(kp.K.at(n, j) == 0.0);
    }
  }
  // K(1.2, x) = 0 for every x
  const std::size_t n12 = static_cast<std::size_t>(std::lround((1.2 - g.t0) / g.dt));
  for (std::size_t j = 0; j < g.nx; ++j) CHECK(kp.K.at(n12, j) == 0.0);
  for (std::size_t n = 0; n < g.nt; ++n)
    for (std::size_t j = 1; j < g.nx; ++j) CHECK(kp.K.at(n, j) == doctest::Approx(kp.K.at(n, g.nx - j)).epsilon(1e-10).scale(1e-10));
  CHECK_THROWS_AS(decompose_kernel(greens_function(f, GridSpec{10, 64, 0.01, 0.01}).P), LabError);
}

TEST_CASE("remainder is smooth uniformly in eps") {
  // Second-order finite-difference sup of R_eps over t in [0, 2].
  std::vector<double> sups;
  for (double eps : {0.05, 0.1, 0.2}) {
    MultiplierFamily f(kQ, eps, 400);
    GridSpec g{401, 64, 0.005, 0.005};
    auto kp = decompose_kernel(greens_function(f, g).P);
    sups.push_back(hessian_sup(kp.R));
  }
  const double lo = *std::min_element(sups.begin(), sups.end());
  const double hi = *std::max_element(sups.begin(), sups.end());
  CHECK(std::isfinite(hi));
  CHECK(hi / lo < 3.0);
}
