#include <cmath>
#include <numbers>

#include "doctest.h"
#include "kpzlab/quadrature.hpp"
#include "kpzlab/rng.hpp"
#include "kpzlab/special.hpp"

using namespace kpzlab;

namespace {

// Direct quadrature of int_0^inf e^{-m r} e^{-(tau - r)^2/sigma^2} dr, split where the
// exponential factor has decayed.
double causal_oracle(double tau, double m, double sigma) {
  const double R = tau + 12.0 * sigma;
  if (R <= 0.0) return 0.0;
  auto f = [&](double r) { return std::exp(-m * r - (tau - r) * (tau - r) / (sigma * sigma)); };
  const double knee = m > 0.0 ? std::min(R, 60.0 / m) : R;
  return composite_gauss(f, 0.0, knee, 2000) + composite_gauss(f, knee, R, 2000);
}

}  // namespace

TEST_CASE("erfcx matches its integral representation") {
  for (double x : {0.0, 0.3, 1.0, 4.0, 12.0, 24.9, 25.1, 40.0, 300.0}) {
    // erfcx(x) = 2/sqrt(pi) int_0^inf exp(-t^2 - 2 x t) dt
    const double upper = std::min(12.0, 60.0 / (2.0 * x + 1e-9));
    const double ref = 2.0 / std::sqrt(std::numbers::pi) *
                       composite_gauss([&](double t) { return std::exp(-t * t - 2.0 * x * t); }, 0.0, upper, 400);
    CHECK(erfcx(x) == doctest::Approx(ref).epsilon(1e-12));
  }
  CHECK(erfcx(-1.0) == doctest::Approx(std::exp(1.0) * std::erfc(-1.0)).epsilon(1e-14));
}

TEST_CASE("phi functions are continuous at the origin") {
  CHECK(phi1(0.0) == 1.0);
  CHECK(phi1(1e-6) == doctest::Approx(-std::expm1(-1e-6) / 1e-6).epsilon(1e-14));
  CHECK(phi2(0.0) == 0.5);
  CHECK(phi2(1e-3) == doctest::Approx((1e-3 + std::expm1(-1e-3)) / 1e-6).epsilon(1e-9));
  CHECK(phi2(2.0) == doctest::Approx((2.0 - 1.0 + std::exp(-2.0)) / 4.0).epsilon(1e-14));
}

TEST_CASE("causal Gaussian-exponential response agrees with quadrature") {
  const double sigma = 0.01;
  for (double m : {0.0, 1.0, 39.5, 1e3, 1e5, 3e6})
    for (double w : {-5.0, -1.0, 0.0, 0.7, 3.0, 20.0}) {
      const double tau = w * sigma;
      const double ref = causal_oracle(tau, m, sigma);
      CHECK(gauss_exp_causal(tau, m, sigma) == doctest::Approx(ref).epsilon(1e-10).scale(1e-300));
    }
}

TEST_CASE("squared integral and autocorrelation closed forms") {
  const double sigma = 0.05;
  for (double m : {2.0, 40.0, 900.0}) {
    const double T = 40.0 / m + 10.0 * sigma;
    auto G = [&](double t) { return gauss_exp_causal(t, m, sigma); };
    const double sq = composite_gauss([&](double t) { return G(t) * G(t); }, -8.0 * sigma, T, 3000);
    CHECK(gauss_exp_causal_sq_integral(m, sigma) == doctest::Approx(sq).epsilon(1e-9));
    for (double tau : {0.0, 0.03, -0.1, 0.4}) {
      const double c = composite_gauss([&](double t) { return G(t) * G(t + tau); }, -8.0 * sigma - std::fabs(tau),
                                       T + std::fabs(tau), 3000);
      CHECK(gauss_exp_causal_autocorr(tau, m, sigma) == doctest::Approx(c).epsilon(1e-9).scale(1e-14));
    }
  }
}

TEST_CASE("counter generator is reproducible and seeds separate") {
  CounterRng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto va = a();
    CHECK(va == b());
    CHECK(va != c());
  }
  CHECK(derive_seed(1, "stage", 0) != derive_seed(1, "stage", 1));
  CHECK(derive_seed(1, "stage", 0) != derive_seed(1, "other", 0));
  CHECK(derive_seed(7, "x", 3) == derive_seed(7, "x", 3));
}

TEST_CASE("uniform and normal draws have the right first moments") {
  CounterRng r(5);
  double s = 0, s2 = 0, n1 = 0, n2 = 0, lo = 1, hi = 0;
  const int N = 200000;
  for (int i = 0; i < N; ++i) {
    const double u = r.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    s += u;
    s2 += u * u;
    const double z = r.normal();
    n1 += z;
    n2 += z * z;
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  CHECK(s / N == doctest::Approx(0.5).epsilon(0.005));
  CHECK(s2 / N == doctest::Approx(1.0 / 3.0).epsilon(0.005));
  CHECK(std::fabs(n1 / N) < 0.01);
  CHECK(n2 / N == doctest::Approx(1.0).epsilon(0.01));
}
