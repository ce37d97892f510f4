#include "kpzlab/special.hpp"

#include <cmath>
#include <numbers>

namespace kpzlab {

double erfcx(double x) {
  if (x < 0.0) {
    if (x < -26.0) return HUGE_VAL;
    return 2.0 * std::exp(x * x) - erfcx(-x);
  }
  if (x < 25.0) return std::exp(x * x) * std::erfc(x);
  // Asymptotic series 1/(x sqrt(pi)) * sum_k (-1)^k (2k-1)!! / (2x^2)^k.
  const double inv2x2 = 1.0 / (2.0 * x * x);
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= 5; ++k) {
    term *= -(2.0 * k - 1.0) * inv2x2;
    sum += term;
  }
  return sum / (x * std::sqrt(std::numbers::pi));
}

double phi1(double z) {
  if (std::fabs(z) < 1e-5) return 1.0 - z / 2.0 + z * z / 6.0;
  return -std::expm1(-z) / z;
}

double phi2(double z) {
  if (std::fabs(z) < 1e-3) return 0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0;
  return (z + std::expm1(-z)) / (z * z);
}

double gauss_exp_causal(double tau, double m, double sigma) {
  const double w = tau / sigma;
  const double b = 0.5 * m * sigma;
  const double c = 0.5 * std::sqrt(std::numbers::pi) * sigma;
  const double d = b - w;
  if (d >= 0.0) return c * std::exp(-w * w) * erfcx(d);
  return c * std::exp(b * (b - 2.0 * w)) * std::erfc(d);
}

double gauss_exp_causal_sq_integral(double m, double sigma) {
  return std::numbers::pi * sigma * sigma * erfcx(m * sigma / std::numbers::sqrt2) / (2.0 * m);
}

double gauss_exp_causal_autocorr(double tau, double m, double sigma) {
  // Autocorrelation of exp(-m|.|)/(2m) convolved with the Gaussian autocorrelation
  // sigma sqrt(pi/2) exp(-tau^2/(2 sigma^2)).
  const double rho = sigma * std::numbers::sqrt2;
  const double pref = sigma * std::sqrt(std::numbers::pi / 2.0) / (2.0 * m);
  return pref * (gauss_exp_causal(tau, m, rho) + gauss_exp_causal(-tau, m, rho));
}

}  // namespace kpzlab
