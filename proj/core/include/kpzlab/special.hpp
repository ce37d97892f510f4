#pragma once

namespace kpzlab {

// Scaled complementary error function exp(x^2) erfc(x), accurate for large x.
double erfcx(double x);

// (1 - e^{-z}) / z, continuous at 0.
double phi1(double z);

// (z - 1 + e^{-z}) / z^2 = int_0^1 e^{-z(1-v)} v dv, continuous at 0.
double phi2(double z);

// G(tau) = int_{-inf}^{tau} e^{-m(tau-s)} e^{-s^2/sigma^2} ds for m >= 0, sigma > 0.
double gauss_exp_causal(double tau, double m, double sigma);

// int_R G(tau)^2 dtau for m > 0.
double gauss_exp_causal_sq_integral(double m, double sigma);

// C(tau) = int_R G(s) G(s + tau) ds for m > 0.
double gauss_exp_causal_autocorr(double tau, double m, double sigma);

}  // namespace kpzlab
