#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace kpzlab {

// Cole-Hopf sampler for d_t h = d_x^2 h + a (d_x h)^2 + xi on the unit torus through
// Z = exp(a h), d_t Z = d_x^2 Z + a Z xi (Ito).  The white noise is truncated at the grid
// Nyquist: nodal increments are iid N(0, dt / dx).
struct CHConfig {
  double a = 1.0;
  std::size_t nx = 64;
  double dt = 0.0;  // 0 picks dx^2 / 4
  double T = 1.0;
  bool noise = true;
  std::uint64_t seed = 0;

  double step() const;
  std::size_t steps() const;
  // a / (2 dx): the Ito constant, h = log(Z) / a solves KPZ(a) with drift -a / (2 dx).
  double ito_constant() const;
};

struct CHResult {
  std::vector<double> h;  // h(T, x_j), x_j = j / nx
  double min_z = 0.0;  // smallest Z / max Z over the nodes, along the run
  double ito_constant = 0.0;
  std::size_t steps = 0;
  double dt = 0.0;
};

// Lie splitting: Euler-Maruyama multiply Z <- Z (1 + a dW), then the exact heat step in
// Fourier space.  Throws InvalidArgument (a = 0, bad grid), PositivityLost, NonFinite.
CHResult solve_cole_hopf(const CHConfig& config, const std::vector<double>& h0);

// Additive heat equation d_t h = d_x^2 h + xi with the same splitting and noise stream:
// the a -> 0 limit of solve_cole_hopf.
std::vector<double> solve_additive_she(const CHConfig& config, const std::vector<double>& h0);

// Sup over nodes of (h(dt) - h(0)) / dt - (N(h(0)) + N(h(dt))) / 2 for one noiseless step,
// N(h) = d_x^2 h + a (d_x h)^2 with spectral derivatives.  Small (O(dt^2) for smooth data)
// when the transform is consistent with the gradient-squared nonlinearity.
double cole_hopf_residual(const CHConfig& config, const std::vector<double>& h0);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t resamples = 0;
};

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::span<const double> a, std::span<const double> b);

// Statistic with a permutation p-value (1 + #{D* >= D}) / (1 + resamples).  Throws
// InvalidArgument on an empty sample.
KsResult ks_compare(std::span<const double> a, std::span<const double> b, std::size_t resamples = 1000,
                    std::uint64_t seed = 0);

// Samples shifted to median zero.
std::vector<double> median_centered(std::span<const double> x);

}  // namespace kpzlab
