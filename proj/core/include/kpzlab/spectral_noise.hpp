#pragma once

#include <vector>

#include "kpzlab/fft.hpp"
#include "kpzlab/noise.hpp"
#include "kpzlab/smoothing.hpp"

namespace kpzlab {

// Per-mode data for a frame: multipliers m_k and the Fourier amplitude A_k of one
// mollifier translate, for k = 0..K.  A point at (t_i, x_i) contributes
// A_k e^{-2 pi i k x_i / L} g((t - t_i) / time_scale) to mode k of the noise.
struct ModeTable {
  Frame frame;
  Mollifier theta;
  PolynomialSmoothing q;
  long K = 0;
  std::vector<double> m;
  std::vector<double> A;

  // K is the largest mode with A_k > rel_tol * A_0, capped at max_modes.
  static ModeTable build(const PolynomialSmoothing& q, const Mollifier& theta, const Frame& frame,
                         long max_modes = 1 << 20, double rel_tol = 1e-17);
  double wavenumber(long k) const;  // 2 pi k / L
  double sigma() const { return frame.time_scale; }
};

// Exact per-step forcing int_{t_n}^{t_{n+1}} e^{-m_k (t_{n+1} - s)} xi_hat(s, k) ds for
// n = 0..nsteps-1, stored row-major as nsteps x (K + 1).  Points outside the grid window
// (padded by the mollifier radius) are ignored, so callers must check coverage.
std::vector<cplx> noise_forcing(const PointCloud& cloud, const ModeTable& table, double t0, double dt,
                                std::size_t nsteps, bool compensate = true);

// d_x P * (one mollifier translate at p), evaluated at (t, x) by a mode sum.
double psi_point_kernel(const ModeTable& table, double t, double x, const Point& p);

// One mollifier translate at p evaluated at (t, x) via its mode sum (k = -K..K).
double noise_point_kernel(const ModeTable& table, double t, double x, const Point& p);

// sum_i psi_point_kernel(table, t, x, p_i) over the cloud.  Points older than the mollifier
// radius use the pure exponential decay of each mode; modes below `tol` are skipped.
double psi_at(const PointCloud& cloud, const ModeTable& table, double t, double x, double tol = 1e-17);

// Tabulated g(p) = psi_point_kernel(table, 0, 0, p) over p = (-tau, -y), tau on graded
// Gauss-Legendre panels from -R sigma to the free-field tail and y on a uniform periodic grid.
struct KernelQuadrature {
  std::vector<double> tau;
  std::vector<double> weight;  // time weights; the y weight is dy
  std::size_t ny = 0;
  double dy = 0.0;
  double intensity = 1.0;
  std::vector<double> values;  // tau-major, ny per row

  // intensity * int phi(g(p)) dp
  template <class Phi>
  double integrate(Phi&& phi) const {
    double total = 0.0;
    for (std::size_t i = 0; i < tau.size(); ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < ny; ++j) row += phi(values[i * ny + j]);
      total += weight[i] * row;
    }
    return total * dy * intensity;
  }
};

KernelQuadrature point_kernel_quadrature(const ModeTable& table, double tail_tol = 1e-16);

// Var psi(t, x) = intensity * L * sum_k 2 w_k^2 A_k^2 int G_k^2; closed form for the Gaussian
// profile, quadrature otherwise.
double psi_variance(const ModeTable& table);

// Smallest T with exp(-m_1 T) < tol: the causal history that matters for the free field.
double free_field_tail(const ModeTable& table, double tol = 1e-12);

}  // namespace kpzlab
