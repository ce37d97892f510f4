#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kpzlab/noise.hpp"
#include "kpzlab/nonlinearity.hpp"
#include "kpzlab/smoothing.hpp"
#include "kpzlab/spectral_noise.hpp"

namespace kpzlab {

struct FreeField {
  SpaceTimeField psi;
  double history = 0.0;        // causal window before the first grid time
  double tail_estimate = 0.0;  // exp(-m_1 history), the neglected memory
};

// Causal window for the free field: e^{-m_1 T} < tol, capped at t_kernel.
double free_field_history(const ModeTable& table, double tol = 1e-16, double t_kernel = 4.0);

// Time range a cloud must cover for free_field on [t0, t_end].
Box free_field_box(const ModeTable& table, double t0, double t_end, double tol = 1e-16);

// Psi = P' * xi on the grid by exact per-mode integration of the forcing from t0 - history.
// Throws CoverageGap when the cloud box misses part of the window.
FreeField free_field(const PointCloud& cloud, const ModeTable& table, const GridSpec& grid, double tol = 1e-16);

struct CouplingEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t replicas = 0;
  double epsilon = 0.0;  // 0 marks the plane construction
  std::string method;    // "exact", "quadrature" or "monte-carlo"
};

struct LadderPoint {
  double length = 0.0;
  double value = 0.0;
  double stderr_ = 0.0;
  double g2 = 0.0;  // int g^2
};

struct CouplingLimit {
  CouplingEstimate estimate;  // at the largest period
  std::vector<LadderPoint> ladder;
  double extrapolated = 0.0;  // 2 a(L_max) - a(L_max / 2) when both rungs exist
  double extrapolated_stderr = 0.0;
};

enum class CouplingMethod { Auto, MonteCarlo, Quadrature };

// E F''(X) for X = s * I_1(g), g the tabulated point kernel, from the characteristic
// function (trigonometric F) or from cumulants (polynomial F).  Throws InvalidArgument
// for other F.
double expected_second_derivative(const Nonlinearity& f, const KernelQuadrature& kq, double scale);

// exp(int (e^{i v s g} - i v s g - 1) dmu).
std::complex<double> kernel_char_function(const KernelQuadrature& kq, double scale, double v);

// a_eps = 1/2 E F''(sqrt(eps) Psi_eps(0)) by Monte Carlo over clouds in the macro frame.
CouplingEstimate coupling_mc(const Nonlinearity& f, const PolynomialSmoothing& q, const Mollifier& theta, double eps,
                             std::size_t replicas, std::uint64_t seed);

// a_eps from the tabulated kernel (characteristic function or cumulants).
CouplingEstimate coupling_quadrature(const Nonlinearity& f, const PolynomialSmoothing& q, const Mollifier& theta,
                                     double eps);

// a = 1/2 E F''((P' * xi_bar)(0)) on plane tori of the given periods.  Throws BoxTooSmall
// when the largest period is below 16 or, with three or more periods, when the last two
// 1/L-extrapolations of int g^2 differ by more than box_tol.
CouplingLimit coupling_limit(const Nonlinearity& f, const PolynomialSmoothing& q, const Mollifier& theta,
                             const std::vector<double>& lengths, std::size_t replicas, std::uint64_t seed,
                             CouplingMethod method = CouplingMethod::Auto, double box_tol = 0.05);

struct RenormConstant {
  double value = 0.0;
  double stderr_ = 0.0;
};

struct RenormTable {
  std::string f_tag;
  std::string q_tag;
  std::string theta_tag;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::size_t replicas = 0;
  double a_eps = 0.0;
  double a_eps_stderr = 0.0;
  double drift = 0.0;  // C_eps = a_eps C_<2'> + offset
  double drift_stderr = 0.0;
  double drift_offset = 0.0;
  std::map<std::string, RenormConstant> constants;

  bool has(const std::string& tag) const { return constants.count(tag) != 0; }
  // Throws MissingConstant.
  const RenormConstant& at(const std::string& tag) const;
};

// First-order constants: a_eps, C_<2'> = E F(sqrt(eps) Psi) / (a_eps eps) and the drift.
RenormTable renorm_constants(const Nonlinearity& f, const PolynomialSmoothing& q, const Mollifier& theta, double eps,
                             std::size_t replicas, std::uint64_t seed, double drift_offset = 0.0);

// Sample clouds covering the free-field window that ends at time t in the given frame.
PointCloud free_field_cloud(const ModeTable& table, double t_lo, double t_hi, std::uint64_t seed);

}  // namespace kpzlab
