#pragma once

#include <string>
#include <vector>

#include "kpzlab/field.hpp"

namespace kpzlab {

// Even polynomial Q(r) = sum_j c_j r^{2j}, j = 1..n, with c_1 = 1 and Q > 0 off the origin.
class PolynomialSmoothing {
 public:
  // Throws DegreeTooLow, QuadraticNotUnit or NotPositive.
  static PolynomialSmoothing validate(const std::vector<double>& even_coefficients);

  // The Laplacian symbol r^2; only for the eps = 0 limit and heat-kernel references.
  static PolynomialSmoothing laplacian();

  const std::vector<double>& coefficients() const { return c_; }
  int degree_half() const { return static_cast<int>(c_.size()); }
  double operator()(double r) const;
  // Symbol of the operator on a torus of period `length` with smoothing scale `scale`:
  // scale^-2 Q(2 pi scale k / length), evaluated without cancellation for small scale.
  double symbol(double k, double scale, double length) const;
  std::string tag() const;

 private:
  explicit PolynomialSmoothing(std::vector<double> c) : c_(std::move(c)) {}
  std::vector<double> c_;
};

class MultiplierFamily {
 public:
  MultiplierFamily(PolynomialSmoothing q, double epsilon, long mode_cutoff);

  const PolynomialSmoothing& smoothing() const { return q_; }
  double epsilon() const { return eps_; }
  long mode_cutoff() const { return kmax_; }

  // m_eps(k) = eps^-2 Q(2 pi eps k), m_0(k) = (2 pi k)^2.  Throws ModeOutOfRange.
  double multiplier(long k) const;
  // Same formula without the cutoff check.
  double unchecked(double k) const { return q_.symbol(k, eps_, 1.0); }

 private:
  PolynomialSmoothing q_;
  double eps_;
  long kmax_;
};

double frame_multiplier(const PolynomialSmoothing& q, const Frame& frame, double k);

// Smallest K with exp(-m(K) t_min) < tol.
long choose_mode_cutoff(const PolynomialSmoothing& q, double eps, double t_min, double tol = 1e-14);

struct GreensPair {
  SpaceTimeField P;
  SpaceTimeField dP;  // spatial derivative
  double truncation_estimate = 0.0;
};

// P_eps and P'_eps on the unit torus; nodes with t <= 0 are zero.  Throws UnresolvedMode
// when the neglected modes exceed `tol` at the smallest positive grid time.
GreensPair greens_function(const MultiplierFamily& fam, const GridSpec& grid, double tol = 1e-10);

// Pointwise d_t^m d_x^l P_eps(t, x) on the unit torus (image sums for the heat kernel at
// small t, mode sums otherwise).  Zero for t <= 0.
double green_derivative(const PolynomialSmoothing& q, double eps, double t, double x, int m, int l);

// Smooth time cutoff chi: 1 for t <= inner, 0 for t >= outer.  Space factor is identically 1
// on the torus, so the cutoff only acts in time.
struct TimeCutoff {
  double inner = 0.25;
  double outer = 1.0;
  double operator()(double t) const;
};

struct KernelPair {
  SpaceTimeField K;
  SpaceTimeField R;
  TimeCutoff cutoff;
};

// Throws GridMismatch when the grid does not extend past t = cutoff.outer.
KernelPair decompose_kernel(const SpaceTimeField& P, const TimeCutoff& cutoff = {});

// Largest absolute second-order finite difference (tt, tx, xx) over interior nodes.
double hessian_sup(const SpaceTimeField& f);

}  // namespace kpzlab
