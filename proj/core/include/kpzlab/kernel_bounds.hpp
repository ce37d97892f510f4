#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "kpzlab/noise.hpp"
#include "kpzlab/smoothing.hpp"

namespace kpzlab {

struct BoundSpec {
  Mollifier theta = Mollifier::gaussian();
  // (m, l) pairs for |d_t^m d_x^l P| |x|^{2m+l+1}; m = 1 is restricted to |x| >= floor * eps
  std::vector<std::pair<int, int>> derivatives{{0, 0}, {0, 1}, {1, 0}};
  double time_derivative_floor = 4.0;
  std::vector<double> deltas{0.1, 0.25, 0.5, 0.9};
  int radial = 120;   // geometric radii per decade sweep
  int angular = 48;  // split of the parabolic radius between sqrt|t| and |x|
  bool convolution = true;
};

struct BoundRow {
  std::string bound_id;
  double epsilon = 0.0;
  double delta = 0.0;
  double sup_ratio = 0.0;
  double argmax_t = 0.0;
  double argmax_x = 0.0;
};

struct BoundReport {
  std::vector<BoundRow> rows;
  // (bound_id, delta) whose sup grows by more than 10x from the largest to the smallest eps
  std::vector<std::string> flagged;

  // max/min of sup_ratio over the ladder for one bound.
  double ladder_variation(const std::string& bound_id, double delta = 0.0) const;
  std::vector<std::string> bound_ids() const;
  void write_csv(std::ostream& os) const;
};

// Parabolic norm sqrt|t| + |x| with x taken in [-1/2, 1/2).
double parabolic_norm(double t, double x);

// Sweeps each bound over points with parabolic radius in [eps/4, 1] and reports sup of
// (left side) / (right side without constant).
BoundReport verify_kernel_bounds(const std::vector<MultiplierFamily>& ladder, const BoundSpec& spec = {});

// int over R x T of |x - y|^-alpha (|y - z| + eps)^-beta dy (times eps^{beta-3} when
// `primed`), by graded tensor Gauss-Legendre; z = 0.
double convolution_integral(double alpha, double beta, double eps, double t, double x, bool primed);

}  // namespace kpzlab
