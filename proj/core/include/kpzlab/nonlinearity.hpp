#pragma once

#include <functional>
#include <string>
#include <vector>

namespace kpzlab {

// Even nonlinearity F with its first two derivatives and the growth/Hoelder constants
// (M, beta, C) it is validated against.
struct Nonlinearity {
  std::string tag;
  std::function<double(double)> F;
  std::function<double(double)> dF;
  std::function<double(double)> d2F;
  double growth_M = 0.0;
  double holder_beta = 0.5;
  double bound_C = 1.0;
  // F = trig_scale * cos(trig_freq * w) when trig_freq > 0
  double trig_scale = 0.0;
  double trig_freq = 0.0;
  // F = sum_j even_poly[j] w^{2j} when non-empty
  std::vector<double> even_poly;

  // "w2", "w4" or "cos"; throws InvalidArgument otherwise.
  static Nonlinearity preset(const std::string& name);
  // Samples F(j dw), j = 0..n-1, interpolated by a cubic B-spline with F'(0) = 0 and
  // extended quadratically past the last sample.
  static Nonlinearity table(const std::vector<double>& values, double dw, std::string tag = "table");

  bool trigonometric() const { return trig_freq > 0.0; }
  bool polynomial() const { return !even_poly.empty(); }
};

// Checks evenness, the growth bound for F, F', F'' and the Hoelder bound for F'' on sample
// grids.  Throws InvalidArgument naming the failed clause.
void validate_nonlinearity(const Nonlinearity& f, double w_max = 20.0);

}  // namespace kpzlab
