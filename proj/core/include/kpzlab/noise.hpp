#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kpzlab/field.hpp"

namespace kpzlab {

enum class MollifierKind { Gaussian, Bump, Custom };

// Space-time mollifier theta.  Gaussian and Bump are separable, theta = c g(t) f(x), which
// the spectral routines use; Custom carries only the pointwise evaluator.
struct Mollifier {
  MollifierKind kind = MollifierKind::Gaussian;
  std::function<double(double, double)> evaluator;
  double decay_exponent = 1.0;
  double support_radius_hint = 6.0;
  double width = 1.0;  // bump half-width
  double norm = 1.0;   // c
  std::string tag;

  static Mollifier gaussian();
  static Mollifier bump(double width = 2.0);
  static Mollifier custom(std::function<double(double, double)> evaluator, double decay_exponent = 1.0,
                          double support_radius_hint = 6.0, std::string tag = "custom");

  double operator()(double t, double x) const { return evaluator(t, x); }
  bool separable() const { return kind != MollifierKind::Custom; }
  double time_profile(double tau) const;
  double space_profile(double y) const;
  // int f(y) e^{-2 pi i xi y} dy (real, even).
  double space_transform(double xi) const;
  // int_{-inf}^{tau} e^{-m (tau - s)} g(s / sigma) ds.
  double causal_time_response(double tau, double m, double sigma) const;
  // int g(s / sigma) ds over the line.
  double time_mass(double sigma) const;
  // Half-width (in units of the profile argument) outside which the profiles are negligible.
  double effective_radius() const;
};

// Check symmetry, normalization and decay on sample grids; throws InvalidArgument.
void validate_mollifier(const Mollifier& theta);

struct Box {
  double t_lo = 0.0;
  double t_hi = 0.0;
  double period = 1.0;  // x in [0, period)
  double area() const { return (t_hi - t_lo) * period; }
};

struct Point {
  double t = 0.0;
  double x = 0.0;
};

struct PointCloud {
  std::vector<Point> points;
  Box box;
  double intensity = 1.0;
  std::uint64_t seed = 0;
};

// Points sorted by time.  Throws AreaOverflow when intensity * area exceeds max_expected.
PointCloud sample_cloud(const Box& box, double intensity, std::uint64_t seed, double max_expected = 5e7);

// Change of coordinates between frames of the same epsilon (point (t, x) in `from` maps to
// the point with the same micro coordinates in `to`).
PointCloud map_cloud(const PointCloud& cloud, const Frame& from, const Frame& to);

class PeriodicMollifier {
 public:
  // Throws TailNotSummable if theta's decay exponent is not positive.
  PeriodicMollifier(Mollifier theta, double eps);
  double operator()(double t, double x) const;
  int images() const { return images_; }
  double period() const { return period_; }
  const Mollifier& base() const { return theta_; }

 private:
  Mollifier theta_;
  double period_;
  int images_;
  double decay_constant_;
};

PeriodicMollifier periodize_mollifier(const Mollifier& theta, double eps);

// Nodal noise field amp * sum_i theta_per((t - t_i)/tau, (x - x_i)/xs) - amp on `grid`.
// Throws CoverageGap if the cloud box does not cover the grid padded by the mollifier support.
SpaceTimeField synthesize_noise(const PointCloud& cloud, const Mollifier& theta, const Frame& frame,
                                const GridSpec& grid);

// Box covering [t_lo, t_hi] padded by `pad` mollifier widths in the frame's time scale.
Box padded_box(const Frame& frame, const Mollifier& theta, double t_lo, double t_hi, double pad = 6.0);

}  // namespace kpzlab
