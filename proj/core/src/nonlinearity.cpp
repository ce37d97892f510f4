#include "kpzlab/nonlinearity.hpp"

#include <cmath>
#include <memory>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "kpzlab/error.hpp"
#include "kpzlab/rng.hpp"

namespace kpzlab {

Nonlinearity Nonlinearity::preset(const std::string& name) {
  Nonlinearity f;
  f.tag = name;
  if (name == "w2") {
    f.F = [](double w) { return w * w; };
    f.dF = [](double w) { return 2.0 * w; };
    f.d2F = [](double) { return 2.0; };
    f.growth_M = 2.0;
    f.bound_C = 2.0;
    f.even_poly = {0.0, 1.0};
  } else if (name == "w4") {
    f.F = [](double w) { return w * w * w * w; };
    f.dF = [](double w) { return 4.0 * w * w * w; };
    f.d2F = [](double w) { return 12.0 * w * w; };
    f.growth_M = 4.0;
    f.bound_C = 24.0;
    f.even_poly = {0.0, 0.0, 1.0};
  } else if (name == "cos") {
    f.F = [](double w) { return std::cos(w); };
    f.dF = [](double w) { return -std::sin(w); };
    f.d2F = [](double w) { return -std::cos(w); };
    f.growth_M = 0.0;
    f.bound_C = 2.0;
    f.trig_scale = 1.0;
    f.trig_freq = 1.0;
  } else {
    throw LabError(ErrorKind::InvalidArgument, "unknown nonlinearity preset '" + name + "' (w2, w4, cos)");
  }
  return f;
}

Nonlinearity Nonlinearity::table(const std::vector<double>& values, double dw, std::string tag) {
  if (values.size() < 4) throw LabError(ErrorKind::InvalidArgument, "nonlinearity table needs at least 4 samples");
  if (!(dw > 0.0)) throw LabError(ErrorKind::NotPositive, "nonlinearity table spacing must be positive");
  for (double v : values)
    if (!std::isfinite(v)) throw LabError(ErrorKind::NonFinite, "nonlinearity table has a non-finite entry");
  using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;
  const std::size_t n = values.size();
  // one-sided second-order slope at the last sample; F'(0) = 0 by evenness
  const double slope = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dw);
  auto spline = std::make_shared<Spline>(values.data(), n, 0.0, dw, 0.0, slope);
  const double top = dw * static_cast<double>(values.size() - 1);
  const double f0 = (*spline)(top), f1 = spline->prime(top), f2 = spline->double_prime(top);
  Nonlinearity f;
  f.tag = std::move(tag);
  f.F = [spline, top, f0, f1, f2](double w) {
    const double a = std::abs(w);
    if (a <= top) return (*spline)(a);
    const double d = a - top;
    return f0 + f1 * d + 0.5 * f2 * d * d;
  };
  f.dF = [spline, top, f1, f2](double w) {
    const double a = std::abs(w);
    const double s = w < 0.0 ? -1.0 : 1.0;
    if (a <= top) return s * spline->prime(a);
    return s * (f1 + f2 * (a - top));
  };
  f.d2F = [spline, top, f2](double w) {
    const double a = std::abs(w);
    return a <= top ? spline->double_prime(a) : f2;
  };
  // constants from the samples: quadratic growth past the table
  f.growth_M = 2.0;
  double c = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double w = 2.0 * top * i / 400.0;
    const double g = std::pow(1.0 + w, f.growth_M);
    c = std::max({c, std::abs(f.F(w)) / g, std::abs(f.dF(w)) / g, std::abs(f.d2F(w)) / g});
  }
  f.holder_beta = 1.0;
  double lip = 0.0;
  for (int i = 0; i < 400; ++i) {
    const double w = 2.0 * top * i / 400.0, h = top / 400.0;
    lip = std::max(lip, std::abs(f.d2F(w + h) - f.d2F(w)) / h);
  }
  f.bound_C = 2.0 * std::max(c, lip) + 1e-12;
  return f;
}

void validate_nonlinearity(const Nonlinearity& f, double w_max) {
  if (!f.F || !f.dF || !f.d2F) throw LabError(ErrorKind::InvalidArgument, "nonlinearity: missing F, F' or F''");
  if (!(f.holder_beta > 0.0 && f.holder_beta <= 1.0))
    throw LabError(ErrorKind::InvalidArgument, "nonlinearity: Hoelder exponent must lie in (0, 1]");
  const int n = 2000;
  for (int i = 0; i <= n; ++i) {
    const double w = w_max * i / n;
    const double a = f.F(w), b = f.F(-w);
    if (std::abs(a - b) > 1e-12 * (1.0 + std::abs(a)))
      throw LabError(ErrorKind::InvalidArgument, "nonlinearity " + f.tag + " is not even");
    const double g = std::pow(1.0 + w, f.growth_M);
    for (double v : {a, f.dF(w), f.d2F(w)})
      if (!(std::abs(v) <= f.bound_C * g * (1.0 + 1e-12)))
        throw LabError(ErrorKind::InvalidArgument, "nonlinearity " + f.tag + " violates the growth bound");
  }
  CounterRng rng(hash_name("validate_nonlinearity"));
  for (int i = 0; i < 5000; ++i) {
    const double w = rng.uniform(-w_max, w_max);
    const double h = std::pow(10.0, rng.uniform(-6.0, 0.0)) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    const double lhs = std::abs(f.d2F(w + h) - f.d2F(w));
    const double rhs = f.bound_C * std::pow(std::abs(h), f.holder_beta) *
                       std::pow(1.0 + std::abs(w) + std::abs(h), f.growth_M);
    if (!(lhs <= rhs * (1.0 + 1e-9) + 1e-13))
      throw LabError(ErrorKind::InvalidArgument, "nonlinearity " + f.tag + " violates the Hoelder bound");
  }
}

}  // namespace kpzlab
