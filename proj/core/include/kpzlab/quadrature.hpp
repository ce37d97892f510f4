#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <cstddef>

namespace kpzlab {

// Composite 10-point Gauss-Legendre rule on [a, b] with `panels` equal panels.
template <class F>
double composite_gauss(F&& f, double a, double b, std::size_t panels) {
  if (!(b > a) || panels == 0) return 0.0;
  const double h = (b - a) / static_cast<double>(panels);
  double sum = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + h * static_cast<double>(p);
    sum += boost::math::quadrature::gauss<double, 10>::integrate(f, lo, lo + h);
  }
  return sum;
}

}  // namespace kpzlab
