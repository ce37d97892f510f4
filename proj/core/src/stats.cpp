#include "kpzlab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "kpzlab/error.hpp"

namespace kpzlab {

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

MeanEstimate mean_estimate(std::span<const double> x) {
  MeanEstimate e;
  e.n = x.size();
  e.mean = mean(x);
  e.stderr_ = x.size() > 1 ? std::sqrt(variance(x) / static_cast<double>(x.size())) : 0.0;
  return e;
}

double bootstrap_mean_stderr(std::span<const double> x, std::size_t resamples, std::uint64_t seed) {
  return bootstrap_stderr(x, [](std::span<const double> s) { return mean(s); }, resamples, seed);
}

LinearFit weighted_fit(std::span<const double> x, std::span<const double> y, std::span<const double> sigma) {
  if (x.size() != y.size() || x.size() != sigma.size() || x.size() < 2)
    throw LabError(ErrorKind::InvalidArgument, "weighted fit needs matching inputs with >= 2 points");
  double S = 0, Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = sigma[i] > 0.0 ? 1.0 / (sigma[i] * sigma[i]) : 1.0;
    S += w;
    Sx += w * x[i];
    Sy += w * y[i];
    Sxx += w * x[i] * x[i];
    Sxy += w * x[i] * y[i];
  }
  const double det = S * Sxx - Sx * Sx;
  LinearFit f;
  f.slope = (S * Sxy - Sx * Sy) / det;
  f.intercept = (Sxx * Sy - Sx * Sxy) / det;
  f.slope_stderr = std::sqrt(S / det);
  return f;
}

double median(std::span<const double> x) {
  if (x.empty()) return 0.0;
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace kpzlab
