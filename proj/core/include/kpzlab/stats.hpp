#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace kpzlab {

struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

double mean(std::span<const double> x);
// Unbiased sample variance.
double variance(std::span<const double> x);
MeanEstimate mean_estimate(std::span<const double> x);

// Bootstrap standard error of a statistic, with a seeded resampler.
template <class Stat>
double bootstrap_stderr(std::span<const double> x, Stat&& stat, std::size_t resamples, std::uint64_t seed);

// Bootstrap standard error of the sample mean.
double bootstrap_mean_stderr(std::span<const double> x, std::size_t resamples, std::uint64_t seed);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

// Weighted least squares y = a + b x with weights 1/sigma^2; slope stderr from the
// covariance of the weighted fit.
LinearFit weighted_fit(std::span<const double> x, std::span<const double> y, std::span<const double> sigma);

// Sample median (copy sorted).
double median(std::span<const double> x);

}  // namespace kpzlab

#include "kpzlab/rng.hpp"

namespace kpzlab {

template <class Stat>
double bootstrap_stderr(std::span<const double> x, Stat&& stat, std::size_t resamples, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<double> buf(x.size());
  std::vector<double> vals;
  vals.reserve(resamples);
  for (std::size_t b = 0; b < resamples; ++b) {
    for (auto& v : buf) v = x[static_cast<std::size_t>(rng.uniform() * static_cast<double>(x.size()))];
    vals.push_back(stat(std::span<const double>(buf)));
  }
  return std::sqrt(variance(vals));
}

}  // namespace kpzlab
