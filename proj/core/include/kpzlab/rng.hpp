#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace kpzlab {

std::uint64_t mix64(std::uint64_t z);

// Stable 64-bit hash of a stage name, used in seed derivation.
std::uint64_t hash_name(std::string_view name);

// Seed for one replica of one stage: mix(mix(master ^ mix(stage)) + replica).
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage, std::uint64_t replica);

// Counter-based generator: output i is mix64(key + (i + 1) * golden).  Streams with
// different keys are independent for practical purposes; there is no hidden global state.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(mix64(key)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    ++counter_;
    return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal();

  std::uint64_t poisson(double mean);

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace kpzlab
