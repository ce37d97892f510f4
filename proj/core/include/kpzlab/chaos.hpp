#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kpzlab/noise.hpp"

namespace kpzlab {

struct Functional {
  std::function<double(std::span<const Point>)> evaluator;
  std::string descriptor;
  double operator()(std::span<const Point> pts) const { return evaluator(pts); }
};

// Uniform cells on a box [t_lo, t_hi) x [0, period) with Lebesgue intensity.
struct CellDomain {
  Box box;
  int nt = 4;
  int nx = 4;
  double intensity = 1.0;

  std::size_t cells() const { return static_cast<std::size_t>(nt) * static_cast<std::size_t>(nx); }
  double cell_measure() const { return intensity * box.area() / static_cast<double>(cells()); }
  double total_measure() const { return intensity * box.area(); }
  Point center(std::size_t c) const;
  std::size_t cell_of(const Point& p) const;
};

// Symmetric kernel of order n stored as a full cells^n table.
struct ChaosKernel {
  int order = 0;
  CellDomain domain;
  std::vector<double> values;

  static ChaosKernel zeros(const CellDomain& domain, int order);
  static ChaosKernel from_function(const CellDomain& domain, int order,
                                   const std::function<double(std::span<const std::size_t>)>& f);
  double cell_measure() const { return domain.cell_measure(); }
  std::size_t index(std::span<const std::size_t> cells) const;
  double at(std::span<const std::size_t> cells) const { return values[index(cells)]; }
  double& at(std::span<const std::size_t> cells) { return values[index(cells)]; }
  // Largest |f(c) - f(perm c)| over all index tuples and adjacent transpositions.
  double asymmetry() const;
  double l1_norm() const;
  double l2_norm_sq() const;
};

// D_{u_1..u_n} F(eta) by inclusion-exclusion over adding the points.
double difference_op(const Functional& F, std::span<const Point> cloud, std::span<const Point> us);

// I_n(g)(eta) with off-diagonal eta^k sums over distinct points and cell quadrature for
// the mu factors.  Throws BudgetExceeded for n >= 2 and more than 200 points.
double wiener_ito(const ChaosKernel& g, std::span<const Point> cloud);

struct PartitionSet {
  std::vector<int> group_sizes;
  // Each partition is a list of blocks; each block lists global argument indices.
  std::vector<std::vector<std::vector<int>>> partitions;
};

// Partitions with blocks of size >= 2 meeting each group at most once.
PartitionSet enumerate_partitions(const std::vector<int>& group_sizes);

// E prod_i I_{n_i}(f_i) = sum over partitions of the identified integrals.  Throws
// BudgetExceeded when sum n_i > 8.
double product_moment(const std::vector<ChaosKernel>& kernels);

struct ChaosExpansion {
  double f0 = 0.0;
  double f0_stderr = 0.0;
  std::vector<ChaosKernel> kernels;   // orders 1..d
  std::vector<ChaosKernel> stderrs;   // matching MC standard errors
  Functional truncation;              // F minus the orders below d
};

// f_n(cells) = E D_{centers} F / n! by Monte Carlo over `replicas` clouds on the domain.
ChaosExpansion chaos_expand(const Functional& F, int max_order, const CellDomain& domain, std::size_t replicas,
                            std::uint64_t seed);

// exp(int (e^{i v g} - i v g - 1) dmu) for a first-order kernel.
std::complex<double> char_function(const ChaosKernel& g, double v);

struct GapRow {
  std::string functional_id;
  double p = 2.0;
  double lhs = 0.0;    // E F^2
  double rhs = 0.0;    // (E F)^2 + E int (D_u F)^2 dmu
  double slack = 0.0;  // rhs - lhs
  double fitted_c = 0.0;  // ||F||_p / (|E F| + mixed norm of D F)
  double stderr_ = 0.0;   // of the slack
};

struct GapReport {
  std::vector<GapRow> rows;
  double family_c = 0.0;
};

GapReport spectral_gap_report(const std::vector<Functional>& family, double p, const CellDomain& domain,
                              std::size_t replicas, std::uint64_t seed);

// Exact L^2 gap for F = f(N), N the count in a window of measure m, from Poisson pmf sums.
GapRow exact_window_gap(const std::function<double(double)>& f, double m, const std::string& id);

// Sample a cloud on the domain's box.
PointCloud sample_domain(const CellDomain& domain, std::uint64_t seed);

}  // namespace kpzlab
