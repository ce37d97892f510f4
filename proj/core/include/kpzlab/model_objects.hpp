#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kpzlab/field.hpp"
#include "kpzlab/fields.hpp"
#include "kpzlab/noise.hpp"
#include "kpzlab/nonlinearity.hpp"
#include "kpzlab/smoothing.hpp"

namespace kpzlab {

struct SymbolId {
  std::string tag;
  double homogeneity = 0.0;  // table value, kappa included
  double kappa = 0.0;
  int depth = 0;              // number of nested I' convolutions
  bool intermediate = false;  // used inside a table symbol, not listed itself
  bool recentered = false;    // carries a constant C_tag
};

// The ten table symbols 0', 1', 2', 2'0, 1'1', 2'0', 2'1', 2'2'0, 2'2'0', 2'1'1'.
const std::vector<std::string>& table_tags();
// Table symbols plus the intermediates 1'0 and 2'1'0.  Throws InvalidArgument.
SymbolId symbol_id(const std::string& tag, double kappa = 0.0);

// phi^lambda_z(t, x) = lambda^-3 phi((t - z_t) / lambda^2, (x - z_x) / lambda) with
// phi(t, x) = c b(t) b(x), b(s) = exp(1 - 1 / (1 - s^2)) on (-1, 1) and c = 1 / max(1, sup|b'|)
// so that the C^1 norm of phi is at most 1.
struct TestFunction {
  double lambda = 1.0;
  double zt = 0.0;
  double zx = 0.0;

  static double norm_constant();
  static double profile(double s);
  double base(double t, double x) const;
  // Evaluated with x on the unit-period torus (nearest image).
  double operator()(double t, double x, double period = 1.0) const;
  double integral() const;  // equals the integral of phi
  double time_radius() const { return lambda * lambda; }
  double space_radius() const { return lambda; }
};

// Fourier coefficient int b(x / lambda) e^{-2 pi i k x} dx of the space profile on the unit torus.
double testfn_space_coefficient(double lambda, long k);

// K'_eps * f with K_eps = chi(t) P_eps, by exponential recursion for the P' part and direct
// quadrature of (1 - chi) P' on the modes where it is not negligible.  Rows before
// f.t0 + cut.outer lack history and are dropped.  Throws GridMismatch when nothing remains.
SpaceTimeField apply_kprime(const SpaceTimeField& f, const PolynomialSmoothing& q, double eps, const TimeCutoff& cut = {});

struct SymbolInstance {
  SymbolId id;
  SpaceTimeField field;
  bool remainder_dropped = true;  // I' realized by K'_eps only
};

using SymbolSet = std::map<std::string, SymbolInstance>;

// Pi^eps objects from a realized Psi on a grid (macro frame).  With recenter = false the
// table constants are not subtracted (exact products).  Throws MissingConstant.
SymbolSet build_symbols(const std::vector<std::string>& tags, const Nonlinearity& f, const PolynomialSmoothing& q,
                        const SpaceTimeField& psi, const RenormTable& renorm, bool recenter = true);
SymbolInstance build_symbol(const std::string& tag, const Nonlinearity& f, const PolynomialSmoothing& q,
                            const SpaceTimeField& psi, const RenormTable& renorm);

// Midpoint-rule pairing sum field(n, j) phi^lambda_z(t_n, x_j) dt dx.  Throws SupportEscape
// when the support leaves the field's time range or wraps the torus.
double pair_testfn(const SpaceTimeField& field, const TestFunction& tf);

// Psi grid for objects paired at z = (0, 0) up to lambda_max: two units of history for the
// nested convolutions, dt = eps^2 / 8, dx = eps / 4.
GridSpec object_grid(double eps, double lambda_max);

// Estimate C_tag for 2'1', 2'2'0, 2'2'0' and 2'1'1' from independent replicas (spatial means
// at the last grid row) and store them in `table`.
void fill_object_constants(RenormTable& table, const Nonlinearity& f, const PolynomialSmoothing& q,
                           const Mollifier& theta, std::size_t replicas, std::uint64_t seed);

enum class LinearObject { Noise, Psi };

// <xi_eps, phi^lambda> or <Psi_eps, phi^lambda> at z = 0 for each lambda and replica, from
// per-point kernels (samples[lambda][replica]).
std::vector<std::vector<double>> linear_pairings(LinearObject kind, const PolynomialSmoothing& q,
                                                 const Mollifier& theta, double eps,
                                                 const std::vector<double>& lambdas, std::size_t replicas,
                                                 std::uint64_t seed);

// The same pairing for one given cloud (macro frame, unit torus).
double linear_pairing(LinearObject kind, const PolynomialSmoothing& q, const Mollifier& theta, double eps,
                      double lambda, const PointCloud& cloud);

// Var <object, phi^lambda> from the Poisson isometry: intensity * int kappa_lambda(p)^2 dp.
double linear_pairing_variance(LinearObject kind, const PolynomialSmoothing& q, const Mollifier& theta, double eps,
                               double lambda);

struct ScalingRow {
  double lambda = 0.0;
  double moment = 0.0;  // E |<.,phi^lambda>|^p
  double stderr_ = 0.0;
  double mean = 0.0;  // E <.,phi^lambda>
  double mean_stderr = 0.0;
};

struct ScalingReport {
  std::string tag;
  int p = 2;
  std::vector<ScalingRow> rows;
  double slope = 0.0;  // fitted slope of log moment over log lambda, divided by p
  double slope_stderr = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double target = 0.0;  // homogeneity
  double tolerance = 0.15;
  bool pass = false;  // slope >= target - tolerance
};

// Fit from samples[lambda][replica]; the slope error is a bootstrap over replicas.
// Throws InsufficientLadder for fewer than 4 lambdas or a non-geometric ladder.
ScalingReport scaling_from_samples(const std::string& tag, double homogeneity, const std::vector<double>& lambdas,
                                   const std::vector<std::vector<double>>& samples, int p, std::uint64_t seed,
                                   double tolerance = 0.15);

struct ScalingRequest {
  std::string tag;  // a table tag, or "xi" for the raw noise
  std::vector<double> lambdas;
  int p = 2;
  std::size_t replicas = 100;
  double eps = 0.1;
  std::uint64_t seed = 0;
  double tolerance = 0.15;
};

// Scaling exponent of tag.  "xi" and "1'" with F = w^2 use the per-point kernels; other tags
// build the objects on object_grid.  Throws InsufficientLadder, MissingConstant.
ScalingReport scaling_exponent(const ScalingRequest& req, const Nonlinearity& f, const PolynomialSmoothing& q,
                               const Mollifier& theta, const RenormTable* renorm = nullptr);

// <Pi tau, phi^lambda_0> for several tags built from one Psi per replica
// (result[tag][lambda][replica]).  Throws MissingConstant, SupportEscape.
std::map<std::string, std::vector<std::vector<double>>> symbol_pairings(
    const std::vector<std::string>& tags, const Nonlinearity& f, const PolynomialSmoothing& q, const Mollifier& theta,
    double eps, const std::vector<double>& lambdas, std::size_t replicas, std::uint64_t seed, const RenormTable& renorm);

// Geometric ladder of n values from lo to hi.
std::vector<double> geometric_ladder(double lo, double hi, std::size_t n);

}  // namespace kpzlab
