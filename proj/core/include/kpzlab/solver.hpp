#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "kpzlab/fft.hpp"
#include "kpzlab/field.hpp"
#include "kpzlab/noise.hpp"
#include "kpzlab/nonlinearity.hpp"
#include "kpzlab/smoothing.hpp"
#include "kpzlab/spectral_noise.hpp"

namespace kpzlab {

// d_t h = -m(d_x) h + outer * F(inner * d_x h) + xi - drift in the frame of `frame`
// (macro: outer = 1/eps, inner = sqrt(eps); micro: outer = sqrt(eps), inner = 1).
struct SolverConfig {
  PolynomialSmoothing q = PolynomialSmoothing::validate({1.0, 1.0});
  Mollifier theta = Mollifier::gaussian();
  Nonlinearity f = Nonlinearity::preset("w2");
  bool nonlinear = true;  // false runs the linear equation (F == 0)
  Frame frame = Frame::macro(0.5);
  double dt = 0.0;
  std::size_t nt = 0;  // trajectory nodes t = n dt, n = 0..nt-1
  std::size_t nx = 0;
  double dealias_fraction = 2.0 / 3.0;
  double drift = 0.0;
  std::vector<double> initial;  // nodal h(0, .); empty means zero
  std::uint64_t seed = 0;
  std::size_t record_stride = 1;  // keep every stride-th node
  bool enforce_resolution = true;

  // Macro-frame config with dx <= eps/4 and dt <= eps^2/8 over [0, T].
  static SolverConfig macro(double eps, double T, const PolynomialSmoothing& q, const Nonlinearity& f);
  double t_end() const { return dt * static_cast<double>(nt == 0 ? 0 : nt - 1); }
};

// Throws InvalidArgument for malformed configs and, with enforce_resolution, for
// dx > space_scale / 4 or dt > time_scale / 8.
void validate_config(const SolverConfig& config);

// Exponential Euler in Fourier space on modes 0..nx/2.  The forcing row holds the per-step
// noise increment for modes 0..K (exact integral or phi_1(m dt) dt xi_hat).
class EtdStepper {
 public:
  explicit EtdStepper(const SolverConfig& config);
  ~EtdStepper();
  EtdStepper(const EtdStepper&) = delete;
  EtdStepper& operator=(const EtdStepper&) = delete;

  std::size_t modes() const { return nk_; }
  double multiplier(std::size_t k) const { return m_[k]; }
  // Advance hhat by one step; returns the fraction of nonlinear energy (k >= 1) in the
  // discarded modes before truncation.  Throws NonFinite.
  double step(std::vector<cplx>& hhat, const cplx* forcing, std::size_t forcing_modes);
  void to_nodal(const std::vector<cplx>& hhat, double* out);
  void to_modal(const double* in, std::vector<cplx>& hhat);

 private:
  SolverConfig config_;
  std::size_t nk_;
  std::size_t kcut_;
  std::vector<double> m_, decay_, phi_dt_;
  std::unique_ptr<RealFft> fft_;
  std::vector<cplx> spec_;
  std::vector<double> nodal_;
};

// One step on a nodal profile.
std::vector<double> etd_step(const std::vector<double>& profile, const std::vector<cplx>& forcing,
                             const SolverConfig& config);

struct SolveResult {
  SpaceTimeField h;
  double max_abs = 0.0;
  double dealias_energy = 0.0;  // largest per-step discarded fraction
  bool under_resolved = false;  // dealias_energy above 1%
  std::size_t forcing_modes = 0;
};

// Cloud covering the forcing window of the config, sampled from config.seed.
PointCloud solver_cloud(const SolverConfig& config);

// Exact per-step forcing rows from a cloud; throws CoverageGap.
std::vector<cplx> exact_forcing(const SolverConfig& config, const ModeTable& table, const PointCloud& cloud);

// phi_1(m dt) dt xi_hat(t_n) from nodal noise on the trajectory grid; throws GridMismatch.
std::vector<cplx> nodal_forcing(const SolverConfig& config, const SpaceTimeField& noise);

// Integrate with exact pathwise forcing from the cloud.  Throws NonFinite, CoverageGap.
SolveResult simulate(const SolverConfig& config, const PointCloud& cloud);
// Integrate with forcing rows (nt - 1 rows of `forcing_modes` modes).
SolveResult simulate_with_forcing(const SolverConfig& config, const std::vector<cplx>& forcing,
                                  std::size_t forcing_modes);
// simulate() restricted to the macro frame.
SolveResult simulate_macro(const SolverConfig& config, const PointCloud& cloud);
// simulate_macro with nodal noise sampled on the trajectory grid.
SolveResult simulate_macro(const SolverConfig& config, const SpaceTimeField& noise);

// Micro config equivalent to a macro config: same node counts, dt / eps^2, period 1 / eps,
// initial profile divided by sqrt(eps), zero drift.
SolverConfig micro_config(const SolverConfig& macro);

// h_eps(t, x) = sqrt(eps) h~(t / eps^2, x / eps) - drift t.  With a target grid the nodes
// are picked by exact index mapping; throws IncommensurateGrids when they do not align.
SpaceTimeField rescale_micro(const SpaceTimeField& micro, double eps, double drift,
                             const std::optional<GridSpec>& target = std::nullopt);

// Sup-norm change between one step of size dt and two steps of size dt/2 from the same
// state, for the deterministic part of the config: the one-step discretization estimate.
double one_step_estimate(const SolverConfig& config, const std::vector<double>& profile);

}  // namespace kpzlab
