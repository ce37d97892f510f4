#include "kpzlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kpzlab/error.hpp"
#include "kpzlab/special.hpp"

namespace kpzlab {

namespace {

std::size_t even_at_least(double x) {
  auto n = static_cast<std::size_t>(std::ceil(x - 1e-9));
  if (n % 2 != 0) ++n;
  return std::max<std::size_t>(n, 2);
}

bool finite(const std::vector<cplx>& v) {
  for (const auto& c : v)
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
  return true;
}

}  // namespace

SolverConfig SolverConfig::macro(double eps, double T, const PolynomialSmoothing& q, const Nonlinearity& f) {
  SolverConfig c;
  c.q = q;
  c.f = f;
  c.frame = Frame::macro(eps);
  c.nx = even_at_least(4.0 / eps);
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(T / (eps * eps / 8.0) - 1e-9)));
  c.dt = T / static_cast<double>(steps);
  c.nt = steps + 1;
  return c;
}

void validate_config(const SolverConfig& c) {
  if (c.nx < 4 || c.nx % 2 != 0) throw LabError(ErrorKind::InvalidArgument, "solver: nx must be even and >= 4");
  if (c.nt < 1) throw LabError(ErrorKind::InvalidArgument, "solver: nt must be >= 1");
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw LabError(ErrorKind::InvalidArgument, "solver: dt must be > 0");
  if (!(c.dealias_fraction > 0.0 && c.dealias_fraction <= 1.0))
    throw LabError(ErrorKind::InvalidArgument, "solver: dealias_fraction must lie in (0, 1]");
  if (!c.initial.empty() && c.initial.size() != c.nx)
    throw LabError(ErrorKind::InvalidArgument, "solver: initial profile has the wrong size");
  if (c.record_stride == 0 || (c.nt - 1) % c.record_stride != 0)
    throw LabError(ErrorKind::InvalidArgument, "solver: record_stride must divide nt - 1");
  if (c.enforce_resolution) {
    const double dx = c.frame.length / static_cast<double>(c.nx);
    if (dx > c.frame.space_scale / 4.0 * (1.0 + 1e-9) || c.dt > c.frame.time_scale / 8.0 * (1.0 + 1e-9)) {
      std::ostringstream os;
      os << "solver: grid dx = " << dx << ", dt = " << c.dt << " does not resolve the mollifier scale (need dx <= "
         << c.frame.space_scale / 4.0 << ", dt <= " << c.frame.time_scale / 8.0 << ")";
      throw LabError(ErrorKind::InvalidArgument, os.str());
    }
  }
}

EtdStepper::EtdStepper(const SolverConfig& config)
    : config_(config), nk_(config.nx / 2 + 1), fft_(std::make_unique<RealFft>(config.nx)) {
  kcut_ = static_cast<std::size_t>(std::floor(config.dealias_fraction * static_cast<double>(config.nx / 2) + 1e-9));
  m_.resize(nk_);
  decay_.resize(nk_);
  phi_dt_.resize(nk_);
  for (std::size_t k = 0; k < nk_; ++k) {
    m_[k] = frame_multiplier(config.q, config.frame, static_cast<double>(k));
    decay_[k] = std::exp(-m_[k] * config.dt);
    phi_dt_[k] = phi1(m_[k] * config.dt) * config.dt;
  }
  spec_.resize(nk_);
  nodal_.resize(config.nx);
}

EtdStepper::~EtdStepper() = default;

void EtdStepper::to_nodal(const std::vector<cplx>& hhat, double* out) {
  std::copy(hhat.begin(), hhat.end(), spec_.begin());
  fft_->inverse(spec_.data(), out);
}

void EtdStepper::to_modal(const double* in, std::vector<cplx>& hhat) {
  hhat.resize(nk_);
  std::copy(in, in + config_.nx, nodal_.begin());
  fft_->forward(nodal_.data(), hhat.data());
}

double EtdStepper::step(std::vector<cplx>& hhat, const cplx* forcing, std::size_t forcing_modes) {
  double dropped_fraction = 0.0;
  const std::size_t nyq = config_.nx / 2;
  if (config_.nonlinear) {
    const double w = 2.0 * std::numbers::pi / config_.frame.length;
    for (std::size_t k = 0; k < nk_; ++k)
      spec_[k] = (k <= kcut_ && k < nyq) ? cplx(0.0, w * static_cast<double>(k)) * hhat[k] : cplx(0.0);
    fft_->inverse(spec_.data(), nodal_.data());
    const double outer = config_.frame.outer, inner = config_.frame.inner;
    for (auto& g : nodal_) g = outer * config_.f.F(inner * g);
    fft_->forward(nodal_.data(), spec_.data());
    double total = 0.0, dropped = 0.0;
    for (std::size_t k = 1; k < nk_; ++k) {
      const double e = std::norm(spec_[k]);
      total += e;
      if (k > kcut_) {
        dropped += e;
        spec_[k] = 0.0;
      }
    }
    dropped_fraction = total > 0.0 ? dropped / total : 0.0;
  } else {
    std::fill(spec_.begin(), spec_.end(), cplx(0.0));
  }
  spec_[0] -= config_.drift;
  const std::size_t nf = std::min(forcing_modes, nyq);
  for (std::size_t k = 0; k < nk_; ++k) {
    hhat[k] = decay_[k] * hhat[k] + phi_dt_[k] * spec_[k];
    if (k < nf) hhat[k] += forcing[k];
  }
  if (!finite(hhat)) throw LabError(ErrorKind::NonFinite, "solver: non-finite Fourier coefficient");
  return dropped_fraction;
}

std::vector<double> etd_step(const std::vector<double>& profile, const std::vector<cplx>& forcing,
                             const SolverConfig& config) {
  if (profile.size() != config.nx) throw LabError(ErrorKind::InvalidArgument, "etd_step: profile size != nx");
  EtdStepper stepper(config);
  std::vector<cplx> hhat;
  stepper.to_modal(profile.data(), hhat);
  stepper.step(hhat, forcing.data(), forcing.size());
  std::vector<double> out(config.nx);
  stepper.to_nodal(hhat, out.data());
  return out;
}

PointCloud solver_cloud(const SolverConfig& config) {
  const double edge = config.theta.effective_radius() * config.frame.time_scale;
  return sample_cloud(Box{-edge, config.t_end() + edge, config.frame.length}, config.frame.intensity(), config.seed);
}

std::vector<cplx> exact_forcing(const SolverConfig& config, const ModeTable& table, const PointCloud& cloud) {
  const double edge = table.theta.effective_radius() * table.sigma();
  const double lo = -edge, hi = config.t_end() + edge;
  const double slack = 1e-9 * std::max(1.0, std::fabs(lo) + std::fabs(hi));
  if (cloud.box.t_lo > lo + slack || cloud.box.t_hi < hi - slack ||
      std::fabs(cloud.box.period - config.frame.length) > 1e-9 * config.frame.length)
    throw LabError(ErrorKind::CoverageGap, "solver: cloud does not cover the forcing window");
  return noise_forcing(cloud, table, 0.0, config.dt, config.nt - 1, true);
}

std::vector<cplx> nodal_forcing(const SolverConfig& config, const SpaceTimeField& noise) {
  if (noise.nt != config.nt || noise.nx != config.nx || std::fabs(noise.dt - config.dt) > 1e-12 * config.dt ||
      std::fabs(noise.t0) > 1e-12)
    throw LabError(ErrorKind::GridMismatch, "solver: noise grid does not match the trajectory grid");
  EtdStepper stepper(config);
  const std::size_t nk = config.nx / 2 + 1;
  std::vector<cplx> rows((config.nt - 1) * nk);
  std::vector<cplx> xi;
  for (std::size_t n = 0; n + 1 < config.nt; ++n) {
    stepper.to_modal(noise.row(n), xi);
    for (std::size_t k = 0; k < nk; ++k)
      rows[n * nk + k] = phi1(stepper.multiplier(k) * config.dt) * config.dt * xi[k];
  }
  return rows;
}

SolveResult simulate_with_forcing(const SolverConfig& config, const std::vector<cplx>& forcing,
                                  std::size_t forcing_modes) {
  validate_config(config);
  const std::size_t steps = config.nt - 1;
  if (forcing.size() < steps * forcing_modes)
    throw LabError(ErrorKind::InvalidArgument, "solver: forcing has fewer rows than steps");
  EtdStepper stepper(config);
  SolveResult out;
  out.forcing_modes = std::min(forcing_modes, config.nx / 2);
  const std::size_t stride = config.record_stride;
  out.h = SpaceTimeField(steps / stride + 1, config.nx, 0.0, config.dt * static_cast<double>(stride), config.frame);
  std::vector<cplx> hhat(stepper.modes(), cplx(0.0));
  if (!config.initial.empty()) stepper.to_modal(config.initial.data(), hhat);
  auto record = [&](std::size_t row) {
    double* dst = out.h.row(row);
    stepper.to_nodal(hhat, dst);
    for (std::size_t j = 0; j < config.nx; ++j) out.max_abs = std::max(out.max_abs, std::fabs(dst[j]));
  };
  record(0);
  for (std::size_t n = 0; n < steps; ++n) {
    const double frac = stepper.step(hhat, forcing.data() + n * forcing_modes, forcing_modes);
    out.dealias_energy = std::max(out.dealias_energy, frac);
    if ((n + 1) % stride == 0) record((n + 1) / stride);
  }
  if (!std::isfinite(out.max_abs)) throw LabError(ErrorKind::NonFinite, "solver: non-finite height");
  out.under_resolved = out.dealias_energy > 0.01;
  return out;
}

SolveResult simulate(const SolverConfig& config, const PointCloud& cloud) {
  validate_config(config);
  const ModeTable table = ModeTable::build(config.q, config.theta, config.frame);
  const auto forcing = exact_forcing(config, table, cloud);
  return simulate_with_forcing(config, forcing, static_cast<std::size_t>(table.K) + 1);
}

SolveResult simulate_macro(const SolverConfig& config, const PointCloud& cloud) {
  if (config.frame.kind != FrameKind::Macro) throw LabError(ErrorKind::InvalidArgument, "simulate_macro: macro frame");
  return simulate(config, cloud);
}

SolveResult simulate_macro(const SolverConfig& config, const SpaceTimeField& noise) {
  if (config.frame.kind != FrameKind::Macro) throw LabError(ErrorKind::InvalidArgument, "simulate_macro: macro frame");
  validate_config(config);
  return simulate_with_forcing(config, nodal_forcing(config, noise), config.nx / 2 + 1);
}

SolverConfig micro_config(const SolverConfig& macro) {
  if (macro.frame.kind != FrameKind::Macro) throw LabError(ErrorKind::InvalidArgument, "micro_config: macro frame");
  const double eps = macro.frame.epsilon;
  SolverConfig c = macro;
  c.frame = Frame::micro(eps);
  c.dt = macro.dt / (eps * eps);
  c.drift = 0.0;
  for (auto& v : c.initial) v /= std::sqrt(eps);
  return c;
}

SpaceTimeField rescale_micro(const SpaceTimeField& micro, double eps, double drift, const std::optional<GridSpec>& target) {
  if (!(eps > 0.0 && eps <= 1.0)) throw LabError(ErrorKind::InvalidArgument, "rescale_micro: 0 < eps <= 1");
  if (std::fabs(micro.frame.length * eps - 1.0) > 1e-9)
    throw LabError(ErrorKind::IncommensurateGrids, "rescale_micro: micro period is not 1/eps");
  const double s = std::sqrt(eps);
  const double dt = micro.dt * eps * eps;
  const double t0 = micro.t0 * eps * eps;
  std::size_t nt = micro.nt, nx = micro.nx, i0 = 0, rt = 1, rx = 1;
  double out_dt = dt;
  if (target) {
    if (target->nx == 0 || micro.nx % target->nx != 0)
      throw LabError(ErrorKind::IncommensurateGrids, "rescale_micro: target nx does not divide the micro nx");
    rx = micro.nx / target->nx;
    const double ratio = target->dt / dt;
    const double offset = (target->t0 - t0) / dt;
    if (!(ratio >= 1.0 - 1e-9) || std::fabs(ratio - std::round(ratio)) > 1e-6 || offset < -1e-6 ||
        std::fabs(offset - std::round(offset)) > 1e-6)
      throw LabError(ErrorKind::IncommensurateGrids, "rescale_micro: target time nodes are not micro nodes");
    rt = static_cast<std::size_t>(std::llround(ratio));
    i0 = static_cast<std::size_t>(std::llround(offset));
    if (target->nt == 0 || i0 + (target->nt - 1) * rt >= micro.nt)
      throw LabError(ErrorKind::IncommensurateGrids, "rescale_micro: target extends past the micro trajectory");
    nt = target->nt;
    nx = target->nx;
    out_dt = target->dt;
  }
  SpaceTimeField out(nt, nx, t0 + dt * static_cast<double>(i0), out_dt, Frame::macro(eps));
  for (std::size_t n = 0; n < nt; ++n) {
    const std::size_t src = i0 + n * rt;
    const double t = t0 + dt * static_cast<double>(src);
    for (std::size_t j = 0; j < nx; ++j) out.at(n, j) = s * micro.at(src, j * rx) - drift * t;
  }
  return out;
}

double one_step_estimate(const SolverConfig& config, const std::vector<double>& profile) {
  SolverConfig full = config;
  full.nt = 2;
  full.record_stride = 1;
  full.initial = profile;
  SolverConfig half = full;
  half.dt = config.dt / 2.0;
  half.nt = 3;
  const std::vector<cplx> none;
  const auto a = simulate_with_forcing(full, none, 0);
  const auto b = simulate_with_forcing(half, none, 0);
  double diff = 0.0;
  for (std::size_t j = 0; j < config.nx; ++j) diff = std::max(diff, std::fabs(a.h.at(1, j) - b.h.at(2, j)));
  return diff;
}

}  // namespace kpzlab
