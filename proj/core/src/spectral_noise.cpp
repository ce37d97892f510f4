#include "kpzlab/spectral_noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kpzlab/error.hpp"
#include "kpzlab/quadrature.hpp"
#include "kpzlab/special.hpp"

namespace kpzlab {

ModeTable ModeTable::build(const PolynomialSmoothing& q, const Mollifier& theta, const Frame& frame, long max_modes,
                           double rel_tol) {
  if (!theta.separable())
    throw LabError(ErrorKind::InvalidArgument, "spectral noise needs a separable mollifier");
  ModeTable t{frame, theta, q, 0, {}, {}};
  const double L = frame.length, xs = frame.space_scale;
  auto amp = [&](long k) {
    return frame.amplitude * theta.norm * (xs / L) * theta.space_transform(static_cast<double>(k) * xs / L);
  };
  const double a0 = amp(0);
  t.m.push_back(0.0);
  t.A.push_back(a0);
  // Bump transforms oscillate, so stop only after a run of small amplitudes.
  long quiet = 0;
  for (long k = 1; k <= max_modes; ++k) {
    const double a = amp(k);
    if (std::fabs(a) <= rel_tol * std::fabs(a0)) {
      if (theta.kind == MollifierKind::Gaussian || ++quiet > 64) break;
    } else {
      quiet = 0;
    }
    t.m.push_back(frame_multiplier(q, frame, static_cast<double>(k)));
    t.A.push_back(a);
  }
  while (t.A.size() > 1 && std::fabs(t.A.back()) <= rel_tol * std::fabs(a0)) {
    t.A.pop_back();
    t.m.pop_back();
  }
  t.K = static_cast<long>(t.A.size()) - 1;
  return t;
}

double ModeTable::wavenumber(long k) const { return 2.0 * std::numbers::pi * static_cast<double>(k) / frame.length; }

std::vector<cplx> noise_forcing(const PointCloud& cloud, const ModeTable& table, double t0, double dt,
                                std::size_t nsteps, bool compensate) {
  const std::size_t nk = static_cast<std::size_t>(table.K) + 1;
  std::vector<cplx> out(nsteps * nk, cplx(0.0));
  const double sigma = table.sigma();
  const double R = table.theta.effective_radius();
  const double L = table.frame.length;
  std::vector<double> decay(nk);
  for (std::size_t k = 0; k < nk; ++k) decay[k] = std::exp(-table.m[k] * dt);
  std::vector<double> gprev(nk), gnext(nk);
  std::vector<cplx> phase(nk);
  const double t_end = t0 + dt * static_cast<double>(nsteps);
  for (const auto& p : cloud.points) {
    if (p.t + R * sigma < t0 || p.t - R * sigma > t_end) continue;
    const long n0 = std::max(0L, static_cast<long>(std::floor((p.t - R * sigma - t0) / dt)));
    const long n1 = std::min(static_cast<long>(nsteps) - 1, static_cast<long>(std::ceil((p.t + R * sigma - t0) / dt)));
    const cplx rot = std::polar(1.0, -2.0 * std::numbers::pi * p.x / L);
    cplx ph(1.0, 0.0);
    for (std::size_t k = 0; k < nk; ++k) {
      phase[k] = table.A[k] * ph;
      ph *= rot;
    }
    for (std::size_t k = 0; k < nk; ++k)
      gprev[k] = table.theta.causal_time_response(t0 + dt * static_cast<double>(n0) - p.t, table.m[k], sigma);
    for (long n = n0; n <= n1; ++n) {
      const double tn1 = t0 + dt * static_cast<double>(n + 1) - p.t;
      cplx* row = out.data() + static_cast<std::size_t>(n) * nk;
      for (std::size_t k = 0; k < nk; ++k) {
        gnext[k] = table.theta.causal_time_response(tn1, table.m[k], sigma);
        row[k] += phase[k] * (gnext[k] - decay[k] * gprev[k]);
      }
      std::swap(gprev, gnext);
    }
  }
  if (compensate)
    for (std::size_t n = 0; n < nsteps; ++n) out[n * nk] -= table.frame.compensator() * dt;
  return out;
}

double psi_point_kernel(const ModeTable& table, double t, double x, const Point& p) {
  const double sigma = table.sigma();
  const double tau = t - p.t;
  if (tau < -table.theta.effective_radius() * sigma) return 0.0;
  const double L = table.frame.length;
  const double ang = 2.0 * std::numbers::pi * (x - p.x) / L;
  const double s1 = std::sin(ang), c1 = std::cos(ang);
  double sk = 0.0, ck = 1.0;
  double sum = 0.0;
  for (long k = 1; k <= table.K; ++k) {
    const double sn = sk * c1 + ck * s1;
    const double cn = ck * c1 - sk * s1;
    sk = sn;
    ck = cn;
    const std::size_t i = static_cast<std::size_t>(k);
    const double g = table.theta.causal_time_response(tau, table.m[i], sigma);
    sum += table.wavenumber(k) * table.A[i] * sk * g;
  }
  return -2.0 * sum;
}

double noise_point_kernel(const ModeTable& table, double t, double x, const Point& p) {
  const double g = table.theta.time_profile((t - p.t) / table.sigma());
  if (g == 0.0) return 0.0;
  const double L = table.frame.length;
  double sum = table.A[0];
  for (long k = 1; k <= table.K; ++k)
    sum += 2.0 * table.A[static_cast<std::size_t>(k)] * std::cos(2.0 * std::numbers::pi * k * (x - p.x) / L);
  return g * sum;
}

double free_field_tail(const ModeTable& table, double tol) {
  if (table.K < 1) return 0.0;
  return -std::log(tol) / table.m[1] + table.theta.effective_radius() * table.sigma();
}

double psi_at(const PointCloud& cloud, const ModeTable& table, double t, double x, double tol) {
  const double sigma = table.sigma();
  const double R = table.theta.effective_radius();
  const double edge = R * sigma;
  const double L = table.frame.length;
  const std::size_t nk = static_cast<std::size_t>(table.K) + 1;
  bool monotone = true;
  for (std::size_t k = 2; k < nk; ++k) monotone = monotone && table.m[k] >= table.m[k - 1];
  // w_k A_k G_k(edge), the amplitude a mode carries once the translate has passed
  std::vector<double> carried(nk, 0.0);
  for (std::size_t k = 1; k < nk; ++k)
    carried[k] = table.wavenumber(static_cast<long>(k)) * table.A[k] *
                 table.theta.causal_time_response(edge, table.m[k], sigma);
  const double log_tol = std::log(tol);
  double sum = 0.0;
  for (const auto& p : cloud.points) {
    const double tau = t - p.t;
    if (tau < -edge) continue;
    if (tau <= edge) {
      sum += psi_point_kernel(table, t, x, p);
      continue;
    }
    const double ang = 2.0 * std::numbers::pi * (x - p.x) / L;
    const double s1 = std::sin(ang), c1 = std::cos(ang);
    double sk = 0.0, ck = 1.0, part = 0.0;
    const double age = tau - edge;
    for (std::size_t k = 1; k < nk; ++k) {
      const double sn = sk * c1 + ck * s1;
      ck = ck * c1 - sk * s1;
      sk = sn;
      const double ex = -table.m[k] * age;
      if (ex < log_tol) {
        if (monotone) break;
        continue;
      }
      part += carried[k] * sk * std::exp(ex);
    }
    sum += -2.0 * part;
  }
  return sum;
}

KernelQuadrature point_kernel_quadrature(const ModeTable& table, double tail_tol) {
  using GL = boost::math::quadrature::gauss<double, 10>;
  KernelQuadrature kq;
  kq.intensity = table.frame.intensity();
  const double sigma = table.sigma();
  const double edge = table.theta.effective_radius() * sigma;
  const double tail = std::max(2.0 * edge, free_field_tail(table, tail_tol));
  // panels: uniform across the mollifier window, then geometric out to the tail
  std::vector<double> cuts;
  const int inner = 48;
  for (int i = 0; i <= inner; ++i) cuts.push_back(-edge + 2.0 * edge * i / inner);
  double h = 2.0 * edge / inner;
  while (cuts.back() < tail) {
    h *= 1.25;
    cuts.push_back(std::min(tail, cuts.back() + h));
  }
  const auto& ab = GL::abscissa();
  const auto& wt = GL::weights();
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double c = 0.5 * (cuts[i] + cuts[i + 1]), r = 0.5 * (cuts[i + 1] - cuts[i]);
    for (std::size_t j = 0; j < ab.size(); ++j) {
      kq.tau.push_back(c - r * ab[j]);
      kq.weight.push_back(r * wt[j]);
      kq.tau.push_back(c + r * ab[j]);
      kq.weight.push_back(r * wt[j]);
    }
  }
  // y grid fine enough that smooth functions of g integrate spectrally
  std::size_t ny = 16;
  while (ny < 8 * static_cast<std::size_t>(table.K + 1)) ny *= 2;
  kq.ny = ny;
  kq.dy = table.frame.length / static_cast<double>(ny);
  RealFft fft(ny);
  const std::size_t nk = static_cast<std::size_t>(table.K) + 1;
  std::vector<cplx> coeffs(nk), bins(ny / 2 + 1);
  kq.values.resize(kq.tau.size() * ny);
  for (std::size_t i = 0; i < kq.tau.size(); ++i) {
    // g at p = (-tau, -y) equals the kernel at lag (tau, y): sum_k i w_k A_k G_k(tau) e^{i w_k y} + c.c.
    coeffs[0] = 0.0;
    for (std::size_t k = 1; k < nk; ++k)
      coeffs[k] = cplx(0.0, table.wavenumber(static_cast<long>(k)) * table.A[k] *
                                table.theta.causal_time_response(kq.tau[i], table.m[k], sigma));
    fold_modes(coeffs, ny, bins);
    fft.inverse(bins.data(), kq.values.data() + i * ny);
  }
  return kq;
}

double psi_variance(const ModeTable& table) {
  const double sigma = table.sigma();
  double total = 0.0;
  for (long k = 1; k <= table.K; ++k) {
    const std::size_t i = static_cast<std::size_t>(k);
    const double w = table.wavenumber(k);
    double s = 0.0;
    if (table.theta.kind == MollifierKind::Gaussian) {
      s = gauss_exp_causal_sq_integral(table.m[i], sigma);
    } else {
      const double edge = table.theta.effective_radius() * sigma;
      const double tail = edge + 40.0 / table.m[i];
      auto g2 = [&](double tau) {
        const double g = table.theta.causal_time_response(tau, table.m[i], sigma);
        return g * g;
      };
      s = composite_gauss(g2, -edge, edge, 32) + composite_gauss(g2, edge, tail, 64);
    }
    total += 2.0 * w * w * table.A[i] * table.A[i] * s;
  }
  // Parseval over one period contributes the factor L
  return total * table.frame.intensity() * table.frame.length;
}

}  // namespace kpzlab
