#include "kpzlab/kpz_reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "kpzlab/error.hpp"
#include "kpzlab/fft.hpp"
#include "kpzlab/rng.hpp"
#include "kpzlab/stats.hpp"

namespace kpzlab {

namespace {

void check(const CHConfig& c, const std::vector<double>& h0) {
  if (c.nx < 4 || c.nx % 2 != 0) throw LabError(ErrorKind::InvalidArgument, "cole-hopf: nx must be even and >= 4");
  if (h0.size() != c.nx) throw LabError(ErrorKind::InvalidArgument, "cole-hopf: initial profile has the wrong size");
  if (!(c.T > 0.0) || c.dt < 0.0) throw LabError(ErrorKind::InvalidArgument, "cole-hopf: need T > 0 and dt >= 0");
  for (double v : h0)
    if (!std::isfinite(v)) throw LabError(ErrorKind::InvalidArgument, "cole-hopf: initial profile is not finite");
}

class HeatStep {
 public:
  HeatStep(std::size_t nx, double dt) : fft_(nx), spec_(nx / 2 + 1), decay_(nx / 2 + 1) {
    for (std::size_t k = 0; k < decay_.size(); ++k) {
      const double w = 2.0 * std::numbers::pi * static_cast<double>(k);
      decay_[k] = std::exp(-w * w * dt);
    }
  }
  void apply(std::vector<double>& v) {
    fft_.forward(v.data(), spec_.data());
    for (std::size_t k = 0; k < spec_.size(); ++k) spec_[k] *= decay_[k];
    fft_.inverse(spec_.data(), v.data());
  }

 private:
  RealFft fft_;
  std::vector<cplx> spec_;
  std::vector<double> decay_;
};

}  // namespace

double CHConfig::step() const {
  if (dt > 0.0) return dt;
  const double dx = 1.0 / static_cast<double>(nx);
  return 0.25 * dx * dx;
}

std::size_t CHConfig::steps() const {
  return static_cast<std::size_t>(std::max(1.0, std::ceil(T / step() - 1e-9)));
}

double CHConfig::ito_constant() const { return a * static_cast<double>(nx) / 2.0; }

CHResult solve_cole_hopf(const CHConfig& c, const std::vector<double>& h0) {
  check(c, h0);
  if (c.a == 0.0) throw LabError(ErrorKind::InvalidArgument, "cole-hopf: a must be non-zero");
  CHResult out;
  out.steps = c.steps();
  out.dt = c.T / static_cast<double>(out.steps);
  out.ito_constant = c.ito_constant();
  const double sd = std::sqrt(out.dt * static_cast<double>(c.nx));
  // Z = exp(a h - shift); the shift keeps max Z near 1.
  double shift = c.a * *std::max_element(h0.begin(), h0.end());
  if (c.a < 0.0) shift = c.a * *std::min_element(h0.begin(), h0.end());
  std::vector<double> z(c.nx);
  for (std::size_t j = 0; j < c.nx; ++j) z[j] = std::exp(c.a * h0[j] - shift);
  HeatStep heat(c.nx, out.dt);
  CounterRng rng(c.seed);
  out.min_z = 1.0;
  for (std::size_t n = 0; n < out.steps; ++n) {
    if (c.noise)
      for (auto& v : z) v *= 1.0 + c.a * sd * rng.normal();
    heat.apply(z);
    double lo = z[0], hi = z[0];
    for (double v : z) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw LabError(ErrorKind::NonFinite, "cole-hopf: non-finite Z");
    if (!(lo > 0.0)) throw LabError(ErrorKind::PositivityLost, "cole-hopf: Z reached a non-positive value");
    out.min_z = std::min(out.min_z, lo / hi);
    if (hi > 1e100 || hi < 1e-100) {
      for (auto& v : z) v /= hi;
      shift += std::log(hi);
    }
  }
  out.h.resize(c.nx);
  for (std::size_t j = 0; j < c.nx; ++j) out.h[j] = (std::log(z[j]) + shift) / c.a;
  return out;
}

std::vector<double> solve_additive_she(const CHConfig& c, const std::vector<double>& h0) {
  check(c, h0);
  const std::size_t steps = c.steps();
  const double dt = c.T / static_cast<double>(steps);
  const double sd = std::sqrt(dt * static_cast<double>(c.nx));
  std::vector<double> h = h0;
  HeatStep heat(c.nx, dt);
  CounterRng rng(c.seed);
  for (std::size_t n = 0; n < steps; ++n) {
    if (c.noise)
      for (auto& v : h) v += sd * rng.normal();
    heat.apply(h);
  }
  return h;
}

double cole_hopf_residual(const CHConfig& c, const std::vector<double>& h0) {
  CHConfig one = c;
  one.noise = false;
  one.dt = c.step();
  one.T = one.dt;
  const auto next = solve_cole_hopf(one, h0).h;
  const std::size_t nx = c.nx, nk = nx / 2 + 1;
  RealFft fft(nx);
  std::vector<cplx> spec(nk), d1(nk), d2(nk);
  std::vector<double> buf(nx), hx(nx), hxx(nx);
  // d_x^2 h + a (d_x h)^2 at the nodes
  auto rhs = [&](const std::vector<double>& h) {
    buf = h;
    fft.forward(buf.data(), spec.data());
    for (std::size_t k = 0; k < nk; ++k) {
      const double w = 2.0 * std::numbers::pi * static_cast<double>(k);
      d1[k] = (k < nx / 2) ? cplx(0.0, w) * spec[k] : cplx(0.0);
      d2[k] = -w * w * spec[k];
    }
    fft.inverse(d1.data(), hx.data());
    fft.inverse(d2.data(), hxx.data());
    std::vector<double> r(nx);
    for (std::size_t j = 0; j < nx; ++j) r[j] = hxx[j] + c.a * hx[j] * hx[j];
    return r;
  };
  const auto r0 = rhs(h0);
  const auto r1 = rhs(next);
  double worst = 0.0;
  for (std::size_t j = 0; j < nx; ++j) {
    const double lhs = (next[j] - h0[j]) / one.dt;
    worst = std::max(worst, std::fabs(lhs - 0.5 * (r0[j] + r1[j])));
  }
  return worst;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw LabError(ErrorKind::InvalidArgument, "ks: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

KsResult ks_compare(std::span<const double> a, std::span<const double> b, std::size_t resamples, std::uint64_t seed) {
  KsResult out;
  out.statistic = ks_statistic(a, b);
  out.resamples = resamples;
  const std::size_t na = a.size(), n = a.size() + b.size();
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  // group boundaries of tied values in the sorted pool
  std::vector<std::size_t> ends;
  for (std::size_t k = 1; k <= n; ++k)
    if (k == n || pooled[k] != pooled[k - 1]) ends.push_back(k);
  std::vector<char> label(n, 0);
  std::fill(label.begin(), label.begin() + static_cast<long>(na), 1);
  CounterRng rng(seed);
  const double fa = static_cast<double>(na), fb = static_cast<double>(n - na);
  std::size_t exceed = 0;
  for (std::size_t r = 0; r < resamples; ++r) {
    for (std::size_t k = n - 1; k > 0; --k) {
      const auto pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(k + 1));
      std::swap(label[k], label[pick]);
    }
    std::size_t ca = 0, start = 0;
    double d = 0.0;
    for (std::size_t e : ends) {
      for (std::size_t k = start; k < e; ++k) ca += static_cast<std::size_t>(label[k]);
      const double cb = static_cast<double>(e - ca);
      d = std::max(d, std::fabs(static_cast<double>(ca) / fa - cb / fb));
      start = e;
    }
    if (d >= out.statistic - 1e-12) ++exceed;
  }
  out.p_value = static_cast<double>(1 + exceed) / static_cast<double>(1 + resamples);
  return out;
}

std::vector<double> median_centered(std::span<const double> x) {
  const double m = median(x);
  std::vector<double> out(x.begin(), x.end());
  for (auto& v : out) v -= m;
  return out;
}

}  // namespace kpzlab
