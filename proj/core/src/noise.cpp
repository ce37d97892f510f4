#include "kpzlab/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kpzlab/error.hpp"
#include "kpzlab/quadrature.hpp"
#include "kpzlab/rng.hpp"
#include "kpzlab/special.hpp"

namespace kpzlab {

namespace {

double bump1(double s) {
  if (std::fabs(s) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

double bump_mass() {
  static const double mass = composite_gauss(bump1, -1.0, 1.0, 64);
  return mass;
}

}  // namespace

Mollifier Mollifier::gaussian() {
  Mollifier m;
  m.kind = MollifierKind::Gaussian;
  m.norm = 1.0 / std::numbers::pi;
  m.evaluator = [](double t, double x) { return std::exp(-t * t - x * x) / std::numbers::pi; };
  m.decay_exponent = 1.0;
  m.support_radius_hint = 6.0;
  m.tag = "gauss";
  return m;
}

Mollifier Mollifier::bump(double width) {
  if (!(width > 0.0)) throw LabError(ErrorKind::InvalidArgument, "bump width must be positive");
  Mollifier m;
  m.kind = MollifierKind::Bump;
  m.width = width;
  const double mass = width * bump_mass();
  m.norm = 1.0 / (mass * mass);
  const double c = m.norm;
  m.evaluator = [c, width](double t, double x) { return c * bump1(t / width) * bump1(x / width); };
  m.decay_exponent = 1.0;
  m.support_radius_hint = 2.0 * width;
  std::ostringstream os;
  os << "bump" << width;
  m.tag = os.str();
  return m;
}

Mollifier Mollifier::custom(std::function<double(double, double)> evaluator, double decay_exponent,
                            double support_radius_hint, std::string tag) {
  Mollifier m;
  m.kind = MollifierKind::Custom;
  m.evaluator = std::move(evaluator);
  m.decay_exponent = decay_exponent;
  m.support_radius_hint = support_radius_hint;
  m.tag = std::move(tag);
  return m;
}

double Mollifier::time_profile(double tau) const {
  switch (kind) {
    case MollifierKind::Gaussian: return std::exp(-tau * tau);
    case MollifierKind::Bump: return bump1(tau / width);
    default: throw LabError(ErrorKind::InvalidArgument, "custom mollifier has no separable profile");
  }
}

double Mollifier::space_profile(double y) const {
  switch (kind) {
    case MollifierKind::Gaussian: return std::exp(-y * y);
    case MollifierKind::Bump: return bump1(y / width);
    default: throw LabError(ErrorKind::InvalidArgument, "custom mollifier has no separable profile");
  }
}

double Mollifier::space_transform(double xi) const {
  switch (kind) {
    case MollifierKind::Gaussian: {
      const double a = std::numbers::pi * xi;
      return std::sqrt(std::numbers::pi) * std::exp(-a * a);
    }
    case MollifierKind::Bump: {
      const double w = width;
      const std::size_t panels = 16 + static_cast<std::size_t>(std::ceil(4.0 * std::fabs(xi) * w));
      return w * composite_gauss([&](double s) { return bump1(s) * std::cos(2.0 * std::numbers::pi * xi * w * s); },
                                 -1.0, 1.0, panels);
    }
    default: throw LabError(ErrorKind::InvalidArgument, "custom mollifier has no separable profile");
  }
}

double Mollifier::causal_time_response(double tau, double m, double sigma) const {
  if (kind == MollifierKind::Gaussian) return gauss_exp_causal(tau, m, sigma);
  if (kind != MollifierKind::Bump) throw LabError(ErrorKind::InvalidArgument, "custom mollifier has no separable profile");
  const double half = width * sigma;
  double lo = -half;
  const double hi = std::min(tau, half);
  if (m > 0.0) lo = std::max(lo, tau - 40.0 / m);
  if (!(hi > lo)) return 0.0;
  double h = half / 16.0;
  if (m > 0.0) h = std::min(h, 1.0 / m);
  const std::size_t panels = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((hi - lo) / h)));
  return composite_gauss([&](double s) { return std::exp(-m * (tau - s)) * bump1(s / half); }, lo, hi, panels);
}

double Mollifier::time_mass(double sigma) const {
  switch (kind) {
    case MollifierKind::Gaussian: return sigma * std::sqrt(std::numbers::pi);
    case MollifierKind::Bump: return sigma * width * bump_mass();
    default: throw LabError(ErrorKind::InvalidArgument, "custom mollifier has no separable profile");
  }
}

double Mollifier::effective_radius() const {
  switch (kind) {
    case MollifierKind::Gaussian: return 6.0;
    case MollifierKind::Bump: return width;
    default: return support_radius_hint;
  }
}

void validate_mollifier(const Mollifier& theta) {
  if (!theta.evaluator) throw LabError(ErrorKind::InvalidArgument, "mollifier without evaluator");
  if (!(theta.decay_exponent > 0.0)) throw LabError(ErrorKind::TailNotSummable, "decay exponent must be positive");
  const double R = theta.support_radius_hint;
  for (int i = -20; i <= 20; ++i) {
    for (int j = 0; j <= 20; ++j) {
      const double t = R * i / 20.0, x = R * j / 20.0;
      const double a = theta(t, x), b = theta(t, -x);
      if (std::fabs(a - b) > 1e-12 * (std::fabs(a) + 1e-300))
        throw LabError(ErrorKind::InvalidArgument, "mollifier is not symmetric in x");
    }
  }
  // Normalization by a tensor Gauss rule over the parabolic box |t| <= R^2, |x| <= R.
  const double T = std::max(R, R * R);
  const double mass = composite_gauss(
      [&](double t) { return composite_gauss([&](double x) { return theta(t, x); }, -R, R, 48); }, -T, T, 48);
  if (std::fabs(mass - 1.0) > 1e-6) {
    std::ostringstream os;
    os << "mollifier integrates to " << mass;
    throw LabError(ErrorKind::InvalidArgument, os.str());
  }
}

PointCloud sample_cloud(const Box& box, double intensity, std::uint64_t seed, double max_expected) {
  if (!(intensity > 0.0)) throw LabError(ErrorKind::InvalidArgument, "intensity must be positive");
  if (!(box.t_hi >= box.t_lo) || !(box.period > 0.0)) throw LabError(ErrorKind::InvalidArgument, "malformed box");
  const double mean = intensity * box.area();
  if (!std::isfinite(mean) || mean > max_expected) {
    std::ostringstream os;
    os << "expected point count " << mean << " exceeds budget " << max_expected;
    throw LabError(ErrorKind::AreaOverflow, os.str());
  }
  PointCloud cloud;
  cloud.box = box;
  cloud.intensity = intensity;
  cloud.seed = seed;
  CounterRng rng(seed);
  const std::uint64_t n = rng.poisson(mean);
  cloud.points.resize(n);
  for (auto& p : cloud.points) {
    p.t = rng.uniform(box.t_lo, box.t_hi);
    p.x = rng.uniform(0.0, box.period);
  }
  std::sort(cloud.points.begin(), cloud.points.end(), [](const Point& a, const Point& b) { return a.t < b.t; });
  return cloud;
}

PointCloud map_cloud(const PointCloud& cloud, const Frame& from, const Frame& to) {
  const double st = to.time_scale / from.time_scale;
  const double sx = to.space_scale / from.space_scale;
  PointCloud out;
  out.seed = cloud.seed;
  out.intensity = cloud.intensity / (st * sx);
  out.box = Box{cloud.box.t_lo * st, cloud.box.t_hi * st, cloud.box.period * sx};
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) out.points.push_back(Point{p.t * st, p.x * sx});
  return out;
}

PeriodicMollifier::PeriodicMollifier(Mollifier theta, double eps) : theta_(std::move(theta)) {
  if (!(theta_.decay_exponent > 0.0)) throw LabError(ErrorKind::TailNotSummable, "decay exponent must be positive");
  if (!(eps > 0.0)) throw LabError(ErrorKind::InvalidArgument, "periodization needs eps > 0");
  period_ = 1.0 / eps;
  const double tol = 1e-12;
  const double p = 4.0 + theta_.decay_exponent;
  decay_constant_ = 0.0;
  if (!theta_.separable()) {
    const double R = theta_.support_radius_hint;
    for (int i = -40; i <= 40; ++i)
      for (int j = 0; j <= 40; ++j) {
        const double t = R * R * i / 10.0, x = R * j / 10.0;
        const double r = std::sqrt(std::fabs(t)) + x;
        decay_constant_ = std::max(decay_constant_, std::fabs(theta_(t, x)) * std::pow(1.0 + r, p));
      }
    decay_constant_ *= 2.0;
  }
  // Remainder after |k| <= K images, for |x| <= period/2: images sit at distance >= (k - 1/2) P.
  auto bound = [&](int k) {
    const double d = (k - 0.5) * period_;
    if (theta_.separable()) return 2.0 * theta_.norm * theta_.space_profile(d);
    return 2.0 * decay_constant_ * std::pow(1.0 + d, -p);
  };
  images_ = 0;
  for (;;) {
    double tail = 0.0;
    for (int k = images_ + 1; k <= images_ + 100000; ++k) {
      const double b = bound(k);
      tail += b;
      if (b < tol * 1e-6) break;
    }
    if (tail < tol) break;
    ++images_;
    if (images_ > 100000) throw LabError(ErrorKind::TailNotSummable, "periodization tail does not reach tolerance");
  }
}

double PeriodicMollifier::operator()(double t, double x) const {
  double y = std::fmod(x, period_);
  if (y >= 0.5 * period_) y -= period_;
  if (y < -0.5 * period_) y += period_;
  if (theta_.separable()) {
    double s = 0.0;
    for (int k = -images_; k <= images_; ++k) s += theta_.space_profile(y + k * period_);
    return theta_.norm * theta_.time_profile(t) * s;
  }
  double s = 0.0;
  for (int k = -images_; k <= images_; ++k) s += theta_(t, y + k * period_);
  return s;
}

PeriodicMollifier periodize_mollifier(const Mollifier& theta, double eps) { return PeriodicMollifier(theta, eps); }

Box padded_box(const Frame& frame, const Mollifier& theta, double t_lo, double t_hi, double pad) {
  const double r = pad * std::max(1.0, theta.effective_radius() / 6.0);
  return Box{t_lo - r * frame.time_scale, t_hi + r * frame.time_scale, frame.length};
}

SpaceTimeField synthesize_noise(const PointCloud& cloud, const Mollifier& theta, const Frame& frame,
                                const GridSpec& grid) {
  SpaceTimeField out(grid.nt, grid.nx, grid.t0, grid.dt, frame);
  const double tau = frame.time_scale, xs = frame.space_scale;
  const double R = theta.effective_radius();
  const double t_end = out.t_end();
  const double need_lo = grid.t0 - R * tau, need_hi = t_end + R * tau;
  const double slack = 1e-9 * std::max(1.0, std::fabs(need_lo) + std::fabs(need_hi));
  if (cloud.box.t_lo > need_lo + slack || cloud.box.t_hi < need_hi - slack ||
      std::fabs(cloud.box.period - frame.length) > 1e-9 * frame.length) {
    std::ostringstream os;
    os << "cloud box [" << cloud.box.t_lo << ", " << cloud.box.t_hi << "] does not cover [" << need_lo << ", "
       << need_hi << "]";
    throw LabError(ErrorKind::CoverageGap, os.str());
  }
  PeriodicMollifier per(theta, xs / frame.length);
  const double amp = frame.amplitude;
  const double L = frame.length;
  const double dx = out.dx();
  const bool all_x = R * xs >= 0.5 * L;
  std::vector<double> fx(grid.nx);
  for (const auto& p : cloud.points) {
    const double lo = (p.t - R * tau - grid.t0) / grid.dt;
    const double hi = (p.t + R * tau - grid.t0) / grid.dt;
    const long n0 = std::max(0L, static_cast<long>(std::ceil(lo)));
    const long n1 = std::min(static_cast<long>(grid.nt) - 1, static_cast<long>(std::floor(hi)));
    if (n0 > n1) continue;
    long j0 = 0, j1 = static_cast<long>(grid.nx) - 1;
    if (!all_x) {
      j0 = static_cast<long>(std::ceil((p.x - R * xs) / dx));
      j1 = static_cast<long>(std::floor((p.x + R * xs) / dx));
    }
    if (theta.separable()) {
      for (long j = j0; j <= j1; ++j) {
        const double y = (dx * static_cast<double>(j) - p.x) / xs;
        fx[static_cast<std::size_t>(j - j0)] = per(0.0, y) / theta.time_profile(0.0);
      }
      for (long n = n0; n <= n1; ++n) {
        const double g = amp * theta.time_profile((out.time(static_cast<std::size_t>(n)) - p.t) / tau);
        double* row = out.row(static_cast<std::size_t>(n));
        for (long j = j0; j <= j1; ++j) row[out.wrap(j)] += g * fx[static_cast<std::size_t>(j - j0)];
      }
    } else {
      for (long n = n0; n <= n1; ++n) {
        const double s = (out.time(static_cast<std::size_t>(n)) - p.t) / tau;
        double* row = out.row(static_cast<std::size_t>(n));
        for (long j = j0; j <= j1; ++j) row[out.wrap(j)] += amp * per(s, (dx * static_cast<double>(j) - p.x) / xs);
      }
    }
  }
  for (double& v : out.values) v -= frame.compensator();
  return out;
}

}  // namespace kpzlab
