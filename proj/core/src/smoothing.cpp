#include "kpzlab/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kpzlab/error.hpp"
#include "kpzlab/fft.hpp"

namespace kpzlab {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

PolynomialSmoothing PolynomialSmoothing::validate(const std::vector<double>& c) {
  if (c.empty()) throw LabError(ErrorKind::InvalidArgument, "empty coefficient sequence");
  for (double v : c)
    if (!std::isfinite(v)) throw LabError(ErrorKind::InvalidArgument, "non-finite coefficient");
  if (c.size() < 2) throw LabError(ErrorKind::DegreeTooLow, "degree 2n must be at least 4");
  if (c.front() != 1.0) throw LabError(ErrorKind::QuadraticNotUnit, "coefficient of r^2 must be exactly 1");
  if (!(c.back() > 0.0)) throw LabError(ErrorKind::NotPositive, "leading coefficient must be positive");
  // Q(r) / r^2 = p(r^2) with p(y) = sum_j c_j y^{j-1} and p(0) = 1.  Scan y beyond the
  // Cauchy root bound.
  double bound = 0.0;
  for (double v : c) bound = std::max(bound, std::fabs(v / c.back()));
  bound += 1.0;
  const int samples = 200000;
  for (int i = 1; i <= samples; ++i) {
    const double y = bound * static_cast<double>(i) / samples;
    double p = 0.0;
    for (std::size_t j = c.size(); j-- > 0;) p = p * y + c[j];
    if (!(p > 0.0)) {
      std::ostringstream os;
      os << "Q(r) <= 0 at r = " << std::sqrt(y);
      throw LabError(ErrorKind::NotPositive, os.str());
    }
  }
  return PolynomialSmoothing(c);
}

PolynomialSmoothing PolynomialSmoothing::laplacian() { return PolynomialSmoothing({1.0}); }

double PolynomialSmoothing::operator()(double r) const {
  const double y = r * r;
  double p = 0.0;
  for (std::size_t j = c_.size(); j-- > 0;) p = p * y + c_[j];
  return p * y;
}

double PolynomialSmoothing::symbol(double k, double scale, double length) const {
  const double w = kTwoPi * k / length;
  const double w2 = w * w;
  const double s2 = scale * scale;
  // sum_j c_j w^{2j} s^{2j-2}
  double p = 0.0;
  for (std::size_t j = c_.size(); j-- > 0;) p = p * (w2 * s2) + c_[j];
  return p * w2;
}

std::string PolynomialSmoothing::tag() const {
  std::ostringstream os;
  os << "Q[";
  for (std::size_t j = 0; j < c_.size(); ++j) os << (j ? "," : "") << c_[j];
  os << "]";
  return os.str();
}

MultiplierFamily::MultiplierFamily(PolynomialSmoothing q, double epsilon, long mode_cutoff)
    : q_(std::move(q)), eps_(epsilon), kmax_(mode_cutoff) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw LabError(ErrorKind::InvalidArgument, "epsilon must lie in [0,1]");
  if (mode_cutoff < 0) throw LabError(ErrorKind::InvalidArgument, "negative mode cutoff");
}

double MultiplierFamily::multiplier(long k) const {
  if (std::labs(k) > kmax_) throw LabError(ErrorKind::ModeOutOfRange, "mode " + std::to_string(k) + " beyond cutoff");
  return q_.symbol(static_cast<double>(k), eps_, 1.0);
}

double frame_multiplier(const PolynomialSmoothing& q, const Frame& frame, double k) {
  return q.symbol(k, frame.smooth_scale, frame.length);
}

long choose_mode_cutoff(const PolynomialSmoothing& q, double eps, double t_min, double tol) {
  const double target = -std::log(tol);
  long k = 1;
  while (q.symbol(static_cast<double>(k), eps, 1.0) * t_min < target) {
    k = k < 16 ? k + 1 : k + k / 8;
    if (k > 100000000) throw LabError(ErrorKind::UnresolvedMode, "time slice too small for a finite mode cutoff");
  }
  return k;
}

GreensPair greens_function(const MultiplierFamily& fam, const GridSpec& grid, double tol) {
  if (grid.nx < 2 || grid.nx % 2 != 0 || grid.nt == 0 || !(grid.dt > 0.0))
    throw LabError(ErrorKind::GridMismatch, "grid needs even nx, nt > 0 and dt > 0");
  double t_min = HUGE_VAL;
  for (std::size_t n = 0; n < grid.nt; ++n) {
    const double t = grid.t0 + grid.dt * static_cast<double>(n);
    if (t > 0.0) t_min = std::min(t_min, t);
  }
  const long kmax = fam.mode_cutoff();
  double est = 0.0;
  if (std::isfinite(t_min)) {
    for (long k = kmax + 1; k <= kmax + 400; ++k) {
      const double m = fam.unchecked(static_cast<double>(k));
      est += 2.0 * (1.0 + kTwoPi * k) * std::exp(-m * t_min);
    }
    if (est > tol) {
      std::ostringstream os;
      os << "mode cutoff " << kmax << " leaves truncation error " << est << " at t = " << t_min;
      throw LabError(ErrorKind::UnresolvedMode, os.str());
    }
  }

  Frame frame = Frame::plane(1.0);
  frame.kind = FrameKind::Macro;
  frame.epsilon = fam.epsilon();
  frame.smooth_scale = fam.epsilon();
  GreensPair out{SpaceTimeField(grid.nt, grid.nx, grid.t0, grid.dt, frame),
                 SpaceTimeField(grid.nt, grid.nx, grid.t0, grid.dt, frame), est};

  const std::size_t nx = grid.nx;
  RealFft fft(nx);
  std::vector<cplx> cp(nx / 2 + 1), cd(nx / 2 + 1);
  std::vector<double> mult(static_cast<std::size_t>(kmax) + 1);
  for (long k = 0; k <= kmax; ++k) mult[static_cast<std::size_t>(k)] = fam.multiplier(k);

  for (std::size_t n = 0; n < grid.nt; ++n) {
    const double t = out.P.time(n);
    if (!(t > 0.0)) continue;
    std::fill(cp.begin(), cp.end(), cplx(0.0));
    std::fill(cd.begin(), cd.end(), cplx(0.0));
    // Fold modes |k| <= kmax into the nx grid bins; nodal values are exact under folding.
    for (long k = -kmax; k <= kmax; ++k) {
      const double a = std::exp(-mult[static_cast<std::size_t>(std::labs(k))] * t);
      if (a == 0.0) continue;
      const long b = ((k % static_cast<long>(nx)) + static_cast<long>(nx)) % static_cast<long>(nx);
      if (b <= static_cast<long>(nx / 2)) {
        cp[static_cast<std::size_t>(b)] += a;
        cd[static_cast<std::size_t>(b)] += cplx(0.0, kTwoPi * k * a);
      }
    }
    // Bins above nx/2 are the conjugates of those stored; the Nyquist bin takes both sides.
    fft.inverse(cp.data(), out.P.row(n));
    fft.inverse(cd.data(), out.dP.row(n));
  }
  return out;
}

double green_derivative(const PolynomialSmoothing& q, double eps, double t, double x, int m, int l) {
  if (!(t > 0.0)) return 0.0;
  if (m < 0 || l < 0 || m > 2 || l > 3) throw LabError(ErrorKind::InvalidArgument, "derivative order out of range");
  if (eps == 0.0 && t < 0.5) {
    // d_t p = d_x^2 p for the heat kernel, so reduce to spatial derivatives of order l + 2m.
    const int order = l + 2 * m;
    double sum = 0.0;
    const double norm = 1.0 / std::sqrt(4.0 * std::numbers::pi * t);
    const int images = 2 + static_cast<int>(std::ceil(std::sqrt(160.0 * t)));
    for (int j = -images; j <= images; ++j) {
      const double y = x + j;
      const double g = norm * std::exp(-y * y / (4.0 * t));
      const double u = y / (2.0 * t);
      const double a = 1.0 / (2.0 * t);
      double h = 0.0;
      switch (order) {
        case 0: h = 1.0; break;
        case 1: h = -u; break;
        case 2: h = u * u - a; break;
        case 3: h = -u * u * u + 3.0 * a * u; break;
        case 4: h = u * u * u * u - 6.0 * a * u * u + 3.0 * a * a; break;
        case 5: h = -u * u * u * u * u + 10.0 * a * u * u * u - 15.0 * a * a * u; break;
        default: {
          // order 6 and 7: Hermite recursion He_{n+1}(z) = z He_n - n He_{n-1} in z = y/sqrt(2t)
          const double s = std::sqrt(a);
          const double z = y * s;
          double hm = 1.0, hc = z;
          for (int nn = 1; nn < order; ++nn) {
            const double hn = z * hc - nn * hm;
            hm = hc;
            hc = hn;
          }
          h = ((order % 2) ? -1.0 : 1.0) * hc * std::pow(s, order);
        }
      }
      sum += g * h;
    }
    return sum;
  }
  const double target = 40.0;
  double sum = (m == 0 && l == 0) ? 1.0 : 0.0;
  for (long k = 1;; ++k) {
    const double mk = q.symbol(static_cast<double>(k), eps, 1.0);
    const double e = std::exp(-mk * t);
    const double w = kTwoPi * k;
    const double ph = w * x;
    // d_x^l cos(w x) = w^l cos(w x + l pi/2)
    double term = 2.0 * e * std::pow(w, l) * std::cos(ph + l * std::numbers::pi / 2.0);
    if (m == 1) term *= -mk;
    if (m == 2) term *= mk * mk;
    sum += term;
    if (mk * t > target + (l + 2 * m) * std::log(1.0 + mk)) break;
    if (k > 10000000) throw LabError(ErrorKind::UnresolvedMode, "mode sum does not converge at this time");
  }
  return sum;
}

double TimeCutoff::operator()(double t) const {
  if (t <= inner) return 1.0;
  if (t >= outer) return 0.0;
  const double s = (t - inner) / (outer - inner);
  const double f0 = std::exp(-1.0 / (1.0 - s));
  const double f1 = std::exp(-1.0 / s);
  return f0 / (f0 + f1);
}

KernelPair decompose_kernel(const SpaceTimeField& P, const TimeCutoff& cutoff) {
  if (P.nt == 0 || !(P.t_end() > cutoff.outer))
    throw LabError(ErrorKind::GridMismatch, "kernel grid must extend past the cutoff support");
  KernelPair out{P, P, cutoff};
  for (std::size_t n = 0; n < P.nt; ++n) {
    const double t = P.time(n);
    const double chi = t > 0.0 ? cutoff(t) : 0.0;
    for (std::size_t j = 0; j < P.nx; ++j) {
      const double p = t > 0.0 ? P.at(n, j) : 0.0;
      out.K.at(n, j) = chi * p;
      out.R.at(n, j) = p - chi * p;
    }
  }
  return out;
}

double hessian_sup(const SpaceTimeField& f) {
  double sup = 0.0;
  const double dt = f.dt, dx = f.dx();
  for (std::size_t n = 1; n + 1 < f.nt; ++n) {
    for (std::size_t j = 0; j < f.nx; ++j) {
      const std::size_t jp = (j + 1) % f.nx, jm = (j + f.nx - 1) % f.nx;
      const double ftt = (f.at(n + 1, j) - 2.0 * f.at(n, j) + f.at(n - 1, j)) / (dt * dt);
      const double fxx = (f.at(n, jp) - 2.0 * f.at(n, j) + f.at(n, jm)) / (dx * dx);
      const double ftx = (f.at(n + 1, jp) - f.at(n + 1, jm) - f.at(n - 1, jp) + f.at(n - 1, jm)) / (4.0 * dt * dx);
      sup = std::max({sup, std::fabs(ftt), std::fabs(fxx), std::fabs(ftx)});
    }
  }
  return sup;
}

}  // namespace kpzlab
