#include "kpzlab/model_objects.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "kpzlab/error.hpp"
#include "kpzlab/fft.hpp"
#include "kpzlab/parallel.hpp"
#include "kpzlab/quadrature.hpp"
#include "kpzlab/rng.hpp"
#include "kpzlab/special.hpp"
#include "kpzlab/spectral_noise.hpp"
#include "kpzlab/stats.hpp"

namespace kpzlab {

namespace {

struct TagInfo {
  const char* tag;
  double base;  // homogeneity without kappa
  int depth;
  bool intermediate;
  bool recentered;
};

constexpr TagInfo kTags[] = {
    {"0'", 0.0, 0, false, false},     {"1'", -0.5, 0, false, false},   {"2'", -1.0, 0, false, true},
    {"2'0", 0.0, 1, false, false},    {"1'1'", 0.0, 1, false, false},  {"2'0'", 0.0, 1, false, false},
    {"2'1'", -0.5, 1, false, true},   {"2'2'0", 0.0, 1, false, true},  {"2'2'0'", 0.0, 1, false, true},
    {"2'1'1'", 0.0, 2, false, true},  {"1'0", 0.5, 1, true, false},    {"2'1'0", 0.5, 2, true, false},
};

// Uniform table with Catmull-Rom interpolation.
struct UniformTable {
  double x0 = 0.0;
  double h = 1.0;
  std::vector<double> y;

  double operator()(double x) const {
    const double u = (x - x0) / h;
    if (u < 0.0 || u > static_cast<double>(y.size() - 1)) return 0.0;
    auto i = static_cast<long>(std::floor(u));
    const long n = static_cast<long>(y.size());
    if (i >= n - 1) i = n - 2;
    const double s = u - static_cast<double>(i);
    auto at = [&](long j) { return y[static_cast<std::size_t>(std::clamp(j, 0L, n - 1))]; };
    const double p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
    return p1 + 0.5 * s * (p2 - p0 + s * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + s * (3.0 * (p1 - p2) + p3 - p0)));
  }
};

double wrap_half(double d, double period) {
  d = std::fmod(d, period);
  if (d < -0.5 * period) d += period;
  if (d >= 0.5 * period) d -= period;
  return d;
}

SpaceTimeField rows_from(const SpaceTimeField& f, std::size_t n0) {
  SpaceTimeField out(f.nt - n0, f.nx, f.time(n0), f.dt, f.frame);
  std::copy(f.values.begin() + static_cast<long>(n0 * f.nx), f.values.end(), out.values.begin());
  return out;
}

// Restrict a and b to their common rows (same dt and nx, t0 offset by whole rows).
std::pair<SpaceTimeField, SpaceTimeField> align(const SpaceTimeField& a, const SpaceTimeField& b) {
  if (a.nx != b.nx || std::fabs(a.dt - b.dt) > 1e-12 * a.dt)
    throw LabError(ErrorKind::GridMismatch, "symbol product on different grids");
  const double t0 = std::max(a.t0, b.t0);
  const auto na = static_cast<std::size_t>(std::llround((t0 - a.t0) / a.dt));
  const auto nb = static_cast<std::size_t>(std::llround((t0 - b.t0) / b.dt));
  const std::size_t nt = std::min(a.nt - na, b.nt - nb);
  SpaceTimeField ra = rows_from(a, na), rb = rows_from(b, nb);
  ra.nt = rb.nt = nt;
  ra.values.resize(nt * a.nx);
  rb.values.resize(nt * b.nx);
  return {std::move(ra), std::move(rb)};
}

SpaceTimeField product(const SpaceTimeField& a, const SpaceTimeField& b, double shift) {
  auto [ra, rb] = align(a, b);
  for (std::size_t i = 0; i < ra.values.size(); ++i) ra.values[i] = ra.values[i] * rb.values[i] - shift;
  return ra;
}

}  // namespace

const std::vector<std::string>& table_tags() {
  static const std::vector<std::string> tags{"0'", "1'", "2'", "2'0", "1'1'", "2'0'", "2'1'", "2'2'0", "2'2'0'", "2'1'1'"};
  return tags;
}

SymbolId symbol_id(const std::string& tag, double kappa) {
  for (const auto& t : kTags)
    if (tag == t.tag) return SymbolId{tag, t.base - kappa, kappa, t.depth, t.intermediate, t.recentered};
  throw LabError(ErrorKind::InvalidArgument, "unknown symbol tag '" + tag + "'");
}

double TestFunction::profile(double s) {
  if (std::fabs(s) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

double TestFunction::norm_constant() {
  static const double c = [] {
    double sup = 0.0;
    for (int i = 1; i < 200000; ++i) {
      const double s = static_cast<double>(i) / 200000.0;
      const double d = profile(s) * 2.0 * s / ((1.0 - s * s) * (1.0 - s * s));
      sup = std::max(sup, d);
    }
    return 1.0 / std::max(1.0, sup);
  }();
  return c;
}

double TestFunction::base(double t, double x) const { return norm_constant() * profile(t) * profile(x); }

double TestFunction::operator()(double t, double x, double period) const {
  const double l2 = lambda * lambda;
  const double dx = wrap_half(x - zx, period);
  return base((t - zt) / l2, dx / lambda) / (l2 * lambda);
}

double TestFunction::integral() const {
  static const double mass = composite_gauss(profile, -1.0, 1.0, 64);
  return norm_constant() * mass * mass;
}

double testfn_space_coefficient(double lambda, long k) {
  const double w = 2.0 * std::numbers::pi * static_cast<double>(k) * lambda;
  const auto panels = static_cast<std::size_t>(32 + std::ceil(std::fabs(w)));
  return lambda * composite_gauss([&](double s) { return TestFunction::profile(s) * std::cos(w * s); }, -1.0, 1.0, panels);
}

SpaceTimeField apply_kprime(const SpaceTimeField& f, const PolynomialSmoothing& q, double eps, const TimeCutoff& cut) {
  if (f.nx < 4 || f.nx % 2 != 0 || f.nt == 0) throw LabError(ErrorKind::GridMismatch, "apply_kprime: bad grid");
  const auto n0 = static_cast<std::size_t>(std::ceil(cut.outer / f.dt - 1e-9));
  if (n0 >= f.nt) throw LabError(ErrorKind::GridMismatch, "apply_kprime: grid shorter than the kernel support");
  const std::size_t nt = f.nt, nx = f.nx, nk = nx / 2 + 1;
  const double L = f.period(), dt = f.dt;
  RealFft fft(nx);
  std::vector<cplx> spec(nt * nk), out(nt * nk, cplx(0.0));
  std::vector<double> row(nx);
  for (std::size_t n = 0; n < nt; ++n) {
    std::copy(f.row(n), f.row(n) + nx, row.begin());
    fft.forward(row.data(), spec.data() + n * nk);
  }
  // (1 - chi(tau)) on tau_j = j dt
  const auto j0 = static_cast<std::size_t>(std::ceil(cut.inner / dt));
  std::vector<double> notchi(nt, 1.0);
  for (std::size_t j = 0; j < nt; ++j) notchi[j] = 1.0 - cut(dt * static_cast<double>(j));
  for (std::size_t k = 1; k + 1 < nk; ++k) {
    const double m = q.symbol(static_cast<double>(k), eps, L);
    const double a = m * dt;
    const double decay = std::exp(-a), w_new = dt * phi2(a), w_old = dt * (phi1(a) - phi2(a));
    const cplx dk(0.0, 2.0 * std::numbers::pi * static_cast<double>(k) / L);
    cplx e(0.0);
    std::vector<cplx> E(nt);
    for (std::size_t n = 1; n < nt; ++n) {
      e = decay * e + w_new * spec[n * nk + k] + w_old * spec[(n - 1) * nk + k];
      E[n] = e;
    }
    const bool tail = std::exp(-m * cut.inner) > 1e-17;
    const double jmax_f = 40.0 / m / dt;
    for (std::size_t n = n0; n < nt; ++n) {
      cplx r(0.0);
      if (tail) {
        const std::size_t jmax = std::min<std::size_t>(n, static_cast<std::size_t>(std::min(jmax_f, 1e18)));
        for (std::size_t j = j0; j <= jmax; ++j) {
          const double wgt = (j == n ? 0.5 : 1.0) * dt * notchi[j] * std::exp(-m * dt * static_cast<double>(j));
          r += wgt * spec[(n - j) * nk + k];
        }
      }
      out[n * nk + k] = dk * (E[n] - r);
    }
  }
  SpaceTimeField g(nt - n0, nx, f.time(n0), dt, f.frame);
  std::vector<cplx> bins(nk);
  for (std::size_t n = n0; n < nt; ++n) {
    std::copy(out.begin() + static_cast<long>(n * nk), out.begin() + static_cast<long>((n + 1) * nk), bins.begin());
    fft.inverse(bins.data(), g.row(n - n0));
  }
  return g;
}

SymbolSet build_symbols(const std::vector<std::string>& tags, const Nonlinearity& f, const PolynomialSmoothing& q,
                        const SpaceTimeField& psi, const RenormTable& renorm, bool recenter) {
  const double eps = psi.frame.epsilon;
  if (psi.frame.kind != FrameKind::Macro) throw LabError(ErrorKind::InvalidArgument, "build_symbols: macro-frame Psi");
  if (std::fabs(renorm.epsilon - eps) > 1e-12 * eps)
    throw LabError(ErrorKind::InvalidArgument, "build_symbols: renormalization table is for a different eps");
  const double a = renorm.a_eps, s = std::sqrt(eps);
  std::map<std::string, SpaceTimeField> memo;
  auto constant = [&](const std::string& tag) { return recenter ? renorm.at(tag).value : 0.0; };
  std::function<const SpaceTimeField&(const std::string&)> get = [&](const std::string& tag) -> const SpaceTimeField& {
    if (auto it = memo.find(tag); it != memo.end()) return it->second;
    SpaceTimeField out;
    auto pointwise = [&](auto&& fn) {
      SpaceTimeField r = psi;
      for (auto& v : r.values) v = fn(s * v);
      return r;
    };
    if (tag == "0'") {
      out = pointwise([&](double w) { return f.d2F(w) / (2.0 * a); });
    } else if (tag == "1'") {
      out = pointwise([&](double w) { return f.dF(w) / (2.0 * a * s); });
    } else if (tag == "2'") {
      const double c = constant("2'");
      out = pointwise([&](double w) { return f.F(w) / (a * eps) - c; });
    } else if (tag == "1'0") {
      out = apply_kprime(get("1'"), q, eps);
    } else if (tag == "2'0") {
      out = apply_kprime(get("2'"), q, eps);
    } else if (tag == "2'1'0") {
      out = apply_kprime(get("2'1'"), q, eps);
    } else if (tag == "1'1'") {
      out = product(get("1'0"), get("1'"), 0.0);
    } else if (tag == "2'0'") {
      out = product(get("2'0"), get("0'"), 0.0);
    } else if (tag == "2'1'") {
      out = product(get("2'0"), get("1'"), constant("2'1'"));
    } else if (tag == "2'2'0") {
      out = product(get("2'0"), get("2'0"), constant("2'2'0"));
    } else if (tag == "2'2'0'") {
      out = product(get("2'2'0"), get("0'"), constant("2'2'0'"));
    } else if (tag == "2'1'1'") {
      out = product(get("2'1'0"), get("1'"), constant("2'1'1'"));
    } else {
      throw LabError(ErrorKind::InvalidArgument, "unknown symbol tag '" + tag + "'");
    }
    return memo.emplace(tag, std::move(out)).first->second;
  };
  SymbolSet result;
  for (const auto& tag : tags) result[tag] = SymbolInstance{symbol_id(tag), get(tag), true};
  return result;
}

SymbolInstance build_symbol(const std::string& tag, const Nonlinearity& f, const PolynomialSmoothing& q,
                            const SpaceTimeField& psi, const RenormTable& renorm) {
  return build_symbols({tag}, f, q, psi, renorm).at(tag);
}

double pair_testfn(const SpaceTimeField& field, const TestFunction& tf) {
  const double r_t = tf.time_radius(), r_x = tf.space_radius();
  const double L = field.period();
  const double slack = 1e-9 * std::max(1.0, std::fabs(tf.zt));
  if (tf.zt - r_t < field.t0 - slack || tf.zt + r_t > field.t_end() + slack || 2.0 * r_x > L) {
    std::ostringstream os;
    os << "test function support [" << tf.zt - r_t << ", " << tf.zt + r_t << "] x " << 2.0 * r_x
       << " leaves the field [" << field.t0 << ", " << field.t_end() << "] x " << L;
    throw LabError(ErrorKind::SupportEscape, os.str());
  }
  const double dx = field.dx();
  const auto n_lo = static_cast<std::size_t>(std::max(0.0, std::ceil((tf.zt - r_t - field.t0) / field.dt)));
  const auto n_hi = std::min(field.nt - 1, static_cast<std::size_t>(std::floor((tf.zt + r_t - field.t0) / field.dt)));
  const auto j_lo = static_cast<long>(std::ceil((tf.zx - r_x) / dx));
  const auto j_hi = static_cast<long>(std::floor((tf.zx + r_x) / dx));
  double sum = 0.0;
  for (std::size_t n = n_lo; n <= n_hi; ++n) {
    const double t = field.time(n);
    double row = 0.0;
    for (long j = j_lo; j <= j_hi; ++j) row += field.at(n, field.wrap(j)) * tf(t, dx * static_cast<double>(j), L);
    sum += row;
  }
  return sum * field.dt * dx;
}

GridSpec object_grid(double eps, double lambda_max) {
  GridSpec g;
  g.dt = eps * eps / 8.0;
  g.nx = static_cast<std::size_t>(std::ceil(4.0 / eps - 1e-9));
  if (g.nx % 2) ++g.nx;
  const double lo = -(2.0 + lambda_max * lambda_max) - 2.0 * g.dt;
  const double hi = lambda_max * lambda_max + 2.0 * g.dt;
  const auto steps = static_cast<std::size_t>(std::ceil((hi - lo) / g.dt));
  g.t0 = hi - g.dt * static_cast<double>(steps);
  g.nt = steps + 1;
  return g;
}

namespace {

struct ObjectContext {
  ModeTable table;
  GridSpec grid;
};

SpaceTimeField realize_psi(const ObjectContext& ctx, std::uint64_t seed) {
  const double t_end = ctx.grid.t0 + ctx.grid.dt * static_cast<double>(ctx.grid.nt - 1);
  const PointCloud cloud = free_field_cloud(ctx.table, ctx.grid.t0, t_end, seed);
  return free_field(cloud, ctx.table, ctx.grid).psi;
}

double last_row_mean(const SpaceTimeField& f) {
  return mean(std::span<const double>(f.row(f.nt - 1), f.nx));
}

}  // namespace

void fill_object_constants(RenormTable& table, const Nonlinearity& f, const PolynomialSmoothing& q,
                           const Mollifier& theta, std::size_t replicas, std::uint64_t seed) {
  if (replicas < 2) throw LabError(ErrorKind::InvalidArgument, "fill_object_constants: need >= 2 replicas");
  const double eps = table.epsilon;
  ObjectContext ctx{ModeTable::build(q, theta, Frame::macro(eps)), object_grid(eps, 0.0)};
  struct Raw {
    double c21 = 0, c220 = 0, c2200 = 0, c0 = 0, c211 = 0;
  };
  const auto raws = map_replicas<Raw>(replicas, [&](std::size_t r) {
    const auto psi = realize_psi(ctx, derive_seed(seed, "object-constants", r));
    const auto sym = build_symbols({"0'", "2'1'", "2'2'0", "2'2'0'", "2'1'1'"}, f, q, psi, table, false);
    return Raw{last_row_mean(sym.at("2'1'").field), last_row_mean(sym.at("2'2'0").field),
               last_row_mean(sym.at("2'2'0'").field), last_row_mean(sym.at("0'").field),
               last_row_mean(sym.at("2'1'1'").field)};
  });
  auto column = [&](auto member) {
    std::vector<double> v(replicas);
    for (std::size_t r = 0; r < replicas; ++r) v[r] = raws[r].*member;
    return mean_estimate(v);
  };
  const auto m21 = column(&Raw::c21), m220 = column(&Raw::c220), m211 = column(&Raw::c211);
  std::vector<double> v2200(replicas);
  for (std::size_t r = 0; r < replicas; ++r) v2200[r] = raws[r].c2200 - m220.mean * raws[r].c0;
  const auto m2200 = mean_estimate(v2200);
  table.constants["2'1'"] = {m21.mean, m21.stderr_};
  table.constants["2'2'0"] = {m220.mean, m220.stderr_};
  table.constants["2'2'0'"] = {m2200.mean, m2200.stderr_};
  table.constants["2'1'1'"] = {m211.mean, m211.stderr_};
}

namespace {

// Per-mode time kernels T_k(s) = int b(t / lambda^2) G_k(t - s) dt for the Psi pairing.
struct PsiPairing {
  double lambda = 0.0;
  double s0 = 0.0;  // table start; earlier points decay exponentially
  std::vector<double> coef;  // 2 w_k A_k beta_k c lambda^-3, k = 0..K
  std::vector<UniformTable> T;
  std::vector<double> m;
};

PsiPairing psi_pairing(const ModeTable& table, double lambda) {
  PsiPairing out;
  out.lambda = lambda;
  const double sigma = table.sigma(), R = table.theta.effective_radius();
  const double l2 = lambda * lambda;
  const double h = sigma / 8.0;
  out.s0 = -l2 - R * sigma;
  const double s_max = l2 + R * sigma;
  const double u_lo = out.s0 - R * sigma;
  const auto nu = static_cast<std::size_t>(std::ceil((l2 - u_lo) / h)) + 1;
  const auto ns = static_cast<std::size_t>(std::ceil((s_max - out.s0) / h)) + 1;
  const auto taps = static_cast<long>(std::ceil(R * sigma / h));
  std::vector<double> bvals(nu), gw(static_cast<std::size_t>(2 * taps + 1));
  for (std::size_t i = 0; i < nu; ++i) bvals[i] = TestFunction::profile((u_lo + h * static_cast<double>(i)) / l2);
  for (long d = -taps; d <= taps; ++d)
    gw[static_cast<std::size_t>(d + taps)] = h * table.theta.time_profile(static_cast<double>(d) * h / sigma);
  const std::size_t nk = static_cast<std::size_t>(table.K) + 1;
  out.coef.assign(nk, 0.0);
  out.T.resize(nk);
  out.m = table.m;
  const double c = TestFunction::norm_constant() / (l2 * lambda);
  std::vector<double> B(nu);
  for (std::size_t k = 1; k < nk; ++k) {
    const double w = table.wavenumber(static_cast<long>(k));
    out.coef[k] = 2.0 * w * table.A[k] * testfn_space_coefficient(lambda, static_cast<long>(k)) * c;
    const double a = table.m[k] * h;
    const double decay = std::exp(-a), w_here = h * phi2(a), w_next = h * (phi1(a) - phi2(a));
    B[nu - 1] = 0.0;
    for (std::size_t i = nu - 1; i-- > 0;) B[i] = decay * B[i + 1] + w_here * bvals[i] + w_next * bvals[i + 1];
    UniformTable& t = out.T[k];
    t.x0 = out.s0;
    t.h = h;
    t.y.assign(ns, 0.0);
    const auto offset = static_cast<long>(std::llround((out.s0 - u_lo) / h));
    for (std::size_t i = 0; i < ns; ++i) {
      double sum = 0.0;
      for (long d = -taps; d <= taps; ++d) {
        const long u = offset + static_cast<long>(i) + d;
        if (u >= 0 && u < static_cast<long>(nu)) sum += gw[static_cast<std::size_t>(d + taps)] * B[static_cast<std::size_t>(u)];
      }
      t.y[i] = sum;
    }
  }
  return out;
}

double psi_point_pairing(const PsiPairing& pp, const Point& p) {
  const double ang = 2.0 * std::numbers::pi * p.x;
  const double s1 = std::sin(ang), c1 = std::cos(ang);
  double sk = 0.0, ck = 1.0, sum = 0.0;
  const std::size_t nk = pp.coef.size();
  const bool old = p.t < pp.s0;
  for (std::size_t k = 1; k < nk; ++k) {
    const double sn = sk * c1 + ck * s1;
    ck = ck * c1 - sk * s1;
    sk = sn;
    double tk;
    if (old) {
      const double z = pp.m[k] * (pp.s0 - p.t);
      if (z > 40.0) break;
      tk = pp.T[k].y.front() * std::exp(-z);
    } else {
      tk = pp.T[k](p.t);
    }
    sum += pp.coef[k] * sk * tk;
  }
  return sum;
}

// Separable tables for the noise pairing: U(t_p) and V(x_p) with
// <xi, phi^lambda> = sum_p amp norm c lambda^-3 U(t_p) V(x_p) - amp int phi.
struct NoisePairing {
  double scale = 0.0;
  double compensator = 0.0;
  UniformTable U, V;
  double x_radius = 0.0;
};

NoisePairing noise_pairing(const Mollifier& theta, const Frame& frame, double lambda) {
  NoisePairing out;
  const double sigma = frame.time_scale, xs = frame.space_scale, R = theta.effective_radius();
  const double l2 = lambda * lambda;
  const TestFunction tf{lambda, 0.0, 0.0};
  out.scale = frame.amplitude * theta.norm * TestFunction::norm_constant() / (l2 * lambda);
  out.compensator = frame.amplitude * tf.integral();
  auto table = [&](double half, double width, double scale_, auto&& prof) {
    UniformTable t;
    t.h = width / 8.0;
    t.x0 = -half - R * width;
    const auto n = static_cast<std::size_t>(std::ceil(2.0 * (half + R * width) / t.h)) + 1;
    t.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double c = t.x0 + t.h * static_cast<double>(i);
      const double lo = std::max(-half, c - R * width), hi = std::min(half, c + R * width);
      const auto panels = static_cast<std::size_t>(std::ceil((hi - lo) / (0.5 * width))) + 1;
      t.y[i] = composite_gauss([&](double u) { return TestFunction::profile(u / scale_) * prof((u - c) / width); }, lo, hi,
                               panels);
    }
    return t;
  };
  out.U = table(l2, sigma, l2, [&](double v) { return theta.time_profile(v); });
  out.V = table(lambda, xs, lambda, [&](double v) { return theta.space_profile(v); });
  out.x_radius = lambda + R * xs;
  return out;
}

double noise_point_pairing(const NoisePairing& np, const Point& p, double period) {
  const double u = np.U(p.t);
  if (u == 0.0) return 0.0;
  return np.scale * u * np.V(wrap_half(p.x, period));
}

double table_square_integral(const UniformTable& t) {
  double s = 0.0;
  for (double v : t.y) s += v * v;
  return s * t.h;
}

}  // namespace

std::vector<std::vector<double>> linear_pairings(LinearObject kind, const PolynomialSmoothing& q,
                                                 const Mollifier& theta, double eps,
                                                 const std::vector<double>& lambdas, std::size_t replicas,
                                                 std::uint64_t seed) {
  if (lambdas.empty()) throw LabError(ErrorKind::InvalidArgument, "linear_pairings: empty ladder");
  const Frame frame = Frame::macro(eps);
  const double lmax = *std::max_element(lambdas.begin(), lambdas.end());
  const double R = theta.effective_radius();
  std::vector<std::vector<double>> samples(lambdas.size(), std::vector<double>(replicas));
  if (kind == LinearObject::Noise) {
    std::vector<NoisePairing> np;
    for (double l : lambdas) np.push_back(noise_pairing(theta, frame, l));
    const double edge = R * frame.time_scale;
    const Box box{-lmax * lmax - edge, lmax * lmax + edge, 1.0};
    const auto vals = map_replicas<std::vector<double>>(replicas, [&](std::size_t r) {
      const auto cloud = sample_cloud(box, frame.intensity(), derive_seed(seed, "noise-pairing", r));
      std::vector<double> v(lambdas.size());
      for (std::size_t i = 0; i < lambdas.size(); ++i) {
        double s = -np[i].compensator;
        for (const auto& p : cloud.points) s += noise_point_pairing(np[i], p, 1.0);
        v[i] = s;
      }
      return v;
    });
    for (std::size_t r = 0; r < replicas; ++r)
      for (std::size_t i = 0; i < lambdas.size(); ++i) samples[i][r] = vals[r][i];
    return samples;
  }
  const ModeTable table = ModeTable::build(q, theta, frame);
  std::vector<PsiPairing> pp;
  for (double l : lambdas) pp.push_back(psi_pairing(table, l));
  double s_lo = 0.0;
  for (const auto& x : pp) s_lo = std::min(s_lo, x.s0 - 40.0 / table.m[1]);
  const Box box{s_lo, lmax * lmax + R * table.sigma(), 1.0};
  const auto vals = map_replicas<std::vector<double>>(replicas, [&](std::size_t r) {
    const auto cloud = sample_cloud(box, frame.intensity(), derive_seed(seed, "psi-pairing", r));
    std::vector<double> v(lambdas.size(), 0.0);
    for (std::size_t i = 0; i < lambdas.size(); ++i)
      for (const auto& p : cloud.points) v[i] += psi_point_pairing(pp[i], p);
    return v;
  });
  for (std::size_t r = 0; r < replicas; ++r)
    for (std::size_t i = 0; i < lambdas.size(); ++i) samples[i][r] = vals[r][i];
  return samples;
}

double linear_pairing(LinearObject kind, const PolynomialSmoothing& q, const Mollifier& theta, double eps,
                      double lambda, const PointCloud& cloud) {
  const Frame frame = Frame::macro(eps);
  double s = 0.0;
  if (kind == LinearObject::Noise) {
    const auto np = noise_pairing(theta, frame, lambda);
    s = -np.compensator;
    for (const auto& p : cloud.points) s += noise_point_pairing(np, p, 1.0);
    return s;
  }
  const auto pp = psi_pairing(ModeTable::build(q, theta, frame), lambda);
  for (const auto& p : cloud.points) s += psi_point_pairing(pp, p);
  return s;
}

double linear_pairing_variance(LinearObject kind, const PolynomialSmoothing& q, const Mollifier& theta, double eps,
                               double lambda) {
  const Frame frame = Frame::macro(eps);
  if (kind == LinearObject::Noise) {
    const auto np = noise_pairing(theta, frame, lambda);
    // V is tabulated on the line; the torus integral is the same while the support fits.
    return frame.intensity() * np.scale * np.scale * table_square_integral(np.U) * table_square_integral(np.V);
  }
  const ModeTable table = ModeTable::build(q, theta, frame);
  const auto pp = psi_pairing(table, lambda);
  double total = 0.0;
  for (std::size_t k = 1; k < pp.coef.size(); ++k) {
    const double t0 = pp.T[k].y.front();
    const double s2 = table_square_integral(pp.T[k]) + t0 * t0 / (2.0 * table.m[k]);
    total += 0.5 * pp.coef[k] * pp.coef[k] * s2;
  }
  return frame.intensity() * total;
}

std::vector<double> geometric_ladder(double lo, double hi, std::size_t n) {
  if (n < 2 || !(lo > 0.0) || !(hi > lo)) throw LabError(ErrorKind::InvalidArgument, "geometric_ladder: bad range");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
  return out;
}

namespace {

void check_ladder(const std::vector<double>& lambdas) {
  if (lambdas.size() < 4) throw LabError(ErrorKind::InsufficientLadder, "scaling needs at least 4 lambdas");
  const double r0 = lambdas[1] / lambdas[0];
  if (!(r0 > 1.0)) throw LabError(ErrorKind::InsufficientLadder, "lambda ladder must increase");
  for (std::size_t i = 1; i < lambdas.size(); ++i)
    if (!(lambdas[i] > 0.0) || std::fabs(lambdas[i] / lambdas[i - 1] / r0 - 1.0) > 1e-6)
      throw LabError(ErrorKind::InsufficientLadder, "lambda ladder is not geometric");
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

ScalingReport scaling_from_samples(const std::string& tag, double homogeneity, const std::vector<double>& lambdas,
                                   const std::vector<std::vector<double>>& samples, int p, std::uint64_t seed,
                                   double tolerance) {
  check_ladder(lambdas);
  if (p < 2 || p % 2 != 0) throw LabError(ErrorKind::InvalidArgument, "scaling: p must be an even integer");
  if (samples.size() != lambdas.size() || samples.front().size() < 2)
    throw LabError(ErrorKind::InvalidArgument, "scaling: samples do not match the ladder");
  const std::size_t n = samples.front().size();
  ScalingReport rep;
  rep.tag = tag;
  rep.p = p;
  rep.target = homogeneity;
  rep.tolerance = tolerance;
  std::vector<double> lx(lambdas.size()), ly(lambdas.size());
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    std::vector<double> pw(n);
    for (std::size_t r = 0; r < n; ++r) pw[r] = std::pow(std::fabs(samples[i][r]), p);
    const auto me = mean_estimate(pw);
    const auto mm = mean_estimate(samples[i]);
    rep.rows.push_back({lambdas[i], me.mean, me.stderr_, mm.mean, mm.stderr_});
    lx[i] = std::log(lambdas[i]);
    ly[i] = std::log(me.mean);
  }
  const bool flat = std::all_of(rep.rows.begin(), rep.rows.end(), [&](const ScalingRow& r) {
    return std::fabs(r.moment - rep.rows.front().moment) <= 1e-12 * std::fabs(rep.rows.front().moment);
  });
  rep.slope = flat ? 0.0 : fit_slope(lx, ly) / p;
  CounterRng rng(seed);
  std::vector<double> boot;
  std::vector<std::size_t> idx(n);
  for (int b = 0; b < 200 && !flat; ++b) {
    for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
    std::vector<double> by(lambdas.size());
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      double s = 0.0;
      for (std::size_t r : idx) s += std::pow(std::fabs(samples[i][r]), p);
      by[i] = std::log(s / static_cast<double>(n));
    }
    boot.push_back(fit_slope(lx, by) / p);
  }
  rep.slope_stderr = boot.size() > 1 ? std::sqrt(variance(boot)) : 0.0;
  rep.ci_lo = rep.slope - 1.96 * rep.slope_stderr;
  rep.ci_hi = rep.slope + 1.96 * rep.slope_stderr;
  rep.pass = rep.slope >= homogeneity - tolerance;
  return rep;
}

namespace {

bool pure_quadratic(const Nonlinearity& f) {
  if (!f.polynomial() || f.even_poly.size() < 2 || f.even_poly[1] == 0.0) return false;
  for (std::size_t j = 0; j < f.even_poly.size(); ++j)
    if (j != 1 && f.even_poly[j] != 0.0) return false;
  return true;
}

}  // namespace

std::map<std::string, std::vector<std::vector<double>>> symbol_pairings(
    const std::vector<std::string>& tags, const Nonlinearity& f, const PolynomialSmoothing& q, const Mollifier& theta,
    double eps, const std::vector<double>& lambdas, std::size_t replicas, std::uint64_t seed, const RenormTable& renorm) {
  if (lambdas.empty()) throw LabError(ErrorKind::InvalidArgument, "symbol_pairings: empty ladder");
  const double lmax = *std::max_element(lambdas.begin(), lambdas.end());
  ObjectContext ctx{ModeTable::build(q, theta, Frame::macro(eps)), object_grid(eps, lmax)};
  const auto vals = map_replicas<std::vector<double>>(replicas, [&](std::size_t r) {
    const auto psi = realize_psi(ctx, derive_seed(seed, "scaling", r));
    const auto sym = build_symbols(tags, f, q, psi, renorm);
    std::vector<double> v;
    for (const auto& tag : tags)
      for (double l : lambdas) v.push_back(pair_testfn(sym.at(tag).field, TestFunction{l, 0.0, 0.0}));
    return v;
  });
  std::map<std::string, std::vector<std::vector<double>>> out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    auto& s = out[tags[i]];
    s.assign(lambdas.size(), std::vector<double>(replicas));
    for (std::size_t r = 0; r < replicas; ++r)
      for (std::size_t j = 0; j < lambdas.size(); ++j) s[j][r] = vals[r][i * lambdas.size() + j];
  }
  return out;
}

ScalingReport scaling_exponent(const ScalingRequest& req, const Nonlinearity& f, const PolynomialSmoothing& q,
                               const Mollifier& theta, const RenormTable* renorm) {
  check_ladder(req.lambdas);
  std::vector<std::vector<double>> samples;
  double target = 0.0;
  if (req.tag == "xi") {
    target = -1.5;
    samples = linear_pairings(LinearObject::Noise, q, theta, req.eps, req.lambdas, req.replicas, req.seed);
  } else if (req.tag == "1'" && pure_quadratic(f)) {
    target = symbol_id(req.tag).homogeneity;
    samples = linear_pairings(LinearObject::Psi, q, theta, req.eps, req.lambdas, req.replicas, req.seed);
  } else {
    target = symbol_id(req.tag).homogeneity;
    if (renorm == nullptr) throw LabError(ErrorKind::MissingConstant, "scaling of '" + req.tag + "' needs a renormalization table");
    samples = symbol_pairings({req.tag}, f, q, theta, req.eps, req.lambdas, req.replicas, req.seed, *renorm).at(req.tag);
  }
  return scaling_from_samples(req.tag, target, req.lambdas, samples, req.p, derive_seed(req.seed, "scaling/bootstrap", 0),
                              req.tolerance);
}

}  // namespace kpzlab
