#include "kpzlab/kernel_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

#include <boost/math/quadrature/gauss.hpp>

#include "kpzlab/error.hpp"
#include "kpzlab/field.hpp"
#include "kpzlab/spectral_noise.hpp"

namespace kpzlab {

namespace {

struct Sample {
  double t;
  double x;
};

// Points with parabolic radius r on a geometric ladder in [r_lo, 1] and the radius split
// between sqrt|t| and |x|.  x is kept in [0, 1/2] (kernels are even in x).
std::vector<Sample> sweep(double r_lo, int radial, int angular, bool negative_time) {
  std::vector<Sample> pts;
  for (int i = 0; i < radial; ++i) {
    const double r = r_lo * std::pow(1.0 / r_lo, static_cast<double>(i) / (radial - 1));
    for (int j = 0; j <= angular; ++j) {
      const double s = static_cast<double>(j) / angular;
      const double st = s * r;
      const double x = (1.0 - s) * r;
      if (x > 0.5) continue;
      if (st > 0.0) pts.push_back({st * st, x});
      if (negative_time && st > 0.0) pts.push_back({-st * st, x});
      if (st == 0.0) pts.push_back({0.0, x});
    }
  }
  return pts;
}

void track(BoundRow& row, double ratio, double t, double x) {
  if (std::isfinite(ratio) && ratio > row.sup_ratio) {
    row.sup_ratio = ratio;
    row.argmax_t = t;
    row.argmax_x = x;
  } else if (!std::isfinite(ratio)) {
    row.sup_ratio = std::numeric_limits<double>::infinity();
    row.argmax_t = t;
    row.argmax_x = x;
  }
}

// Panels on [a, b] refined geometrically toward each breakpoint.
std::vector<double> graded_nodes(double a, double b, std::vector<double> breaks, int levels) {
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  std::set<double> nodes;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double u = breaks[i];
    const double v = breaks[i + 1];
    if (v <= a || u >= b) continue;
    const double mid = 0.5 * (u + v);
    nodes.insert(u);
    nodes.insert(v);
    nodes.insert(mid);
    double h = 0.5 * (v - u);
    for (int l = 0; l < levels; ++l) {
      h *= 0.5;
      nodes.insert(u + h);
      nodes.insert(v - h);
    }
  }
  return {nodes.begin(), nodes.end()};
}

}  // namespace

double parabolic_norm(double t, double x) {
  double y = std::fmod(x, 1.0);
  if (y >= 0.5) y -= 1.0;
  if (y < -0.5) y += 1.0;
  return std::sqrt(std::abs(t)) + std::abs(y);
}

double convolution_integral(double alpha, double beta, double eps, double t, double x, bool primed) {
  using GL = boost::math::quadrature::gauss<double, 10>;
  const double horizon = 1e4;
  // time axis: graded toward 0 and t, geometric panels out to the horizon
  std::vector<double> tn = graded_nodes(-1.0, 1.0, {0.0, t}, 40);
  for (double s = 2.0; s <= horizon; s *= 2.0) {
    tn.push_back(s);
    tn.push_back(-s);
  }
  std::sort(tn.begin(), tn.end());
  tn.erase(std::unique(tn.begin(), tn.end()), tn.end());
  const std::vector<double> xn = graded_nodes(-0.5, 0.5, {0.0, x}, 40);

  auto rule = [](double lo, double hi, auto&& f) { return GL::integrate(f, lo, hi); };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < tn.size(); ++i) {
    total += rule(tn[i], tn[i + 1], [&](double s) {
      double inner = 0.0;
      for (std::size_t j = 0; j + 1 < xn.size(); ++j)
        inner += rule(xn[j], xn[j + 1], [&](double w) {
          const double d1 = parabolic_norm(t - s, x - w);
          const double d2 = parabolic_norm(s, w) + eps;
          return std::pow(d1, -alpha) * std::pow(d2, -beta);
        });
      return inner;
    });
  }
  // tail beyond the horizon, where both distances are ~ sqrt|s|
  const double g = 0.5 * (alpha + beta);
  total += 2.0 * std::pow(horizon, 1.0 - g) / (g - 1.0);
  if (primed) total *= std::pow(eps, beta - 3.0);
  return total;
}

double BoundReport::ladder_variation(const std::string& bound_id, double delta) const {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : rows)
    if (r.bound_id == bound_id && std::abs(r.delta - delta) < 1e-12) {
      lo = std::min(lo, r.sup_ratio);
      hi = std::max(hi, r.sup_ratio);
    }
  if (hi == 0.0) return 1.0;
  return hi / lo;
}

std::vector<std::string> BoundReport::bound_ids() const {
  std::vector<std::string> ids;
  for (const auto& r : rows)
    if (std::find(ids.begin(), ids.end(), r.bound_id) == ids.end()) ids.push_back(r.bound_id);
  return ids;
}

void BoundReport::write_csv(std::ostream& os) const {
  os << "bound_id,epsilon,delta,sup_ratio,argmax_point_t,argmax_point_x\n";
  os.precision(17);
  for (const auto& r : rows)
    os << r.bound_id << ',' << r.epsilon << ',' << r.delta << ',' << r.sup_ratio << ',' << r.argmax_t << ','
       << r.argmax_x << '\n';
}

BoundReport verify_kernel_bounds(const std::vector<MultiplierFamily>& ladder, const BoundSpec& spec) {
  if (ladder.empty()) throw LabError(ErrorKind::InvalidArgument, "verify_kernel_bounds: empty ladder");
  BoundReport report;
  for (const auto& fam : ladder) {
    const double eps = fam.epsilon();
    const PolynomialSmoothing& q = fam.smoothing();
    const double r_lo = eps > 0.0 ? eps / 4.0 : 1.0 / 64.0;
    const auto pts = sweep(r_lo, spec.radial, spec.angular, false);

    for (const auto& [m, l] : spec.derivatives) {
      BoundRow row{"singularity_m" + std::to_string(m) + "_l" + std::to_string(l), eps, 0.0, 0.0, 0.0, 0.0};
      for (const auto& p : pts) {
        const double r = parabolic_norm(p.t, p.x);
        if (m == 1 && r < spec.time_derivative_floor * eps) continue;
        const double v = std::abs(green_derivative(q, eps, p.t, p.x, m, l));
        track(row, v * std::pow(r, 2 * m + l + 1), p.t, p.x);
      }
      report.rows.push_back(row);
    }

    if (eps > 0.0) {
      const auto heat = PolynomialSmoothing::laplacian();
      for (double delta : spec.deltas) {
        BoundRow row{"difference_delta", eps, delta, 0.0, 0.0, 0.0};
        for (const auto& p : pts) {
          const double r = parabolic_norm(p.t, p.x);
          const double d = std::abs(green_derivative(q, eps, p.t, p.x, 0, 1) - green_derivative(heat, 0.0, p.t, p.x, 0, 1));
          track(row, d * std::pow(r, 2.0 + delta) / std::pow(eps, delta), p.t, p.x);
        }
        report.rows.push_back(row);
      }

      // (P^theta)'(x, u) with the translate at the origin; depends only on x - eps u
      const ModeTable table = ModeTable::build(q, spec.theta, Frame::macro(eps));
      BoundRow row{"smeared_kernel", eps, 0.0, 0.0, 0.0, 0.0};
      auto lemma_pts = sweep(eps / 16.0, spec.radial, spec.angular, true);
      lemma_pts.push_back({0.0, 0.0});
      for (const auto& p : lemma_pts) {
        const double r = parabolic_norm(p.t, p.x);
        const double v = std::abs(psi_point_kernel(table, p.t, p.x, Point{0.0, 0.0}));
        track(row, v * (r + eps) * (r + eps) / std::pow(eps, 1.5), p.t, p.x);
      }
      report.rows.push_back(row);

      if (spec.convolution) {
        // alpha + beta > 3 with both below 3, and the eps-weighted version with beta > 3
        BoundRow c1{"convolution", eps, 0.0, 0.0, 0.0, 0.0};
        BoundRow c2{"convolution_weighted", eps, 0.0, 0.0, 0.0, 0.0};
        const double alpha = 2.0, beta = 2.0, beta2 = 4.0;
        for (int i = 0; i < 6; ++i) {
          const double r = (eps / 4.0) * std::pow(4.0 / eps * 0.5, i / 5.0);
          for (double s : {0.0, 0.5, 1.0}) {
            const double st = s * r, x = (1.0 - s) * r;
            if (x > 0.5) continue;
            const double pn = parabolic_norm(st * st, x) + eps;
            const double i1 = convolution_integral(alpha, beta, eps, st * st, x, false);
            track(c1, i1 * std::pow(pn, alpha + beta - 3.0), st * st, x);
            const double i2 = convolution_integral(alpha, beta2, eps, st * st, x, true);
            track(c2, i2 * std::pow(pn, alpha), st * st, x);
          }
        }
        report.rows.push_back(c1);
        report.rows.push_back(c2);
      }
    }
  }

  // growth along the ladder: compare the largest and smallest eps for each bound
  std::map<std::pair<std::string, double>, std::pair<const BoundRow*, const BoundRow*>> ends;
  for (const auto& r : report.rows) {
    auto& e = ends[{r.bound_id, r.delta}];
    if (!e.first || r.epsilon > e.first->epsilon) e.first = &r;
    if (!e.second || r.epsilon < e.second->epsilon) e.second = &r;
  }
  for (const auto& [key, e] : ends)
    if (e.first->sup_ratio > 0.0 && e.second->sup_ratio > 10.0 * e.first->sup_ratio)
      report.flagged.push_back(key.first + (key.second > 0 ? "@" + std::to_string(key.second) : ""));
  return report;
}

}  // namespace kpzlab
