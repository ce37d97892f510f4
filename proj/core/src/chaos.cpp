#include "kpzlab/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "kpzlab/error.hpp"
#include "kpzlab/parallel.hpp"
#include "kpzlab/rng.hpp"
#include "kpzlab/stats.hpp"

namespace kpzlab {

namespace {

std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

void unflatten(std::size_t flat, std::size_t cells, int n, std::vector<std::size_t>& out) {
  out.resize(static_cast<std::size_t>(n));
  for (int j = n - 1; j >= 0; --j) {
    out[static_cast<std::size_t>(j)] = flat % cells;
    flat /= cells;
  }
}

// Marginal tables h_k(c_1..c_k) = sum over the remaining n-k cells of g times mu_cell^{n-k}.
struct PreparedKernel {
  int order = 0;
  std::size_t cells = 0;
  CellDomain domain;
  std::vector<std::vector<double>> marginals;  // index k = 0..n

  explicit PreparedKernel(const ChaosKernel& g) : order(g.order), cells(g.domain.cells()), domain(g.domain) {
    const double mu = g.cell_measure();
    marginals.resize(static_cast<std::size_t>(order) + 1);
    marginals[static_cast<std::size_t>(order)] = g.values;
    for (int k = order - 1; k >= 0; --k) {
      const auto& up = marginals[static_cast<std::size_t>(k) + 1];
      std::vector<double> h(ipow(cells, k), 0.0);
      for (std::size_t i = 0; i < h.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cells; ++j) s += up[i * cells + j];
        h[i] = s * mu;
      }
      marginals[static_cast<std::size_t>(k)] = std::move(h);
    }
  }

  double operator()(std::span<const Point> cloud) const {
    if (order >= 2 && cloud.size() > 200)
      throw LabError(ErrorKind::BudgetExceeded, "wiener_ito: clouds above 200 points are not enumerated for n >= 2");
    // occupied cells and counts
    std::vector<std::size_t> occ;
    std::vector<long> count(cells, 0);
    for (const auto& p : cloud) {
      const std::size_t c = domain.cell_of(p);
      if (count[c]++ == 0) occ.push_back(c);
    }
    std::sort(occ.begin(), occ.end());
    double total = 0.0;
    for (int k = 0; k <= order; ++k) {
      const auto& h = marginals[static_cast<std::size_t>(k)];
      double s = 0.0;
      if (k == 0) {
        s = h[0];
      } else {
        // Sum over ordered tuples of distinct points, grouped by cell: each step picks a cell
        // with remaining points and multiplies by how many are left.
        std::vector<long> rem = count;
        std::function<void(int, std::size_t, double)> rec = [&](int depth, std::size_t idx, double w) {
          if (depth == k) {
            s += w * h[idx];
            return;
          }
          for (std::size_t c : occ) {
            if (rem[c] == 0) continue;
            const double ww = w * static_cast<double>(rem[c]);
            --rem[c];
            rec(depth + 1, idx * cells + c, ww);
            ++rem[c];
          }
        };
        rec(0, 0, 1.0);
      }
      const double sign = ((order - k) % 2 == 0) ? 1.0 : -1.0;
      total += sign * binomial(order, k) * s;
    }
    return total;
  }
};

}  // namespace

Point CellDomain::center(std::size_t c) const {
  const std::size_t it = c / static_cast<std::size_t>(nx);
  const std::size_t ix = c % static_cast<std::size_t>(nx);
  const double ht = (box.t_hi - box.t_lo) / nt;
  const double hx = box.period / nx;
  return {box.t_lo + (static_cast<double>(it) + 0.5) * ht, (static_cast<double>(ix) + 0.5) * hx};
}

std::size_t CellDomain::cell_of(const Point& p) const {
  const double ht = (box.t_hi - box.t_lo) / nt;
  const double hx = box.period / nx;
  auto it = static_cast<long>(std::floor((p.t - box.t_lo) / ht));
  double x = std::fmod(p.x, box.period);
  if (x < 0) x += box.period;
  auto ix = static_cast<long>(std::floor(x / hx));
  it = std::clamp(it, 0L, static_cast<long>(nt) - 1);
  ix = std::clamp(ix, 0L, static_cast<long>(nx) - 1);
  return static_cast<std::size_t>(it) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(ix);
}

ChaosKernel ChaosKernel::zeros(const CellDomain& domain, int order) {
  if (order < 0) throw LabError(ErrorKind::InvalidArgument, "ChaosKernel: negative order");
  ChaosKernel g;
  g.order = order;
  g.domain = domain;
  g.values.assign(ipow(domain.cells(), order), 0.0);
  return g;
}

ChaosKernel ChaosKernel::from_function(const CellDomain& domain, int order,
                                       const std::function<double(std::span<const std::size_t>)>& f) {
  ChaosKernel g = zeros(domain, order);
  std::vector<std::size_t> idx;
  for (std::size_t flat = 0; flat < g.values.size(); ++flat) {
    unflatten(flat, domain.cells(), order, idx);
    g.values[flat] = f(idx);
  }
  return g;
}

std::size_t ChaosKernel::index(std::span<const std::size_t> c) const {
  const std::size_t n = domain.cells();
  std::size_t flat = 0;
  for (std::size_t v : c) {
    if (v >= n) throw LabError(ErrorKind::InvalidArgument, "ChaosKernel: cell index out of range");
    flat = flat * n + v;
  }
  return flat;
}

double ChaosKernel::asymmetry() const {
  if (order < 2) return 0.0;
  double worst = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t flat = 0; flat < values.size(); ++flat) {
    unflatten(flat, domain.cells(), order, idx);
    for (int j = 0; j + 1 < order; ++j) {
      std::swap(idx[static_cast<std::size_t>(j)], idx[static_cast<std::size_t>(j) + 1]);
      worst = std::max(worst, std::abs(values[flat] - at(idx)));
      std::swap(idx[static_cast<std::size_t>(j)], idx[static_cast<std::size_t>(j) + 1]);
    }
  }
  return worst;
}

double ChaosKernel::l1_norm() const {
  double s = 0.0;
  for (double v : values) s += std::abs(v);
  return s * std::pow(cell_measure(), order);
}

double ChaosKernel::l2_norm_sq() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return s * std::pow(cell_measure(), order);
}

double difference_op(const Functional& F, std::span<const Point> cloud, std::span<const Point> us) {
  const std::size_t n = us.size();
  if (n == 0) return F(cloud);
  std::vector<Point> buf(cloud.begin(), cloud.end());
  const std::size_t base = buf.size();
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    buf.resize(base);
    int bits = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (mask & (std::uint64_t{1} << j)) {
        buf.push_back(us[j]);
        ++bits;
      }
    const double sign = ((static_cast<int>(n) - bits) % 2 == 0) ? 1.0 : -1.0;
    total += sign * F(buf);
  }
  return total;
}

double wiener_ito(const ChaosKernel& g, std::span<const Point> cloud) {
  if (g.order < 1) throw LabError(ErrorKind::InvalidArgument, "wiener_ito: order must be >= 1");
  return PreparedKernel(g)(cloud);
}

PartitionSet enumerate_partitions(const std::vector<int>& group_sizes) {
  PartitionSet out;
  out.group_sizes = group_sizes;
  std::vector<int> group_of;
  for (std::size_t i = 0; i < group_sizes.size(); ++i)
    for (int a = 0; a < group_sizes[i]; ++a) group_of.push_back(static_cast<int>(i));
  const int total = static_cast<int>(group_of.size());
  std::vector<std::vector<int>> blocks;
  std::function<void(int)> rec = [&](int arg) {
    if (arg == total) {
      for (const auto& b : blocks)
        if (b.size() < 2) return;
      out.partitions.push_back(blocks);
      return;
    }
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
      bool clash = false;
      for (int other : blocks[bi])
        if (group_of[static_cast<std::size_t>(other)] == group_of[static_cast<std::size_t>(arg)]) clash = true;
      if (clash) continue;
      blocks[bi].push_back(arg);
      rec(arg + 1);
      blocks[bi].pop_back();
    }
    blocks.push_back({arg});
    rec(arg + 1);
    blocks.pop_back();
  };
  rec(0);
  return out;
}

double product_moment(const std::vector<ChaosKernel>& kernels) {
  std::vector<int> sizes;
  int total = 0;
  for (const auto& k : kernels) {
    if (k.order < 1) throw LabError(ErrorKind::InvalidArgument, "product_moment: kernel orders must be >= 1");
    sizes.push_back(k.order);
    total += k.order;
  }
  if (total > 8) throw LabError(ErrorKind::BudgetExceeded, "product_moment: sum of orders exceeds 8");
  if (kernels.empty()) return 1.0;
  const CellDomain& dom = kernels.front().domain;
  const std::size_t cells = dom.cells();
  const double mu = dom.cell_measure();
  const PartitionSet ps = enumerate_partitions(sizes);

  double result = 0.0;
  std::vector<std::size_t> arg_block(static_cast<std::size_t>(total));
  for (const auto& sigma : ps.partitions) {
    for (std::size_t b = 0; b < sigma.size(); ++b)
      for (int a : sigma[b]) arg_block[static_cast<std::size_t>(a)] = b;
    const std::size_t r = sigma.size();
    const std::size_t combos = ipow(cells, static_cast<int>(r));
    std::vector<std::size_t> bc;
    std::vector<std::size_t> args;
    double s = 0.0;
    for (std::size_t flat = 0; flat < combos; ++flat) {
      unflatten(flat, cells, static_cast<int>(r), bc);
      double prod = 1.0;
      std::size_t a = 0;
      for (const auto& k : kernels) {
        args.resize(static_cast<std::size_t>(k.order));
        for (int j = 0; j < k.order; ++j) args[static_cast<std::size_t>(j)] = bc[arg_block[a++]];
        prod *= k.at(args);
        if (prod == 0.0) break;
      }
      s += prod;
    }
    result += s * std::pow(mu, static_cast<double>(r));
  }
  return result;
}

PointCloud sample_domain(const CellDomain& domain, std::uint64_t seed) {
  return sample_cloud(domain.box, domain.intensity, seed);
}

ChaosExpansion chaos_expand(const Functional& F, int max_order, const CellDomain& domain, std::size_t replicas,
                            std::uint64_t seed) {
  if (max_order < 0 || max_order > 3) throw LabError(ErrorKind::InvalidArgument, "chaos_expand: order must be in [0, 3]");
  if (replicas < 2) throw LabError(ErrorKind::InvalidArgument, "chaos_expand: need at least 2 replicas");
  const std::size_t cells = domain.cells();
  std::vector<Point> centers(cells);
  for (std::size_t c = 0; c < cells; ++c) centers[c] = domain.center(c);

  // Non-decreasing cell tuples per order.
  std::vector<std::vector<std::vector<std::size_t>>> tuples(static_cast<std::size_t>(max_order) + 1);
  for (int n = 1; n <= max_order; ++n) {
    std::vector<std::size_t> cur;
    std::function<void(std::size_t)> rec = [&](std::size_t lo) {
      if (static_cast<int>(cur.size()) == n) {
        tuples[static_cast<std::size_t>(n)].push_back(cur);
        return;
      }
      for (std::size_t c = lo; c < cells; ++c) {
        cur.push_back(c);
        rec(c);
        cur.pop_back();
      }
    };
    rec(0);
  }
  std::size_t width = 1;
  for (int n = 1; n <= max_order; ++n) width += tuples[static_cast<std::size_t>(n)].size();

  auto rows = map_replicas<std::vector<double>>(replicas, [&](std::size_t r) {
    const PointCloud cloud = sample_domain(domain, derive_seed(seed, "chaos_expand", r));
    std::vector<double> row;
    row.reserve(width);
    row.push_back(F(cloud.points));
    std::vector<Point> us;
    for (int n = 1; n <= max_order; ++n)
      for (const auto& t : tuples[static_cast<std::size_t>(n)]) {
        us.clear();
        for (std::size_t c : t) us.push_back(centers[c]);
        row.push_back(difference_op(F, cloud.points, us));
      }
    return row;
  });

  std::vector<double> col(replicas);
  auto column = [&](std::size_t j) {
    for (std::size_t r = 0; r < replicas; ++r) col[r] = rows[r][j];
    return mean_estimate(col);
  };

  ChaosExpansion out;
  const auto e0 = column(0);
  out.f0 = e0.mean;
  out.f0_stderr = e0.stderr_;
  std::size_t j = 1;
  for (int n = 1; n <= max_order; ++n) {
    ChaosKernel f = ChaosKernel::zeros(domain, n);
    ChaosKernel se = ChaosKernel::zeros(domain, n);
    const double nf = factorial(n);
    for (const auto& t : tuples[static_cast<std::size_t>(n)]) {
      const auto e = column(j++);
      std::vector<std::size_t> perm = t;
      do {
        f.at(perm) = e.mean / nf;
        se.at(perm) = e.stderr_ / nf;
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
    out.kernels.push_back(std::move(f));
    out.stderrs.push_back(std::move(se));
  }

  auto prepared = std::make_shared<std::vector<PreparedKernel>>();
  for (int n = 1; n < max_order; ++n) prepared->emplace_back(out.kernels[static_cast<std::size_t>(n) - 1]);
  const double f0 = out.f0;
  out.truncation.descriptor = "T" + std::to_string(max_order) + "(" + F.descriptor + ")";
  out.truncation.evaluator = [F, f0, prepared, max_order](std::span<const Point> pts) {
    double v = F(pts);
    if (max_order > 0) v -= f0;
    for (const auto& pk : *prepared) v -= pk(pts);
    return v;
  };
  return out;
}

std::complex<double> char_function(const ChaosKernel& g, double v) {
  if (g.order != 1) throw LabError(ErrorKind::InvalidArgument, "char_function: kernel must have order 1");
  const double mu = g.cell_measure();
  std::complex<double> s = 0.0;
  for (double gv : g.values) {
    const double a = v * gv;
    // e^{ia} - ia - 1 with a series for small a to avoid cancellation
    std::complex<double> term;
    if (std::abs(a) < 1e-3)
      term = {-a * a / 2.0 + a * a * a * a / 24.0, -a * a * a / 6.0};
    else
      term = {std::cos(a) - 1.0, std::sin(a) - a};
    s += term;
  }
  return std::exp(s * mu);
}

GapReport spectral_gap_report(const std::vector<Functional>& family, double p, const CellDomain& domain,
                              std::size_t replicas, std::uint64_t seed) {
  if (p < 2.0) throw LabError(ErrorKind::InvalidArgument, "spectral_gap_report: p must be >= 2");
  if (replicas < 2) throw LabError(ErrorKind::InvalidArgument, "spectral_gap_report: need at least 2 replicas");
  const std::size_t cells = domain.cells();
  const double mu = domain.cell_measure();
  GapReport report;
  for (std::size_t fi = 0; fi < family.size(); ++fi) {
    const Functional& F = family[fi];
    // per replica: F, then D_c F for each cell centre
    auto rows = map_replicas<std::vector<double>>(replicas, [&](std::size_t r) {
      const PointCloud cloud = sample_domain(domain, derive_seed(seed, "spectral_gap/" + std::to_string(fi), r));
      std::vector<double> row(cells + 1);
      const double f = F(cloud.points);
      row[0] = f;
      std::vector<Point> buf = cloud.points;
      for (std::size_t c = 0; c < cells; ++c) {
        buf.push_back(domain.center(c));
        row[c + 1] = F(buf) - f;
        buf.pop_back();
      }
      return row;
    });
    const double R = static_cast<double>(replicas);
    double mf = 0.0;
    for (const auto& row : rows) mf += row[0];
    mf /= R;
    std::vector<double> psi(replicas);
    double lhs = 0.0, energy = 0.0, fp = 0.0;
    std::vector<double> dp(cells, 0.0);
    for (std::size_t r = 0; r < replicas; ++r) {
      const auto& row = rows[r];
      double a = 0.0;
      for (std::size_t c = 0; c < cells; ++c) {
        a += row[c + 1] * row[c + 1];
        dp[c] += std::pow(std::abs(row[c + 1]), p);
      }
      a *= mu;
      lhs += row[0] * row[0];
      energy += a;
      fp += std::pow(std::abs(row[0]), p);
      psi[r] = a - row[0] * row[0] + 2.0 * mf * (row[0] - mf);
    }
    lhs /= R;
    energy /= R;
    fp /= R;
    GapRow g;
    g.functional_id = F.descriptor.empty() ? "F" + std::to_string(fi) : F.descriptor;
    g.p = p;
    g.lhs = lhs;
    g.rhs = mf * mf + energy;
    g.slack = g.rhs - g.lhs;
    g.stderr_ = std::sqrt(variance(psi) / R);
    // Sigma^{2,p}_u L^p_omega: inner L^p over omega per cell, outer L^q over u for q in {2, p}
    double mixed = 0.0;
    for (double q : {2.0, p}) {
      double s = 0.0;
      for (std::size_t c = 0; c < cells; ++c) s += std::pow(std::pow(dp[c] / R, 1.0 / p), q) * mu;
      mixed += std::pow(s, 1.0 / q);
    }
    const double denom = std::abs(mf) + mixed;
    g.fitted_c = denom > 0.0 ? std::pow(fp, 1.0 / p) / denom : 0.0;
    report.family_c = std::max(report.family_c, g.fitted_c);
    report.rows.push_back(g);
  }
  return report;
}

GapRow exact_window_gap(const std::function<double(double)>& f, double m, const std::string& id) {
  if (!(m > 0.0)) throw LabError(ErrorKind::NotPositive, "exact_window_gap: window measure must be positive");
  // Sum the pmf until the remaining mass is negligible.
  double ef = 0.0, ef2 = 0.0, ed2 = 0.0, mass = 0.0;
  double pk = std::exp(-m);
  for (int k = 0; k < 100000; ++k) {
    const double fk = f(k);
    const double d = f(k + 1.0) - fk;
    ef += pk * fk;
    ef2 += pk * fk * fk;
    ed2 += pk * d * d;
    mass += pk;
    if (k > m && 1.0 - mass < 1e-17 && pk < 1e-300) break;
    if (k > m + 40.0 * std::sqrt(m) + 60.0) break;
    pk *= m / (k + 1.0);
  }
  GapRow g;
  g.functional_id = id;
  g.lhs = ef2;
  g.rhs = ef * ef + m * ed2;
  g.slack = g.rhs - g.lhs;
  return g;
}

}  // namespace kpzlab
