#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "kpzlab/chaos.hpp"
#include "kpzlab/fields.hpp"
#include "kpzlab/harness.hpp"
#include "kpzlab/model_objects.hpp"
#include "kpzlab/rng.hpp"
#include "kpzlab/solver.hpp"
#include "kpzlab/stats.hpp"

using namespace kpzlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

const PolynomialSmoothing kQ = PolynomialSmoothing::validate({1.0, 1.0});
const Mollifier kTheta = Mollifier::gaussian();

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

RunConfig config(const std::string& kind) {
  RunConfig c;
  c.kind = kind;
  c.seed = 20260;
  return c;
}

Outcome coupling_exactness() {
  const auto f = Nonlinearity::preset("w2");
  double worst = 0.0, worst_se = 0.0;
  for (double eps : {0.2, 0.1, 0.05}) {
    const auto mc = coupling_mc(f, kQ, kTheta, eps, 1000, 1);
    worst = std::max({worst, std::fabs(mc.value - 1.0), std::fabs(coupling_quadrature(f, kQ, kTheta, eps).value - 1.0)});
    worst_se = std::max(worst_se, mc.stderr_);
  }
  const auto lim = coupling_limit(f, kQ, kTheta, {16.0, 32.0}, 1000, 2);
  worst = std::max(worst, std::fabs(lim.estimate.value - 1.0));
  worst_se = std::max(worst_se, lim.estimate.stderr_);
  return {worst < 1e-12 && worst_se == 0.0, "max |a - 1| = " + fmt(worst) + ", max stderr " + fmt(worst_se)};
}

Outcome coupling_oracle() {
  const double eps = 0.1;
  const auto w4 = Nonlinearity::preset("w4");
  const auto mc4 = coupling_mc(w4, kQ, kTheta, eps, 10000, 3);
  const double oracle4 = 6.0 * eps * psi_variance(ModeTable::build(kQ, kTheta, Frame::macro(eps)));
  const bool ok4 = std::fabs(mc4.value - oracle4) < 3.0 * mc4.stderr_;
  const auto cosf = Nonlinearity::preset("cos");
  const auto mcc = coupling_mc(cosf, kQ, kTheta, eps, 10000, 4);
  const double chf = coupling_quadrature(cosf, kQ, kTheta, eps).value;
  const bool okc = std::fabs(mcc.value - chf) < 3.0 * mcc.stderr_;
  return {ok4 && okc, "w4: mc " + fmt(mc4.value) + " +- " + fmt(mc4.stderr_) + " vs 6 eps Var " + fmt(oracle4) +
                          "; cos: mc " + fmt(mcc.value) + " +- " + fmt(mcc.stderr_) + " vs chf " + fmt(chf)};
}

Outcome from_record(const RunRecord& rec) {
  std::string failed;
  for (const auto& c : rec.criteria)
    if (!c.pass) failed += (failed.empty() ? "" : "; ") + c.name + " (" + c.detail + ")";
  return {rec.passed(), rec.passed() ? std::to_string(rec.criteria.size()) + " checks pass" : "failed: " + failed};
}

Outcome spectral_gap() {
  auto c = config("verify-sg");
  c.replicas = 4000;
  const auto rec = run_experiment(c);
  auto out = from_record(rec);
  out.detail += ", window lhs " + fmt(rec.metric("window_lhs")) + " rhs " + fmt(rec.metric("window_rhs")) +
                ", min slack/stderr " + fmt(rec.metric("min_slack_z"));
  return out;
}

Outcome chaos_identities() {
  CellDomain d;
  d.box = Box{0.0, 1.0, 1.0};
  d.nt = 4;
  d.nx = 4;
  d.intensity = 3.0;
  auto first = [&](double a, double b, double c) {
    return ChaosKernel::from_function(d, 1, [&, a, b, c](std::span<const std::size_t> cell) {
      const Point p = d.center(cell[0]);
      return a * std::sin(2.0 * M_PI * p.x) + b * std::cos(3.0 * p.t) + c;
    });
  };
  const auto f = first(1.0, 0.5, 0.2), g = first(-0.3, 1.0, 0.4), h = first(0.7, -0.6, 0.5);
  const auto f2 = ChaosKernel::from_function(d, 2, [&](std::span<const std::size_t> c) {
    const Point p = d.center(c[0]), q = d.center(c[1]);
    return std::cos(2.0 * M_PI * (p.x - q.x)) * std::exp(-(p.t + q.t));
  });
  const double mu = d.cell_measure();
  double fgh = 0.0, f2sq = 0.0;
  for (std::size_t c = 0; c < d.cells(); ++c) fgh += f.values[c] * g.values[c] * h.values[c] * mu;
  for (double v : f2.values) f2sq += v * v * mu * mu;
  const std::size_t R = 100000;
  std::vector<double> triple(R), iso(R), cross(R);
  for (std::size_t r = 0; r < R; ++r) {
    const auto cloud = sample_domain(d, derive_seed(5, "acceptance/chaos", r));
    const double a = wiener_ito(f, cloud.points), b = wiener_ito(g, cloud.points), c = wiener_ito(h, cloud.points);
    const double i2 = wiener_ito(f2, cloud.points);
    triple[r] = a * b * c;
    iso[r] = i2 * i2;
    cross[r] = a * i2;
  }
  const auto t = mean_estimate(triple), i = mean_estimate(iso), x = mean_estimate(cross);
  const bool ok_t = std::fabs(t.mean - fgh) < 3.0 * t.stderr_;
  const bool ok_i = std::fabs(i.mean - 2.0 * f2sq) < 3.0 * i.stderr_;
  const bool ok_x = std::fabs(x.mean) < 3.0 * x.stderr_;
  const bool ok_p = std::fabs(product_moment({f, g, h}) - fgh) < 1e-12 * std::max(1.0, std::fabs(fgh));
  return {ok_t && ok_i && ok_x && ok_p, "E I1I1I1 " + fmt(t.mean) + " +- " + fmt(t.stderr_) + " vs " + fmt(fgh) +
                                             "; E I2^2 " + fmt(i.mean) + " +- " + fmt(i.stderr_) + " vs " +
                                             fmt(2.0 * f2sq) + "; E I1 I2 " + fmt(x.mean) + " +- " + fmt(x.stderr_)};
}

Outcome kernel_bounds() {
  auto c = config("verify-kernels");
  c.eps = {0.2, 0.1, 0.05};
  return from_record(run_experiment(c));
}

Outcome homogeneity_scaling() {
  auto lin = config("scale-check");
  lin.f = "w2";
  lin.eps = {0.02};
  lin.replicas = 2000;
  lin.tags = {"xi", "1'"};
  lin.rungs = 4;
  const auto a = run_experiment(lin);
  const double s_xi = a.metric("slope[xi,p=2,eps=0.02]");
  const double s_psi = a.metric("slope[1',p=2,eps=0.02]");
  const bool ok_xi = std::fabs(s_xi + 1.5) <= 0.15;
  const bool ok_psi = std::fabs(s_psi + 0.5) <= 0.15;

  auto rec = config("scale-check");
  rec.f = "cos";
  rec.eps = {0.1};
  rec.replicas = 1000;
  rec.constant_replicas = 1000;
  rec.tags = table_tags();
  rec.lambdas = geometric_ladder(0.125, 0.25, 4);
  const auto b = run_experiment(rec);
  std::size_t zero = 0, bad = 0, expected = 0;
  std::string failed;
  for (const auto& t : table_tags()) expected += symbol_id(t).recentered ? 1 : 0;
  for (const auto& c : b.criteria)
    if (c.name.rfind("zero_mean", 0) == 0) {
      ++zero;
      if (!c.pass) {
        ++bad;
        failed += " " + c.name;
      }
    }
  return {ok_xi && ok_psi && bad == 0 && zero == expected,
          "xi slope " + fmt(s_xi) + " (target -1.5), Psi slope " + fmt(s_psi) + " (target -0.5), recentering " +
              std::to_string(zero - bad) + "/" + std::to_string(zero) + " zero-mean" + failed};
}

Outcome pipeline_equivalence() {
  const double eps = 0.5;
  std::string detail;
  bool ok = true;
  for (const char* name : {"w2", "cos"}) {
    auto c = SolverConfig::macro(eps, 1.0, kQ, Nonlinearity::preset(name));
    c.seed = 77;
    c.drift = 1.3;
    const auto cloud = solver_cloud(c);
    const auto macro = simulate_macro(c, cloud);
    const auto mc = micro_config(c);
    const auto micro = simulate(mc, map_cloud(cloud, c.frame, mc.frame));
    const auto h = rescale_micro(micro.h, eps, c.drift);
    double d = 0.0;
    for (std::size_t i = 0; i < h.values.size(); ++i) d = std::max(d, std::fabs(h.values[i] - macro.h.values[i]));
    const std::vector<double> last(macro.h.row(macro.h.nt - 1), macro.h.row(macro.h.nt - 1) + macro.h.nx);
    const double est = one_step_estimate(c, last);
    ok = ok && d < 2.0 * est;
    detail += std::string(detail.empty() ? "" : "; ") + name + ": sup diff " + fmt(d) + " vs 2 x " + fmt(est);
  }
  return {ok, detail};
}

Outcome universality() {
  std::string detail;
  bool ok = true;
  for (const char* name : {"w2", "cos"}) {
    auto c = config("compare");
    c.f = name;
    c.eps = {0.2, 0.1, 0.05};
    c.replicas = 500;
    c.reference_replicas = 5000;
    c.constant_replicas = 400;
    const auto rec = run_experiment(c);
    ok = ok && rec.passed();
    detail += std::string(detail.empty() ? "" : "; ") + name + " (a " + fmt(rec.metric("a")) + "): KS";
    for (double e : c.eps) {
      std::ostringstream key;
      key << "ks[eps=" << e << "]";
      detail += " " + fmt(rec.metric(key.str()));
    }
  }
  return {ok, detail};
}

Outcome determinism() {
  std::vector<RunConfig> runs;
  auto couple = config("couple");
  couple.f = "w4";
  couple.eps = {0.2, 0.1};
  couple.replicas = 2000;
  couple.coupling_replicas = 500;
  runs.push_back(couple);
  auto sim = config("simulate");
  sim.f = "cos";
  sim.eps = {0.2};
  sim.T = 0.25;
  sim.replicas = 6;
  sim.constant_replicas = 200;
  runs.push_back(sim);
  auto sg = config("verify-sg");
  sg.replicas = 500;
  runs.push_back(sg);
  auto sc = config("scale-check");
  sc.eps = {0.05};
  sc.lambdas = geometric_ladder(0.125, 0.25, 4);
  sc.replicas = 50;
  runs.push_back(sc);
  bool ok = true;
  std::string detail;
  for (const auto& c : runs) {
    setenv("KPZLAB_WORKERS", "1", 1);
    const auto d1 = run_experiment(c).summary_digest();
    const auto d2 = run_experiment(c).summary_digest();
    setenv("KPZLAB_WORKERS", "3", 1);
    const auto d3 = run_experiment(c).summary_digest();
    unsetenv("KPZLAB_WORKERS");
    const bool same = d1 == d2 && d1 == d3;
    ok = ok && same;
    detail += std::string(detail.empty() ? "" : "; ") + c.kind + (same ? " identical" : " DIFFERS") + " (" + d1.substr(0, 12) + ")";
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"coupling_exactness", coupling_exactness},
      {"coupling_oracle", coupling_oracle},
      {"spectral_gap", spectral_gap},
      {"chaos_identities", chaos_identities},
      {"kernel_bounds", kernel_bounds},
      {"homogeneity_scaling", homogeneity_scaling},
      {"pipeline_equivalence", pipeline_equivalence},
      {"universality", universality},
      {"determinism", determinism},
  };
  CLI::App app{"Acceptance criteria"};
  std::vector<std::string> selected;
  bool list = false;
  app.add_option("--criterion", selected, "Run only these criteria");
  app.add_flag("--list", list, "List criterion names");
  CLI11_PARSE(app, argc, argv);
  if (list) {
    for (const auto& [name, fn] : criteria) std::cout << name << "\n";
    return 0;
  }
  for (const auto& s : selected) {
    bool known = false;
    for (const auto& [name, fn] : criteria) known = known || name == s;
    if (!known) {
      std::cerr << "unknown criterion '" << s << "'\n";
      return 1;
    }
  }
  bool all = true;
  for (const auto& [name, fn] : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), name) == selected.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
