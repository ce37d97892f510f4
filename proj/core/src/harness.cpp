#include "kpzlab/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "kpzlab/error.hpp"
#include "kpzlab/fields.hpp"
#include "kpzlab/kernel_bounds.hpp"
#include "kpzlab/kpz_reference.hpp"
#include "kpzlab/model_objects.hpp"
#include "kpzlab/parallel.hpp"
#include "kpzlab/rng.hpp"
#include "kpzlab/solver.hpp"
#include "kpzlab/stats.hpp"

namespace kpzlab {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || !std::isfinite(x)) throw LabError(ErrorKind::InvalidArgument, key + ": not a number: '" + v + "'");
  return x;
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw LabError(ErrorKind::InvalidArgument, key + ": not a non-negative integer: '" + v + "'");
  return std::stoull(v);
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(to_double(key, s));
  return out;
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_same_v<T, std::string>)
      s += v[i];
    else if constexpr (std::is_integral_v<T>)
      s += std::to_string(v[i]);
    else
      s += num(v[i]);
  }
  return s;
}

std::string digest(const char* algo, std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_get_digestbyname(algo), nullptr) != 1)
    throw LabError(ErrorKind::Io, "digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

}  // namespace

std::string sha1_hex(std::string_view data) { return digest("SHA1", data); }

std::string git_blob_digest(std::string_view data) {
  std::string blob = "blob " + std::to_string(data.size());
  blob.push_back('\0');
  blob.append(data);
  return sha1_hex(blob);
}

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"simulate", "couple", "verify-kernels", "verify-sg", "scale-check", "compare"};
  return kinds;
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw LabError(ErrorKind::InvalidArgument, "config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string v = trim(std::string_view(line).substr(eq + 1));
    if (key == "kind") c.kind = v;
    else if (key == "q") c.q = to_doubles(key, v);
    else if (key == "f") c.f = v;
    else if (key == "theta") c.theta = v;
    else if (key == "eps") c.eps = to_doubles(key, v);
    else if (key == "T") c.T = to_double(key, v);
    else if (key == "replicas") c.replicas = to_count(key, v);
    else if (key == "seed") c.seed = to_count(key, v);
    else if (key == "out") c.out = v;
    else if (key == "tags") c.tags = split_list(v);
    else if (key == "p") {
      c.p.clear();
      for (const auto& s : split_list(v)) c.p.push_back(static_cast<int>(to_count(key, s)));
    } else if (key == "lambdas") c.lambdas = to_doubles(key, v);
    else if (key == "rungs") c.rungs = to_count(key, v);
    else if (key == "lengths") c.lengths = to_doubles(key, v);
    else if (key == "coupling_replicas") c.coupling_replicas = to_count(key, v);
    else if (key == "reference_replicas") c.reference_replicas = to_count(key, v);
    else if (key == "reference_nx") c.reference_nx = to_count(key, v);
    else if (key == "ks_resamples") c.ks_resamples = to_count(key, v);
    else if (key == "constant_replicas") c.constant_replicas = to_count(key, v);
    else if (key == "functionals") c.functionals = to_count(key, v);
    else if (key == "gap_p") c.gap_p = to_double(key, v);
    else throw LabError(ErrorKind::InvalidArgument, "config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LabError(ErrorKind::Io, "cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string RunConfig::canonical() const {
  std::map<std::string, std::string> kv{
      {"kind", kind},
      {"q", join(q)},
      {"f", f},
      {"theta", theta},
      {"eps", join(eps)},
      {"T", num(T)},
      {"replicas", std::to_string(replicas)},
      {"seed", std::to_string(seed)},
      {"out", out},
      {"tags", join(tags)},
      {"p", join(p)},
      {"lambdas", join(lambdas)},
      {"rungs", std::to_string(rungs)},
      {"lengths", join(lengths)},
      {"coupling_replicas", std::to_string(coupling_replicas)},
      {"reference_replicas", std::to_string(reference_replicas)},
      {"reference_nx", std::to_string(reference_nx)},
      {"ks_resamples", std::to_string(ks_resamples)},
      {"constant_replicas", std::to_string(constant_replicas)},
      {"functionals", std::to_string(functionals)},
      {"gap_p", num(gap_p)},
  };
  std::string s;
  for (const auto& [k, v] : kv) s += k + " = " + v + "\n";
  return s;
}

Nonlinearity RunConfig::nonlinearity() const {
  if (f.rfind("table:", 0) == 0) {
    const std::string path = f.substr(6);
    std::ifstream in(path);
    if (!in) throw LabError(ErrorKind::InvalidArgument, "cannot read nonlinearity table '" + path + "'");
    double dw = 0.0;
    std::vector<double> values;
    if (!(in >> dw)) throw LabError(ErrorKind::InvalidArgument, "nonlinearity table '" + path + "' is empty");
    for (double v; in >> v;) values.push_back(v);
    return Nonlinearity::table(values, dw, "table");
  }
  return Nonlinearity::preset(f);
}

PolynomialSmoothing RunConfig::smoothing() const { return PolynomialSmoothing::validate(q); }

Mollifier RunConfig::mollifier() const {
  if (theta == "gaussian") return Mollifier::gaussian();
  if (theta == "bump") return Mollifier::bump();
  if (theta.rfind("bump:", 0) == 0) return Mollifier::bump(to_double("theta", theta.substr(5)));
  throw LabError(ErrorKind::InvalidArgument, "unknown mollifier '" + theta + "' (gaussian, bump[:width])");
}

void RunConfig::validate() const {
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
    throw LabError(ErrorKind::InvalidArgument, "unknown experiment kind '" + kind + "'");
  nonlinearity();
  smoothing();
  mollifier();
  if (eps.empty()) throw LabError(ErrorKind::InvalidArgument, "eps ladder is empty");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0 && eps[i] <= 1.0)) throw LabError(ErrorKind::InvalidArgument, "eps must lie in (0, 1]");
    if (i && !(eps[i] < eps[i - 1])) throw LabError(ErrorKind::InvalidArgument, "eps ladder must be strictly decreasing");
  }
  if (!(T > 0.0)) throw LabError(ErrorKind::InvalidArgument, "T must be positive");
  if (replicas == 0) throw LabError(ErrorKind::InvalidArgument, "replicas must be positive");
  for (int pp : p)
    if (pp < 2 || pp % 2) throw LabError(ErrorKind::InvalidArgument, "p must be even and >= 2");
  for (const auto& t : tags)
    if (t != "xi") symbol_id(t);
  if (kind == "scale-check" && lambdas.empty())
    for (double e : eps)
      if (!(8.0 * e < 0.25)) throw LabError(ErrorKind::InvalidArgument, "default lambda ladder [8 eps, 1/4] is empty; set lambdas");
  if (kind == "compare" && (reference_nx < 8 || reference_nx % 2))
    throw LabError(ErrorKind::InvalidArgument, "reference_nx must be even and >= 8");
}

bool RunRecord::passed() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.pass; });
}

double RunRecord::metric(const std::string& name) const {
  for (const auto& m : metrics)
    if (m.name == name) return m.value;
  throw LabError(ErrorKind::InvalidArgument, "no metric '" + name + "'");
}

const Table& RunRecord::table(const std::string& name) const {
  for (const auto& t : tables)
    if (t.name == name) return t;
  throw LabError(ErrorKind::InvalidArgument, "no table '" + name + "'");
}

std::string RunRecord::summary_digest() const {
  std::string s = "kind " + kind + "\n";
  for (const auto& m : metrics) s += "metric " + m.name + " " + num(m.value) + " " + m.artifact + "\n";
  for (const auto& c : criteria) s += "criterion " + c.name + " " + (c.pass ? "1" : "0") + "\n";
  for (const auto& t : tables) {
    s += "table " + t.name + " " + join(t.columns) + "\n";
    for (const auto& r : t.rows) s += join(r) + "\n";
  }
  return sha1_hex(s);
}

namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw LabError(ErrorKind::Io, "cannot write '" + p.string() + "'");
  out << content;
  if (!out) throw LabError(ErrorKind::Io, "write failed for '" + p.string() + "'");
}

nlohmann::ordered_json record_json(const RunRecord& r) {
  nlohmann::ordered_json j;
  j["kind"] = r.kind;
  j["config_hash"] = r.config_hash;
  j["input_digest"] = r.input_digest;
  j["summary_digest"] = r.summary_digest();
  j["passed"] = r.passed();
  j["criteria"] = nlohmann::ordered_json::array();
  for (const auto& c : r.criteria) j["criteria"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  j["metrics"] = nlohmann::ordered_json::array();
  for (const auto& m : r.metrics) j["metrics"].push_back({{"name", m.name}, {"value", m.value}, {"artifact", m.artifact}});
  j["timings"] = nlohmann::ordered_json::array();
  for (const auto& t : r.timings) j["timings"].push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  j["artifacts"] = r.artifacts;
  return j;
}

}  // namespace

std::vector<std::string> emit_report(const RunRecord& record, const std::string& dir, const std::string& format) {
  const bool all = format == "all";
  if (!all && format != "csv" && format != "json" && format != "text")
    throw LabError(ErrorKind::InvalidArgument, "unknown report format '" + format + "'");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw LabError(ErrorKind::Io, "cannot create '" + dir + "': " + ec.message());
  const std::filesystem::path base(dir);
  std::vector<std::string> paths;
  if (all || format == "csv") {
    for (const auto& t : record.tables) {
      std::string csv, dat = "#";
      for (std::size_t i = 0; i < t.columns.size(); ++i) {
        csv += (i ? "," : "") + csv_cell(t.columns[i]);
        dat += " " + t.columns[i];
      }
      csv += "\n";
      dat += "\n";
      for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
          csv += (i ? "," : "") + csv_cell(row[i]);
          dat += (i ? " " : "") + (row[i].empty() ? std::string("-") : row[i]);
        }
        csv += "\n";
        dat += "\n";
      }
      write_file(base / (t.name + ".csv"), csv);
      paths.push_back((base / (t.name + ".csv")).string());
      if (all) {
        write_file(base / (t.name + ".dat"), dat);
        paths.push_back((base / (t.name + ".dat")).string());
      }
    }
  }
  if (all || format == "json") {
    write_file(base / "summary.json", record_json(record).dump(2) + "\n");
    paths.push_back((base / "summary.json").string());
  }
  if (all || format == "text") {
    std::ostringstream os;
    os << "kind: " << record.kind << "\nconfig: " << record.config_hash << "\nsummary digest: " << record.summary_digest()
       << "\n\n";
    for (const auto& c : record.criteria) os << (c.pass ? "PASS " : "FAIL ") << c.name << "  " << c.detail << "\n";
    if (!record.metrics.empty()) os << "\n";
    for (const auto& m : record.metrics) os << m.name << " = " << num(m.value) << "  [" << m.artifact << "]\n";
    if (!record.timings.empty()) os << "\n";
    for (const auto& t : record.timings) os << "stage " << t.stage << ": " << t.seconds << " s\n";
    write_file(base / "summary.txt", os.str());
    paths.push_back((base / "summary.txt").string());
  }
  return paths;
}

std::vector<Functional> gap_suite(const CellDomain& domain, std::size_t count, std::uint64_t seed) {
  CounterRng rng(seed);
  const Box box = domain.box;
  const double t_mid = 0.5 * (box.t_lo + box.t_hi);
  std::vector<Functional> out;
  for (std::size_t j = 0; out.size() < count; ++j) {
    const int kind = static_cast<int>(j % 10);
    const double u = rng.uniform(), v = rng.uniform();
    const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
    const std::string id = "F" + std::to_string(out.size());
    switch (kind) {
      case 0:
      case 1: {
        const double t_hi = box.t_lo + (0.25 + 0.5 * u) * (box.t_hi - box.t_lo);
        const bool square = kind == 1;
        out.push_back({[t_hi, square](std::span<const Point> pts) {
                         double n = 0.0;
                         for (const auto& p : pts) n += p.t < t_hi ? 1.0 : 0.0;
                         return square ? n * n : std::sqrt(1.0 + n);
                       },
                       id + ":" + (square ? "count^2" : "sqrt(1+count)")});
        break;
      }
      case 2:
      case 3:
      case 4:
      case 5: {
        const ChaosKernel g = ChaosKernel::from_function(domain, 1, [&](std::span<const std::size_t> c) {
          const Point p = domain.center(c[0]);
          return 0.5 * (a * std::sin(2.0 * std::numbers::pi * p.x / box.period) + b * std::cos(3.0 * (p.t - t_mid)));
        });
        const int shape = kind - 2;
        out.push_back({[g, shape](std::span<const Point> pts) {
                         const double x = wiener_ito(g, pts);
                         switch (shape) {
                           case 0: return std::tanh(x);
                           case 1: return std::sin(x);
                           case 2: return std::exp(-x * x);
                           default: return std::atan(2.0 * x);
                         }
                       },
                       id + ":phi(I1)"});
        break;
      }
      case 6:
      case 7: {
        const Point z{box.t_lo + u * (box.t_hi - box.t_lo), v * box.period};
        const double w = 0.3 + 0.4 * rng.uniform();
        const bool squared = kind == 7;
        const double period = box.period;
        out.push_back({[z, w, squared, period](std::span<const Point> pts) {
                         double s = 0.0;
                         for (const auto& p : pts) {
                           double dx = std::fabs(p.x - z.x);
                           dx = std::min(dx, period - dx);
                           s += std::exp(-((p.t - z.t) * (p.t - z.t) + dx * dx) / (w * w));
                         }
                         return squared ? s * s : std::log1p(s);
                       },
                       id + (squared ? ":shot^2" : ":log(1+shot)")});
        break;
      }
      case 8: {
        out.push_back({[a, t_mid](std::span<const Point> pts) {
                         double m = 0.0;
                         for (const auto& p : pts) m = std::max(m, std::exp(-std::fabs(p.t - t_mid)) * (1.0 + 0.2 * a));
                         return m;
                       },
                       id + ":max"});
        break;
      }
      default: {
        const double r = 0.2 + 0.3 * u;
        const double period = box.period;
        out.push_back({[r, period](std::span<const Point> pts) {
                         double pairs = 0.0;
                         for (std::size_t i = 0; i < pts.size(); ++i)
                           for (std::size_t k = i + 1; k < pts.size(); ++k) {
                             double dx = std::fabs(pts[i].x - pts[k].x);
                             dx = std::min(dx, period - dx);
                             if (std::fabs(pts[i].t - pts[k].t) + dx < r) pairs += 1.0;
                           }
                         return pairs;
                       },
                       id + ":close pairs"});
        break;
      }
    }
  }
  // Evaluate on cell centres so that the cell quadrature of int (D_u F)^2 is exact.
  for (auto& fn : out) {
    fn.evaluator = [inner = std::move(fn.evaluator), domain](std::span<const Point> pts) {
      std::vector<Point> snapped(pts.size());
      for (std::size_t i = 0; i < pts.size(); ++i) snapped[i] = domain.center(domain.cell_of(pts[i]));
      return inner(snapped);
    };
  }
  return out;
}

UniversalityResult universality_trend(const RunConfig& config) {
  const auto f = config.nonlinearity();
  const auto q = config.smoothing();
  const auto theta = config.mollifier();
  UniversalityResult res;
  const auto lim = coupling_limit(f, q, theta, config.lengths, config.coupling_replicas,
                                  derive_seed(config.seed, "compare/coupling", 0));
  res.a = lim.estimate.value;
  CHConfig ch;
  ch.a = res.a;
  ch.nx = config.reference_nx;
  ch.T = config.T;
  const auto ref = map_replicas<double>(config.reference_replicas, [&](std::size_t r) {
    CHConfig c = ch;
    c.seed = derive_seed(config.seed, "compare/reference", r);
    return solve_cole_hopf(c, std::vector<double>(c.nx, 0.0)).h[0];
  });
  res.reference = median_centered(ref);
  for (std::size_t i = 0; i < config.eps.size(); ++i) {
    const double eps = config.eps[i];
    UniversalityRow row;
    row.eps = eps;
    row.drift = renorm_constants(f, q, theta, eps, config.constant_replicas,
                                 derive_seed(config.seed, "compare/constants", i))
                    .drift;
    SolverConfig base = SolverConfig::macro(eps, config.T, q, f);
    base.theta = theta;
    base.drift = row.drift;
    base.record_stride = base.nt - 1;
    const std::string stage = "compare/solve/" + std::to_string(i);
    const auto h = map_replicas<double>(config.replicas, [&](std::size_t r) {
      SolverConfig c = base;
      c.seed = derive_seed(config.seed, stage, r);
      const auto out = simulate_macro(c, solver_cloud(c));
      return out.h.at(out.h.nt - 1, 0);
    });
    row.samples = median_centered(h);
    const auto ks = ks_compare(row.samples, res.reference, config.ks_resamples,
                               derive_seed(config.seed, "compare/ks", i));
    row.ks = ks.statistic;
    row.p_value = ks.p_value;
    res.rows.push_back(std::move(row));
  }
  res.decreasing = true;
  for (std::size_t i = 1; i < res.rows.size(); ++i)
    if (!(res.rows[i].ks < res.rows[i - 1].ks)) res.decreasing = false;
  return res;
}

namespace {

class Runner {
 public:
  // Tables are filled through references, so their storage must not move.
  explicit Runner(const RunConfig& c) : cfg_(c) { rec.tables.reserve(kMaxTables); }

  template <class F>
  void stage(const std::string& id, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      body();
    } catch (const LabError& e) {
      throw LabError(ErrorKind::StageFailure, "stage " + id + ": " + e.what());
    } catch (const std::exception& e) {
      throw LabError(ErrorKind::StageFailure, "stage " + id + ": " + e.what());
    }
    rec.timings.push_back({id, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
  }

  Table& table(const std::string& name, std::vector<std::string> columns) {
    if (rec.tables.size() == kMaxTables) throw LabError(ErrorKind::InvalidArgument, "too many report tables");
    rec.tables.push_back({name, std::move(columns), {}});
    return rec.tables.back();
  }
  void metric(const std::string& name, double v, const std::string& artifact) { rec.metrics.push_back({name, v, artifact}); }
  void criterion(const std::string& name, bool pass, const std::string& detail) { rec.criteria.push_back({name, pass, detail}); }

  static constexpr std::size_t kMaxTables = 16;
  RunRecord rec;

 protected:
  const RunConfig& cfg_;
};

std::string eps_key(double eps) {
  std::ostringstream os;
  os << eps;
  return os.str();
}

void run_simulate(Runner& run, const RunConfig& cfg) {
  const auto f = cfg.nonlinearity();
  const auto q = cfg.smoothing();
  const auto theta = cfg.mollifier();
  std::vector<std::pair<double, double>> drifts;
  run.stage("constants", [&] {
    for (std::size_t i = 0; i < cfg.eps.size(); ++i)
      drifts.push_back({cfg.eps[i], renorm_constants(f, q, theta, cfg.eps[i], cfg.constant_replicas,
                                                     derive_seed(cfg.seed, "simulate/constants", i))
                                        .drift});
  });
  auto& samples = run.table("heights", {"eps", "replica", "h"});
  auto& summary = run.table("height_summary", {"eps", "drift", "mean", "variance", "dealias_energy_max"});
  run.stage("solve", [&] {
    for (std::size_t i = 0; i < cfg.eps.size(); ++i) {
      SolverConfig base = SolverConfig::macro(cfg.eps[i], cfg.T, q, f);
      base.theta = theta;
      base.drift = drifts[i].second;
      base.record_stride = base.nt - 1;
      const std::string stage = "simulate/solve/" + std::to_string(i);
      const auto out = map_replicas<std::pair<double, double>>(cfg.replicas, [&](std::size_t r) {
        SolverConfig c = base;
        c.seed = derive_seed(cfg.seed, stage, r);
        const auto s = simulate_macro(c, solver_cloud(c));
        return std::pair{s.h.at(s.h.nt - 1, 0), s.dealias_energy};
      });
      std::vector<double> h;
      double dealias = 0.0;
      for (std::size_t r = 0; r < out.size(); ++r) {
        h.push_back(out[r].first);
        dealias = std::max(dealias, out[r].second);
        samples.rows.push_back({num(cfg.eps[i]), std::to_string(r), num(out[r].first)});
      }
      const double var = h.size() > 1 ? variance(h) : 0.0;
      summary.rows.push_back({num(cfg.eps[i]), num(drifts[i].second), num(mean(h)), num(var), num(dealias)});
      run.metric("mean_h[eps=" + eps_key(cfg.eps[i]) + "]", mean(h), "height_summary");
      run.metric("var_h[eps=" + eps_key(cfg.eps[i]) + "]", var, "height_summary");
      run.criterion("resolved[eps=" + eps_key(cfg.eps[i]) + "]", dealias <= 0.01,
                    "max dealiased energy fraction " + num(dealias));
    }
  });
}

void run_couple(Runner& run, const RunConfig& cfg) {
  const auto f = cfg.nonlinearity();
  const auto q = cfg.smoothing();
  const auto theta = cfg.mollifier();
  auto& t = run.table("coupling", {"eps", "a_mc", "a_mc_stderr", "a_quadrature", "method"});
  auto& lt = run.table("coupling_limit", {"length", "a", "stderr", "g2"});
  run.stage("constants", [&] {
    for (std::size_t i = 0; i < cfg.eps.size(); ++i) {
      const double eps = cfg.eps[i];
      const auto mc = coupling_mc(f, q, theta, eps, std::max<std::size_t>(cfg.replicas, 100),
                                  derive_seed(cfg.seed, "couple/mc", i));
      double quad = std::nan("");
      if (f.trigonometric() || f.polynomial()) quad = coupling_quadrature(f, q, theta, eps).value;
      t.rows.push_back({num(eps), num(mc.value), num(mc.stderr_), num(quad), mc.method});
      run.metric("a_eps[eps=" + eps_key(eps) + "]", mc.value, "coupling");
      run.metric("a_eps_stderr[eps=" + eps_key(eps) + "]", mc.stderr_, "coupling");
      if (!std::isnan(quad)) {
        const bool ok = std::fabs(mc.value - quad) <= 3.0 * mc.stderr_ + 1e-12;
        run.criterion("mc_vs_quadrature[eps=" + eps_key(eps) + "]", ok,
                      "mc " + num(mc.value) + " +- " + num(mc.stderr_) + " quadrature " + num(quad));
      }
    }
    const auto lim = coupling_limit(f, q, theta, cfg.lengths, cfg.coupling_replicas, derive_seed(cfg.seed, "couple/limit", 0));
    for (const auto& p : lim.ladder) lt.rows.push_back({num(p.length), num(p.value), num(p.stderr_), num(p.g2)});
    run.metric("a", lim.estimate.value, "coupling_limit");
    run.metric("a_stderr", lim.estimate.stderr_, "coupling_limit");
  });
}

void run_kernels(Runner& run, const RunConfig& cfg) {
  const auto q = cfg.smoothing();
  auto& t = run.table("kernel_bounds", {"bound", "eps", "delta", "sup_ratio", "argmax_t", "argmax_x"});
  auto& v = run.table("kernel_variation", {"bound", "delta", "variation"});
  run.stage("kernels", [&] {
    std::vector<MultiplierFamily> ladder;
    for (double e : cfg.eps) ladder.emplace_back(q, e, 1 << 20);
    BoundSpec spec;
    spec.theta = cfg.mollifier();
    const auto rep = verify_kernel_bounds(ladder, spec);
    for (const auto& r : rep.rows)
      t.rows.push_back({r.bound_id, num(r.epsilon), num(r.delta), num(r.sup_ratio), num(r.argmax_t), num(r.argmax_x)});
    for (const auto& id : rep.bound_ids()) {
      std::vector<double> deltas{0.0};
      if (id == "difference_delta") deltas = {0.25, 0.5};
      for (double d : deltas) {
        const double var = rep.ladder_variation(id, d);
        const std::string name = id + (d > 0.0 ? "@" + eps_key(d) : "");
        v.rows.push_back({id, num(d), num(var)});
        run.metric("variation[" + name + "]", var, "kernel_variation");
        run.criterion("bounded[" + name + "]", std::isfinite(var) && var < 3.0, "max/min over eps " + num(var));
      }
    }
  });
}

void run_sg(Runner& run, const RunConfig& cfg) {
  auto& t = run.table("spectral_gap", {"functional", "p", "lhs", "rhs", "slack", "stderr", "fitted_c"});
  run.stage("chaos", [&] {
    CellDomain d;
    d.box = Box{0.0, 3.0, 1.0};
    d.nt = 6;
    d.nx = 4;
    d.intensity = 2.0;
    const auto family = gap_suite(d, cfg.functionals, derive_seed(cfg.seed, "verify-sg/suite", 0));
    const auto rep = spectral_gap_report(family, cfg.gap_p, d, cfg.replicas, derive_seed(cfg.seed, "verify-sg/mc", 0));
    std::size_t violations = 0;
    double worst = 1e300;
    for (const auto& r : rep.rows) {
      t.rows.push_back({r.functional_id, num(r.p), num(r.lhs), num(r.rhs), num(r.slack), num(r.stderr_), num(r.fitted_c)});
      const double z = r.stderr_ > 0.0 ? r.slack / r.stderr_ : (r.slack >= 0.0 ? 1e300 : -1e300);
      worst = std::min(worst, z);
      if (r.slack < -3.0 * r.stderr_) ++violations;
    }
    const auto w = exact_window_gap([](double n) { return n * n; }, 1.0, "window:N^2");
    t.rows.push_back({w.functional_id, num(w.p), num(w.lhs), num(w.rhs), num(w.slack), num(w.stderr_), num(w.fitted_c)});
    run.metric("family_c", rep.family_c, "spectral_gap");
    run.metric("min_slack_z", worst, "spectral_gap");
    run.metric("window_lhs", w.lhs, "spectral_gap");
    run.metric("window_rhs", w.rhs, "spectral_gap");
    run.criterion("gap_suite", violations == 0,
                  std::to_string(rep.rows.size()) + " functionals, " + std::to_string(violations) + " below -3 stderr");
    run.criterion("window_count", std::fabs(w.lhs - 15.0) < 1e-12 && std::fabs(w.rhs - 17.0) < 1e-12,
                  "lhs " + num(w.lhs) + " rhs " + num(w.rhs));
  });
}

void run_scale(Runner& run, const RunConfig& cfg) {
  const auto f = cfg.nonlinearity();
  const auto q = cfg.smoothing();
  const auto theta = cfg.mollifier();
  auto& rows = run.table("scaling", {"tag", "eps", "p", "lambda", "moment", "stderr", "mean", "mean_stderr"});
  auto& fits = run.table("scaling_fit", {"tag", "eps", "p", "slope", "stderr", "ci_lo", "ci_hi", "target", "pass"});
  std::vector<std::string> general;
  for (const auto& t : cfg.tags)
    if (t != "xi" && t != "1'") general.push_back(t);
  const bool quad_f = f.polynomial() && f.even_poly.size() >= 2 && f.even_poly[1] != 0.0 &&
                      std::count_if(f.even_poly.begin(), f.even_poly.end(), [](double c) { return c != 0.0; }) == 1;
  if (!quad_f && std::find(cfg.tags.begin(), cfg.tags.end(), "1'") != cfg.tags.end()) general.push_back("1'");
  for (std::size_t i = 0; i < cfg.eps.size(); ++i) {
    const double eps = cfg.eps[i];
    const auto lambdas = cfg.lambdas.empty() ? geometric_ladder(8.0 * eps, 0.25, cfg.rungs) : cfg.lambdas;
    RenormTable renorm;
    if (!general.empty())
      run.stage("constants", [&] {
        renorm = renorm_constants(f, q, theta, eps, cfg.constant_replicas, derive_seed(cfg.seed, "scale/constants", i));
        fill_object_constants(renorm, f, q, theta, cfg.constant_replicas, derive_seed(cfg.seed, "scale/objects", i));
      });
    run.stage("objects", [&] {
      std::map<std::string, std::vector<std::vector<double>>> samples;
      const std::uint64_t s = derive_seed(cfg.seed, "scale/pairings", i);
      for (const auto& tag : cfg.tags) {
        if (tag == "xi") samples[tag] = linear_pairings(LinearObject::Noise, q, theta, eps, lambdas, cfg.replicas, s);
        else if (tag == "1'" && quad_f) samples[tag] = linear_pairings(LinearObject::Psi, q, theta, eps, lambdas, cfg.replicas, s);
      }
      if (!general.empty())
        for (auto& [tag, v] : symbol_pairings(general, f, q, theta, eps, lambdas, cfg.replicas, s, renorm)) samples[tag] = std::move(v);
      for (const auto& tag : cfg.tags) {
        const double h = tag == "xi" ? -1.5 : symbol_id(tag).homogeneity;
        // 0' has mean a_eps / a_eps = 1 by construction of the coupling constant
        const double offset = tag == "0'" ? TestFunction{lambdas.back()}.integral() : 0.0;
        for (int p : cfg.p) {
          const auto rep = scaling_from_samples(tag, h, lambdas, samples.at(tag), p, derive_seed(cfg.seed, "scale/boot", i));
          for (const auto& r : rep.rows)
            rows.rows.push_back({tag, num(eps), std::to_string(p), num(r.lambda), num(r.moment), num(r.stderr_),
                                 num(r.mean), num(r.mean_stderr)});
          fits.rows.push_back({tag, num(eps), std::to_string(p), num(rep.slope), num(rep.slope_stderr), num(rep.ci_lo),
                               num(rep.ci_hi), num(rep.target), rep.pass ? "1" : "0"});
          const std::string key = tag + ",p=" + std::to_string(p) + ",eps=" + eps_key(eps);
          run.metric("slope[" + key + "]", rep.slope, "scaling_fit");
          run.metric("slope_stderr[" + key + "]", rep.slope_stderr, "scaling_fit");
          run.criterion("slope[" + key + "]", rep.pass,
                        "slope " + num(rep.slope) + " >= " + num(h) + " - " + num(rep.tolerance));
          if (p == cfg.p.front()) {
            const auto& last = rep.rows.back();
            double c_err = 0.0;
            if (tag != "xi" && renorm.has(tag)) c_err = renorm.at(tag).stderr_ * TestFunction{last.lambda}.integral();
            // Pi<2'> divides by the same a_eps estimate that enters C<2'>, so only the error of E F survives
            if (tag == "2'") c_err = renorm.drift_stderr / std::fabs(renorm.a_eps) * TestFunction{last.lambda}.integral();
            if (tag == "0'") c_err = renorm.a_eps_stderr / renorm.a_eps * offset;
            const double tol = 3.0 * std::hypot(last.mean_stderr, c_err);
            const std::string zkey = tag + ",eps=" + eps_key(eps);
            run.metric("mean[" + zkey + "]", last.mean - offset, "scaling");
            run.metric("mean_tol[" + zkey + "]", tol, "scaling");
            // only symbols carrying a constant are recentered; the others are reported above
            if (tag != "xi" && symbol_id(tag).recentered)
              run.criterion("zero_mean[" + zkey + "]", std::fabs(last.mean - offset) <= tol,
                            "mean " + num(last.mean - offset) + " tol " + num(tol));
          }
        }
      }
    });
  }
}

void run_compare(Runner& run, const RunConfig& cfg) {
  auto& t = run.table("universality", {"eps", "drift", "ks", "p_value", "replicas"});
  auto& s = run.table("universality_samples", {"source", "eps", "h"});
  UniversalityResult res;
  run.stage("compare", [&] { res = universality_trend(cfg); });
  run.metric("a", res.a, "universality");
  for (double h : res.reference) s.rows.push_back({"cole-hopf", "0", num(h)});
  for (const auto& r : res.rows) {
    t.rows.push_back({num(r.eps), num(r.drift), num(r.ks), num(r.p_value), std::to_string(r.samples.size())});
    for (double h : r.samples) s.rows.push_back({"model", num(r.eps), num(h)});
    run.metric("ks[eps=" + eps_key(r.eps) + "]", r.ks, "universality");
  }
  std::string detail;
  for (const auto& r : res.rows) detail += (detail.empty() ? "" : " > ") + num(r.ks);
  run.criterion("ks_decreasing", res.decreasing, detail);
}

}  // namespace

RunRecord run_experiment(const RunConfig& config) {
  Runner run(config);
  run.rec.kind = config.kind;
  run.stage("validate", [&] { config.validate(); });
  const std::string canon = config.canonical();
  run.rec.config_hash = sha1_hex(canon);
  run.rec.input_digest = git_blob_digest(canon);
  if (config.kind == "simulate") run_simulate(run, config);
  else if (config.kind == "couple") run_couple(run, config);
  else if (config.kind == "verify-kernels") run_kernels(run, config);
  else if (config.kind == "verify-sg") run_sg(run, config);
  else if (config.kind == "scale-check") run_scale(run, config);
  else run_compare(run, config);
  if (!config.out.empty()) {
    const std::filesystem::path base(config.out);
    for (const auto& t : run.rec.tables) {
      run.rec.artifacts.push_back((base / (t.name + ".csv")).string());
      run.rec.artifacts.push_back((base / (t.name + ".dat")).string());
    }
    run.rec.artifacts.push_back((base / "summary.json").string());
    run.rec.artifacts.push_back((base / "summary.txt").string());
    std::filesystem::create_directories(base);
    write_file(base / "config.txt", canon);
    run.stage("report", [&] { emit_report(run.rec, config.out); });
  }
  return run.rec;
}

}  // namespace kpzlab
