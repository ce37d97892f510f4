#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "kpzlab/chaos.hpp"
#include "kpzlab/noise.hpp"
#include "kpzlab/nonlinearity.hpp"
#include "kpzlab/smoothing.hpp"

namespace kpzlab {

// Flat key = value configuration; see docs/config.md for the schema.
struct RunConfig {
  std::string kind;  // simulate | couple | verify-kernels | verify-sg | scale-check | compare
  std::vector<double> q{1.0, 1.0};
  std::string f = "w2";         // w2 | w4 | cos | table:<path>
  std::string theta = "gaussian";  // gaussian | bump[:width]
  std::vector<double> eps{0.2, 0.1, 0.05};
  double T = 1.0;
  std::size_t replicas = 100;
  std::uint64_t seed = 0;
  std::string out;  // empty: nothing is written

  // scale-check
  std::vector<std::string> tags{"xi", "1'"};
  std::vector<int> p{2};
  std::vector<double> lambdas;  // empty: geometric ladder over [8 eps, 1/4]
  std::size_t rungs = 4;
  // couple / compare
  std::vector<double> lengths{16.0, 32.0};
  std::size_t coupling_replicas = 2000;
  // compare
  std::size_t reference_replicas = 2000;
  std::size_t reference_nx = 64;
  std::size_t ks_resamples = 200;
  // constants for scale-check and compare
  std::size_t constant_replicas = 400;
  // verify-sg
  std::size_t functionals = 20;
  double gap_p = 2.0;

  // Unknown keys and malformed values throw InvalidArgument.
  static RunConfig parse(std::string_view text);
  // Throws Io when the file cannot be read.
  static RunConfig load(const std::string& path);
  // One sorted key = value line per field; parse(canonical()) round-trips.
  std::string canonical() const;
  // Presets resolvable, ladder strictly decreasing, positive counts.  Throws InvalidArgument.
  void validate() const;

  Nonlinearity nonlinearity() const;
  PolynomialSmoothing smoothing() const;
  Mollifier mollifier() const;
};

const std::vector<std::string>& experiment_kinds();

struct Metric {
  std::string name;
  double value = 0.0;
  std::string artifact;  // table the value is computed from
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct Criterion {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct RunRecord {
  std::string kind;
  std::string config_hash;   // SHA-1 of the canonical config
  std::string input_digest;  // git blob digest of the canonical config
  std::vector<StageTiming> timings;
  std::vector<std::string> artifacts;
  std::vector<Metric> metrics;
  std::vector<Table> tables;
  std::vector<Criterion> criteria;

  bool passed() const;
  // Throws InvalidArgument for an unknown name.
  double metric(const std::string& name) const;
  const Table& table(const std::string& name) const;
  // SHA-1 over kind, metrics, tables and criteria (timings and paths excluded).
  std::string summary_digest() const;
};

// Runs validate -> kernels -> noise -> fields -> constants -> solve -> objects/compare as
// the kind requires and writes the report to config.out when it is set.  Errors inside a
// stage are rethrown as StageFailure naming the stage.
RunRecord run_experiment(const RunConfig& config);

// Writes <dir>/<table>.csv, <dir>/<table>.dat (whitespace columns), summary.json and
// summary.txt for format "all"; "csv", "json" and "text" select one kind.  Returns the paths.
std::vector<std::string> emit_report(const RunRecord& record, const std::string& dir, const std::string& format = "all");

std::string sha1_hex(std::string_view data);
// SHA-1 of "blob <size>\0" + data.
std::string git_blob_digest(std::string_view data);

// Twenty L^2 spectral-gap test functionals on `domain` (counts, first-chaos transforms,
// shot-noise values, extremes), fixed by `seed`.  Points enter through their cell centre.
std::vector<Functional> gap_suite(const CellDomain& domain, std::size_t count, std::uint64_t seed);

struct UniversalityRow {
  double eps = 0.0;
  double drift = 0.0;
  double ks = 0.0;
  double p_value = 1.0;
  std::vector<double> samples;  // h_eps(T, 0), median-centered
};

struct UniversalityResult {
  double a = 0.0;
  std::vector<double> reference;  // Cole-Hopf KPZ(a) h(T, 0), median-centered
  std::vector<UniversalityRow> rows;
  bool decreasing = false;
};

// Median-centered KS distance between h_eps(T, 0) and Cole-Hopf KPZ(a) samples for each eps.
UniversalityResult universality_trend(const RunConfig& config);

}  // namespace kpzlab
