#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kpzlab/error.hpp"
#include "kpzlab/harness.hpp"

using namespace kpzlab;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("kpzlab-test-" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const LabError& e) {
    return e.kind();
  }
  FAIL("expected a LabError");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("config parsing and canonical form") {
  const auto c = RunConfig::parse(
      "# universality run\n"
      "kind = compare\n"
      "f = cos   # trailing comment\n"
      "eps = 0.2, 0.1,0.05\n"
      "replicas = 12\n"
      "seed = 99\n"
      "tags = xi, 2'1'\n"
      "p = 2,4\n");
  CHECK(c.kind == "compare");
  CHECK(c.f == "cos");
  CHECK(c.eps == std::vector<double>{0.2, 0.1, 0.05});
  CHECK(c.replicas == 12);
  CHECK(c.seed == 99);
  CHECK(c.tags == std::vector<std::string>{"xi", "2'1'"});
  CHECK(c.p == std::vector<int>{2, 4});
  CHECK_NOTHROW(c.validate());
  const auto again = RunConfig::parse(c.canonical());
  CHECK(again.canonical() == c.canonical());

  CHECK(kind_of([] { RunConfig::parse("colour = red\n"); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { RunConfig::parse("T = fast\n"); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { RunConfig::parse("replicas = -3\n"); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { RunConfig::parse("just words\n"); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { RunConfig::load("/nonexistent/lab.cfg"); }) == ErrorKind::Io);
}

TEST_CASE("config validation") {
  RunConfig c;
  c.kind = "couple";
  CHECK_NOTHROW(c.validate());
  auto bad = c;
  bad.kind = "dance";
  CHECK_THROWS_AS(bad.validate(), LabError);
  bad = c;
  bad.eps = {0.1, 0.2};
  CHECK_THROWS_AS(bad.validate(), LabError);
  bad = c;
  bad.f = "w6";
  CHECK_THROWS_AS(bad.validate(), LabError);
  bad = c;
  bad.q = {2.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), LabError);
  bad = c;
  bad.theta = "square";
  CHECK_THROWS_AS(bad.validate(), LabError);
  bad = c;
  bad.tags = {"xi", "4'"};
  CHECK_THROWS_AS(bad.validate(), LabError);
  bad = c;
  bad.p = {3};
  CHECK_THROWS_AS(bad.validate(), LabError);
  bad = c;
  bad.kind = "scale-check";
  bad.eps = {0.05};
  CHECK_THROWS_AS(bad.validate(), LabError);
  bad.lambdas = {0.1, 0.2, 0.4, 0.8};
  CHECK_NOTHROW(bad.validate());
  CHECK(c.mollifier().kind == MollifierKind::Gaussian);
  c.theta = "bump:1.5";
  CHECK(c.mollifier().width == 1.5);

  const auto table = scratch("table");
  std::filesystem::create_directories(table);
  std::ofstream(table / "f.txt") << "0.5\n0 0.25 1 2.25 4\n";
  c.f = "table:" + (table / "f.txt").string();
  CHECK(c.nonlinearity().F(1.0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("digests") {
  CHECK(sha1_hex("abc") == "a9993e364706816aba3e25717850c26c9cd0d89d");
  CHECK(git_blob_digest("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("couple with w^2 is exact and reruns are identical") {
  RunConfig c;
  c.kind = "couple";
  c.f = "w2";
  c.eps = {0.2, 0.1};
  c.replicas = 100;
  const auto rec = run_experiment(c);
  CHECK(rec.metric("a") == 1.0);
  CHECK(rec.metric("a_stderr") == 0.0);
  CHECK(rec.metric("a_eps[eps=0.1]") == 1.0);
  CHECK(rec.passed());
  CHECK(rec.artifacts.empty());
  CHECK_THROWS_AS(rec.metric("b"), LabError);

  c.f = "w4";
  c.coupling_replicas = 200;
  const auto r1 = run_experiment(c);
  const auto r2 = run_experiment(c);
  CHECK(r1.summary_digest() == r2.summary_digest());
  CHECK(r1.config_hash == r2.config_hash);
  c.seed = 1;
  CHECK(run_experiment(c).summary_digest() != r1.summary_digest());
}

TEST_CASE("stage failures name the stage") {
  RunConfig c;
  c.kind = "couple";
  c.lengths = {8.0};
  try {
    run_experiment(c);
    FAIL("expected StageFailure");
  } catch (const LabError& e) {
    CHECK(e.kind() == ErrorKind::StageFailure);
    CHECK(std::string(e.what()).find("stage constants") != std::string::npos);
    CHECK(std::string(e.what()).find("BoxTooSmall") != std::string::npos);
  }
  c.kind = "nothing";
  CHECK(kind_of([&] { run_experiment(c); }) == ErrorKind::StageFailure);
}

TEST_CASE("reports: schema, empty tables and persisted artifacts") {
  RunConfig c;
  c.kind = "scale-check";
  c.eps = {0.05};
  c.lambdas = {0.1, 0.13, 0.169, 0.2197};
  c.p = {2, 4};
  c.replicas = 30;
  const auto dir = scratch("scale");
  c.out = dir.string();
  const auto rec = run_experiment(c);
  const auto& t = rec.table("scaling");
  CHECK(t.rows.size() == c.tags.size() * c.p.size() * c.lambdas.size());
  for (const auto& path : rec.artifacts) CHECK(std::filesystem::exists(path));
  CHECK(std::filesystem::exists(dir / "config.txt"));
  const auto csv = slurp(dir / "scaling.csv");
  CHECK(csv.rfind("tag,eps,p,lambda,moment,stderr,mean,mean_stderr\n", 0) == 0);
  CHECK(slurp(dir / "summary.json").find(rec.summary_digest()) != std::string::npos);
  for (const auto& m : rec.metrics) CHECK(!m.artifact.empty());
  // xi and 1' carry no constant: their means are reported but are not criteria
  CHECK(std::isfinite(rec.metric("mean[1',eps=0.05]")));
  for (const auto& cr : rec.criteria) CHECK(cr.name.rfind("zero_mean", 0) != 0);

  RunRecord empty;
  empty.kind = "scale-check";
  empty.tables.push_back({"scaling", {"tag", "p", "lambda", "moment", "stderr"}, {}});
  const auto edir = scratch("empty");
  const auto paths = emit_report(empty, edir.string());
  CHECK(paths.size() == 4);
  CHECK(slurp(edir / "scaling.csv") == "tag,p,lambda,moment,stderr\n");
  CHECK(empty.passed());
  CHECK_THROWS_AS(emit_report(empty, edir.string(), "xml"), LabError);
  CHECK(emit_report(empty, edir.string(), "text").size() == 1);
}

TEST_CASE("verify-sg report has nonnegative slack up to noise") {
  RunConfig c;
  c.kind = "verify-sg";
  c.replicas = 1000;
  const auto rec = run_experiment(c);
  const auto& t = rec.table("spectral_gap");
  CHECK(t.rows.size() == 21);
  for (const auto& row : t.rows) CHECK(std::stod(row[4]) >= -3.0 * std::stod(row[5]));
  CHECK(rec.metric("window_lhs") == doctest::Approx(15.0));
  CHECK(rec.metric("window_rhs") == doctest::Approx(17.0));
  CHECK(rec.passed());

  CellDomain d;
  d.box = Box{0.0, 3.0, 1.0};
  const auto a = gap_suite(d, 20, 1), b = gap_suite(d, 20, 1);
  REQUIRE(a.size() == 20);
  const std::vector<Point> pts{{0.3, 0.2}, {1.7, 0.9}, {2.2, 0.45}};
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i](pts) == b[i](pts));
}

TEST_CASE("universality pipeline on a coarse ladder") {
  RunConfig c;
  c.kind = "compare";
  c.eps = {0.4, 0.2};
  c.T = 0.25;
  c.replicas = 30;
  c.reference_replicas = 60;
  c.reference_nx = 32;
  c.constant_replicas = 100;
  c.ks_resamples = 50;
  const auto res = universality_trend(c);
  CHECK(res.a == 1.0);
  REQUIRE(res.rows.size() == 2);
  CHECK(res.reference.size() == 60);
  for (const auto& r : res.rows) {
    CHECK(r.samples.size() == 30);
    CHECK(r.ks > 0.0);
    CHECK(r.ks <= 1.0);
    CHECK(r.p_value > 0.0);
  }
  CHECK(res.decreasing == (res.rows[1].ks < res.rows[0].ks));
  const auto rec = run_experiment(c);
  CHECK(rec.table("universality").rows.size() == 2);
  CHECK(rec.metric("ks[eps=0.2]") == res.rows[1].ks);
}
