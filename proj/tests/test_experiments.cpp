#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "fracop/errors.hpp"
#include "fracop/experiments.hpp"

using namespace fracop;

TEST_CASE("format_number round trips and ignores the locale") {
  for (double v : {0.0, 1.0, -2.5, 0.1, 1e-300, 6.02214076e23, 0.29920671030107451}) {
    const std::string s = format_number(v);
    CHECK(std::stod(s) == v);
    CHECK(s.find(',') == std::string::npos);
  }
  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("StudyResult derives pass from error, tolerance and criterion") {
  StudyResult r;
  r.name = "unit";
  CHECK_FALSE(r.passed());
  CHECK(r.add("a", "x", 1.0, 0.5, 0.5, "n=1").pass);
  CHECK_FALSE(r.add("a", "y", 1.0, 0.6, 0.5, "n=1").pass);
  CHECK(r.add("b", "z", 1.0, 0.6, 0.5, "n=1", Criterion::above).pass);
  CHECK_FALSE(r.add("c", "w", 1.0, 0.5, 0.5, "n=1", Criterion::above).pass);
  CHECK_FALSE(r.add("c", "nan", 1.0, std::nan(""), 1e300, "n=1").pass);
  CHECK_FALSE(r.add("d", "inf", 1.0, std::numeric_limits<double>::infinity(), 0.0, "n=1", Criterion::above).pass);
  CHECK_FALSE(r.passed());
  CHECK(r.failed_stages() == std::vector<std::string>{"a", "c", "d"});

  StudyResult ok;
  ok.add("only", "p", 0.0, 0.0, 0.0, "-");
  CHECK(ok.passed());
  CHECK(ok.failed_stages().empty());
}

TEST_CASE("StudyResult CSV layout") {
  StudyResult r;
  r.name = "csv_check";
  r.add("s", "p", 0.25, 1e-3, 0.01, "n=8");
  const std::string csv = r.csv();
  std::istringstream in(csv);
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  CHECK(header == "stage,parameter,value,error,tolerance,criterion,resolution,pass");
  CHECK(line == "s,p,0.25,0.001,0.01,at_most,n=8,true");

  const auto dir = std::filesystem::temp_directory_path() / "fracop_test_experiments";
  std::filesystem::create_directories(dir);
  const std::string path = r.write_csv(dir.string());
  CHECK(r.artifacts.back() == path);
  std::ifstream f(path);
  std::stringstream buf;
  buf << f.rdbuf();
  CHECK(buf.str() == csv);
  std::filesystem::remove_all(dir);
}

TEST_CASE("profile a: even, vanishing at +-r, constant Theta") {
  const ProfileA a = make_profile_a(FractionalOrder(0.75), 2.0);
  CHECK(a.B < 0.0);
  CHECK(std::abs(a.B + 1.3293403881791370) < 1e-6);
  CHECK(a.spread < 1e-3);
  CHECK(a(2.0) == 0.0);
  CHECK(a(-2.0) == 0.0);
  CHECK(a(3.0) == 0.0);
  for (double x : {0.1, 0.7, 1.3, 1.9}) CHECK(a(x) == a(-x));
  CHECK(std::abs(a(0.0) - std::pow(4.0, 0.75) / a.B) < 1e-14);
  CHECK_THROWS_AS(make_profile_a(FractionalOrder(0.75), 0.0), ConfigError);
  CHECK_THROWS_AS(make_profile_a(FractionalOrder(0.75), 2.0, 0.0), NumericalError);
}

TEST_CASE("profile-difference datum and directional formula") {
  const FractionalOrder s(0.75);
  const ProfileA a = make_profile_a(s, 2.0);
  const ExteriorDatum u = profile_difference_datum(a);
  CHECK(u({0.3, 0.3, 0}) == 0.0);
  CHECK(std::abs(u({0.5, 0.0, 0}) - (a(0.5) - a(0.0))) < 1e-15);
  CHECK(profile_difference_directional(s, {1, 0, 0}) == 1.0);
  CHECK(profile_difference_directional(s, {0, 1, 0}) == -1.0);
  CHECK(std::abs(profile_difference_directional(s, {std::sqrt(0.5), std::sqrt(0.5), 0})) < 1e-15);
}

TEST_CASE("eigenvalue limit: zero and isotropic quadratics") {
  EigenLimitConfig cfg;
  cfg.s_list = {0.9, 0.99};
  cfg.subspace_normals = 6;
  cfg.subspace_inplane = 12;
  cfg.resolution = 8;
  const std::vector<double> zero(9, 0.0);
  const StudyResult z = eigen_limit_check(quadratic_probe(zero, 3), zero, 3, cfg);
  for (const auto& row : z.rows)
    if (row.parameter.rfind("lambda", 0) == 0) CHECK(std::abs(row.value) < 1e-12);
  CHECK(z.passed());

  const std::vector<double> id{1, 0, 0, 0, 1, 0, 0, 0, 1};
  const StudyResult r = eigen_limit_check(quadratic_probe(id, 3), id, 3, cfg);
  CHECK(r.passed());
  // Isotropy: all eigenvalues equal at each s.
  for (double s : cfg.s_list) {
    std::vector<double> vals;
    for (const auto& row : r.rows)
      if (row.stage == "s=" + format_number(s) && row.parameter.rfind("lambda", 0) == 0) vals.push_back(row.value);
    REQUIRE(vals.size() == 3);
    CHECK(std::abs(vals[0] - vals[2]) < 1e-10 * std::abs(vals[2]));
    CHECK(std::abs(vals[1] - vals[0]) < 1e-10 * std::abs(vals[2]));
  }
}

TEST_CASE("s-limit study with a constant datum is exact") {
  Problem p = s_limit_problem(16, 16);
  p.datum = datum::constant(0.75);
  SLimitConfig cfg;
  cfg.s_list = {0.6, 0.9};
  cfg.include_midrange = false;
  const StudyResult r = s_limit_study(p, [](const Vec&) { return 0.75; }, cfg);
  for (const auto& row : r.rows)
    if (row.parameter.find("sup_error") != std::string::npos) CHECK(row.error < 1e-12);
  CHECK(r.rows.size() == 5);
}

TEST_CASE("nonlinearity experiment on a coarse grid") {
  NonlinearityConfig cfg;
  cfg.grid_n = 32;
  cfg.directions.resolution = 32;
  const StudyResult r = nonlinearity_experiment(cfg);
  CHECK(r.passed());
  for (const char* stage : {"directional", "recovery", "invariance", "positivity", "nonlinearity"}) {
    bool seen = false;
    for (const auto& row : r.rows) seen = seen || row.stage == stage;
    CHECK_MESSAGE(seen, stage);
  }
}

TEST_CASE("structural identities and Pucci sandwich on small inputs") {
  PropertiesConfig cfg;
  cfg.field_grid_n = 10;
  cfg.random_fields = 3;
  cfg.ordering_evaluations = 20;
  cfg.coefficient_draws = 5;
  cfg.lambda_draws = 5;
  cfg.resolution = 12;
  CHECK(structural_identities(cfg).passed());
  CHECK(pucci_sandwich(cfg).passed());
}
