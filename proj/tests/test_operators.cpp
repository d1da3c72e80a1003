#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>

#include "fracop/errors.hpp"
#include "fracop/experiments.hpp"
#include "fracop/operators.hpp"

using namespace fracop;

namespace {

const FractionalOrder kS(0.75);

std::vector<OperatorSpec> all_specs(int dim) {
  std::vector<double> a(dim, 1.0);
  a.front() = 0.7;
  a.back() = 1.9;
  return {OperatorSpec::trace(kS),          OperatorSpec::midrange(kS),
          OperatorSpec::weighted(kS, a),    OperatorSpec::pucci_plus(kS, 0.5, 2.0),
          OperatorSpec::pucci_minus(kS, 0.5, 2.0), OperatorSpec::classical_mean(kS)};
}

std::shared_ptr<const Grid> disk(int n, int dim = 2) {
  return std::make_shared<Grid>(Domain::ball({0, 0, 0}, 1.0, dim), std::vector<int>(dim, n));
}

Field random_field(std::mt19937_64& gen, std::shared_ptr<const Grid> g) {
  std::uniform_real_distribution<double> U(-1, 1);
  std::vector<double> v(g->interior_count());
  for (double& x : v) x = U(gen);
  const ExteriorDatum d = datum::sum({datum::gaussian(U(gen), {1.4, 0.2, -0.3}, 0.5),
                                      datum::gaussian(U(gen), {-0.6, -1.5, 0.4}, 0.7)});
  return Field(std::move(g), d, std::move(v));
}

LineQuadrature quad_for(const Grid& g, TailMode tail = TailMode::constant_tail) {
  return build_quadrature(kS, 4 * g.min_spacing(), 8 * g.domain().diameter(), 16, tail);
}

}  // namespace

TEST_CASE("kind names round trip") {
  for (const auto& spec : all_specs(2)) CHECK(operator_kind_from_string(to_string(spec.kind)) == spec.kind);
  CHECK_THROWS_AS(operator_kind_from_string("laplace"), ConfigError);
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(OperatorSpec::weighted(kS, {0.0, 1.0}).validate(2), std::domain_error);
  CHECK_THROWS_AS(OperatorSpec::weighted(kS, {1.0, 0.0}).validate(2), std::domain_error);
  CHECK_THROWS_AS(OperatorSpec::weighted(kS, {1.0, -1.0, 1.0}).validate(3), std::domain_error);
  CHECK_THROWS_AS(OperatorSpec::weighted(kS, {1.0, 1.0}).validate(3), std::domain_error);
  CHECK_NOTHROW(OperatorSpec::weighted(kS, {1.0, 0.0, 1.0}).validate(3));
  CHECK_THROWS_AS(OperatorSpec::pucci_plus(kS, 2.0, 1.0).validate(2), std::domain_error);
  CHECK_THROWS_AS(OperatorSpec::pucci_minus(kS, 0.0, 1.0).validate(2), std::domain_error);
  CHECK_FALSE(OperatorSpec::weighted(kS, {1.0, 0.0, 1.0}).needs_intermediate(3));
  CHECK(OperatorSpec::trace(kS).needs_intermediate(3));
  CHECK_FALSE(OperatorSpec::midrange(kS).needs_intermediate(3));
  CHECK_FALSE(OperatorSpec::trace(kS).needs_intermediate(2));
}

TEST_CASE("Pucci combination examples") {
  const std::vector<double> zero{0.0, 0.0, 0.0};
  CHECK(pucci_combination(zero, 1, 3, PucciSign::plus) == 0.0);
  CHECK(pucci_combination(zero, 1, 3, PucciSign::minus) == 0.0);
  const std::vector<double> l{-1.0, 2.0};
  CHECK(pucci_combination(l, 1, 3, PucciSign::plus) == 5.0);
  CHECK(pucci_combination(l, 1, 3, PucciSign::minus) == -1.0);
  const std::vector<double> m{-1.5, 0.25, 4.0};
  CHECK(pucci_combination(m, 1, 1, PucciSign::plus) == 2.75);
  CHECK(pucci_combination(m, 1, 1, PucciSign::minus) == 2.75);
  CHECK_THROWS_AS(pucci_combination(l, 3, 1, PucciSign::plus), std::domain_error);
}

TEST_CASE("Pucci extremals equal the brute-force corner sup and inf") {
  std::mt19937_64 gen(29);
  std::uniform_real_distribution<double> U(-5, 5), L(0.1, 1), W(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 2;
    const double lo = L(gen), hi = lo + W(gen);
    std::vector<double> lam(n);
    for (double& v : lam) v = U(gen);
    double best = -1e300, worst = 1e300;
    for (int mask = 0; mask < (1 << n); ++mask) {
      double s = 0;
      for (int k = 0; k < n; ++k) s += ((mask >> k) & 1 ? hi : lo) * lam[k];
      best = std::max(best, s);
      worst = std::min(worst, s);
    }
    CHECK(std::abs(pucci_combination(lam, lo, hi, PucciSign::plus) - best) < 1e-12);
    CHECK(std::abs(pucci_combination(lam, lo, hi, PucciSign::minus) - worst) < 1e-12);
    // Sandwich for interior coefficient draws.
    std::uniform_real_distribution<double> A(lo, hi);
    double s = 0;
    for (int k = 0; k < n; ++k) s += A(gen) * lam[k];
    CHECK(s <= best + 1e-12);
    CHECK(s >= worst - 1e-12);
  }
}

TEST_CASE("constant fields: all eigenvalues and operators vanish") {
  for (int dim : {2, 3}) {
    auto g = disk(dim == 2 ? 12 : 7, dim);
    const Field c = Field::from_function(g, datum::constant(-1.25), [](const Vec&) { return -1.25; });
    const DirectionSet dirs = make_direction_set(dim, 8);
    const SubspaceSet subs = make_subspace_set(4, 8);
    const LineQuadrature q = quad_for(*g);
    for (const auto& spec : all_specs(dim)) {
      const PointEvaluation e = evaluate(spec, c, {0.1, 0.0, 0.0}, dirs, &subs, q);
      for (double l : e.lambda) CHECK(std::abs(l) < 1e-13);
      CHECK(std::abs(e.operator_value) < 1e-13);
      CHECK(std::abs(e.equation_value) < 1e-13);
    }
  }
}

TEST_CASE("profile-difference field: trace vanishes, Lambda = (-1, 1)") {
  const ProfileA a = make_profile_a(kS, 2.0);
  const ExteriorDatum u = profile_difference_datum(a);
  auto g = disk(48);
  const Field f = Field::from_function(g, u, u.evaluate);
  const DirectionSet dirs = make_direction_set(2, 64);
  const LineQuadrature q = build_quadrature(kS, 4 * g->min_spacing(), 1e4, 16);
  for (const Vec& x : {Vec{0, 0, 0}, Vec{0.35, -0.2, 0}}) {
    const PointEvaluation tr = evaluate(OperatorSpec::trace(kS), f, x, dirs, nullptr, q);
    CHECK(std::abs(tr.lambda[0] + 1.0) < 0.02);
    CHECK(std::abs(tr.lambda[1] - 1.0) < 0.02);
    CHECK(std::abs(tr.operator_value) < 0.02);
    CHECK(tr.witnesses[0] == Vec{0, 1, 0});
    CHECK(tr.witnesses[1] == Vec{1, 0, 0});
  }
}

TEST_CASE("sign conventions and midrange = trace / 2") {
  std::mt19937_64 gen(31);
  auto g = disk(14);
  const DirectionSet dirs = make_direction_set(2, 16);
  const LineQuadrature q = quad_for(*g);
  for (int trial = 0; trial < 10; ++trial) {
    const Field f = random_field(gen, g);
    const Vec x{0.2, -0.1, 0};
    const PointEvaluation tr = evaluate(OperatorSpec::trace(kS), f, x, dirs, nullptr, q);
    const PointEvaluation mr = evaluate(OperatorSpec::midrange(kS), f, x, dirs, nullptr, q);
    const PointEvaluation w = evaluate(OperatorSpec::weighted(kS, {0.7, 1.9}), f, x, dirs, nullptr, q);
    const PointEvaluation mean = evaluate(OperatorSpec::classical_mean(kS), f, x, dirs, nullptr, q);
    CHECK(tr.operator_value == -(tr.lambda[0] + tr.lambda[1]));
    CHECK(std::abs(mr.operator_value - 0.5 * tr.operator_value) <= 1e-12 * std::max(1.0, std::abs(tr.operator_value)));
    CHECK(w.operator_value == 0.7 * w.lambda[0] + 1.9 * w.lambda[1]);
    CHECK(mean.operator_value == -mean.theta_mean);
    CHECK(tr.lambda[0] <= tr.lambda[1]);
    CHECK(mean.theta_mean >= tr.lambda[0]);
    CHECK(mean.theta_mean <= tr.lambda[1]);
  }
}

TEST_CASE("homogeneity for positive and negative factors") {
  std::mt19937_64 gen(37);
  auto g = disk(14);
  const DirectionSet dirs = make_direction_set(2, 16);
  const LineQuadrature q = quad_for(*g);
  const Field f = random_field(gen, g);
  const Vec x{-0.15, 0.3, 0};
  for (const auto& spec : all_specs(2)) {
    const double base = evaluate(spec, f, x, dirs, nullptr, q).operator_value;
    for (double k : {0.5, 3.0, 10.0}) {
      const double v = evaluate(spec, f.scaled(k), x, dirs, nullptr, q).operator_value;
      CHECK(std::abs(v - k * base) <= 1e-10 * std::max(1.0, std::abs(k * base)));
    }
  }
  for (const auto& spec : {OperatorSpec::trace(kS), OperatorSpec::midrange(kS), OperatorSpec::classical_mean(kS)}) {
    const PointEvaluation base = evaluate(spec, f, x, dirs, nullptr, q);
    const PointEvaluation neg = evaluate(spec, f.scaled(-2.0), x, dirs, nullptr, q);
    CHECK(std::abs(neg.operator_value + 2.0 * base.operator_value) <= 1e-10 * std::max(1.0, std::abs(base.operator_value)));
    // Witnesses swap.
    CHECK(neg.witnesses[0] == base.witnesses[1]);
  }
}

TEST_CASE("degenerate ellipticity at a touching point") {
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> P(0, 0.5);
  auto g = disk(14);
  const DirectionSet dirs = make_direction_set(2, 16);
  const LineQuadrature q = quad_for(*g);
  for (int trial = 0; trial < 10; ++trial) {
    const Field f = random_field(gen, g);
    const std::size_t touch = g->interior_count() / 3;
    std::vector<double> above(f.interior_values().begin(), f.interior_values().end());
    for (std::size_t i = 0; i < above.size(); ++i)
      if (i != touch) above[i] += P(gen);
    const Field h(g, datum::sum({f.datum(), datum::constant(P(gen))}), above);
    const Vec x = g->node(g->interior_nodes()[touch]);
    for (const auto& spec : all_specs(2)) {
      const PointEvaluation ef = evaluate(spec, f, x, dirs, nullptr, q);
      const PointEvaluation eh = evaluate(spec, h, x, dirs, nullptr, q);
      for (int k = 0; k < 2; ++k) CHECK(ef.lambda[k] <= eh.lambda[k] + 1e-14);
      CHECK(ef.equation_value <= eh.equation_value + 1e-14);
      if (spec.operator_sign() < 0) CHECK(ef.operator_value >= eh.operator_value - 1e-14);
    }
  }
}

TEST_CASE("mean consistency on a radial profile") {
  const ExteriorDatum radial = datum::gaussian(1.0, {0, 0, 0}, 0.8);
  auto tiny = std::make_shared<Grid>(Domain::ball({0, 0, 0}, 1e-4, 2), std::vector<int>{3, 3});
  const Field f = Field::from_function(tiny, radial, radial.evaluate);
  const DirectionSet dirs = make_direction_set(2, 24);
  const LineQuadrature q = build_quadrature(kS, 1e-3, 30, 16, TailMode::constant_tail);
  const PointEvaluation e = evaluate(OperatorSpec::classical_mean(kS), f, {0, 0, 0}, dirs, nullptr, q);
  const double single = directional_theta(f, {0, 0, 0}, {1, 0, 0}, q);
  CHECK(std::abs(e.theta_mean - single) < 1e-12 * std::abs(single));
  CHECK(std::abs(e.lambda[1] - e.lambda[0]) < 1e-12 * std::abs(single));
}

TEST_CASE("quarter-turn rotation leaves eigenvalues unchanged") {
  // Square grid symmetric under (x, y) -> (-y, x).
  const int n = 17;
  auto g = std::make_shared<Grid>(Domain::box({-1, -1, 0}, {1, 1, 0}, 2), std::vector<int>{n, n});
  std::mt19937_64 gen(43);
  std::uniform_real_distribution<double> U(-1, 1);
  std::vector<double> nodes(g->node_count());
  for (double& v : nodes) v = U(gen);
  const ExteriorDatum d = datum::gaussian(0.9, {1.3, 0.4, 0}, 0.5);
  ExteriorDatum rd = d;
  rd.evaluate = [d](const Vec& x) { return d({x[1], -x[0], 0}); };  // g(R^T x)

  std::vector<double> u(g->interior_count()), ru(g->interior_count());
  for (std::size_t i = 0; i < g->interior_count(); ++i) {
    const auto idx = g->multi_index(g->interior_nodes()[i]);
    u[i] = nodes[g->interior_nodes()[i]];
    // ru(x) = u(R^T x) with R^T (x, y) = (y, -x): index (i, j) -> (j, n-1-i).
    ru[i] = nodes[g->flat_index({idx[1], n - 1 - idx[0], 0})];
  }
  const Field f(g, d, u), rf(g, rd, ru);
  const DirectionSet dirs = make_direction_set(2, 16);
  const LineQuadrature q = build_quadrature(kS, 4 * g->min_spacing(), 24, 16, TailMode::constant_tail);
  for (const Vec& x : {Vec{0.25, -0.375, 0}, Vec{0.5, 0.125, 0}}) {
    const Vec rx{-x[1], x[0], 0};  // R x
    const PointEvaluation a = evaluate(OperatorSpec::trace(kS), f, x, dirs, nullptr, q);
    const PointEvaluation b = evaluate(OperatorSpec::trace(kS), rf, rx, dirs, nullptr, q);
    for (int k = 0; k < 2; ++k) CHECK(std::abs(a.lambda[k] - b.lambda[k]) < 1e-10);
  }
}

TEST_CASE("N = 3 evaluation needs subspaces only for intermediate eigenvalues") {
  auto g = disk(7, 3);
  std::mt19937_64 gen(47);
  const Field f = random_field(gen, g);
  const DirectionSet dirs = make_direction_set(3, 6);
  const SubspaceSet subs = make_subspace_set(5, 10);
  const LineQuadrature q = quad_for(*g);
  CHECK_THROWS_AS(evaluate(OperatorSpec::trace(kS), f, {0, 0, 0}, dirs, nullptr, q), ConfigError);
  const PointEvaluation mr = evaluate(OperatorSpec::midrange(kS), f, {0, 0, 0}, dirs, nullptr, q);
  CHECK_FALSE(mr.lambda_complete);
  CHECK(std::isnan(mr.lambda[1]));
  const PointEvaluation tr = evaluate(OperatorSpec::trace(kS), f, {0, 0, 0}, dirs, &subs, q);
  CHECK(tr.lambda_complete);
  CHECK(tr.lambda[0] <= tr.lambda[1]);
  CHECK(tr.lambda[1] <= tr.lambda[2]);
  const PointEvaluation mr_subs = evaluate(OperatorSpec::midrange(kS), f, {0, 0, 0}, dirs, &subs, q);
  CHECK(std::abs(mr_subs.operator_value + 0.5 * (tr.lambda[0] + tr.lambda[2])) < 1e-12);
  // Extra subspace directions can only widen the extremes.
  CHECK(tr.lambda[0] <= mr.lambda[0]);
  CHECK(tr.lambda[2] >= mr.lambda[2]);
  CHECK_THROWS_AS(evaluate(OperatorSpec::trace(kS), f, {0, 0, 0}, make_direction_set(2, 6), &subs, q), ConfigError);
}
