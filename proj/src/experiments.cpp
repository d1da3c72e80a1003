#include "fracop/experiments.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "fracop/errors.hpp"

namespace fracop {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string resolution_label(const Grid& g, int directions) {
  std::ostringstream os;
  for (int a = 0; a < g.dim(); ++a) os << (a ? "x" : "") << g.count(a);
  os << "/M" << directions;
  return os.str();
}

std::shared_ptr<const Grid> disk_grid(int n, int dim = 2) {
  std::vector<int> counts(dim, n);
  return std::make_shared<Grid>(Domain::ball({0.0, 0.0, 0.0}, 1.0, dim), counts);
}

// sup over interior nodes of |u - ref| and of |ref|.
std::pair<double, double> interior_error(const Field& u, const std::function<double(const Vec&)>& ref) {
  const Grid& g = u.grid();
  double err = 0.0, mag = 0.0;
  const auto vals = u.interior_values();
  for (std::size_t i = 0; i < g.interior_count(); ++i) {
    const double r = ref(g.node(g.interior_nodes()[i]));
    err = std::max(err, std::abs(vals[i] - r));
    mag = std::max(mag, std::abs(r));
  }
  return {err, mag};
}

double sup_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::string fmt_param(const char* name, double v) { return std::string(name) + "=" + format_number(v); }

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string to_string(Criterion c) { return c == Criterion::at_most ? "at_most" : "above"; }

const StudyRow& StudyResult::add(std::string stage, std::string parameter, double value, double error,
                                 double tolerance, std::string resolution, Criterion criterion) {
  StudyRow row;
  row.stage = std::move(stage);
  row.parameter = std::move(parameter);
  row.value = value;
  row.error = error;
  row.tolerance = tolerance;
  row.criterion = criterion;
  row.resolution = std::move(resolution);
  row.pass = std::isfinite(error) && (criterion == Criterion::at_most ? error <= tolerance : error > tolerance);
  rows.push_back(std::move(row));
  return rows.back();
}

bool StudyResult::passed() const {
  return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const StudyRow& r) { return r.pass; });
}

std::vector<std::string> StudyResult::failed_stages() const {
  std::vector<std::string> out;
  for (const auto& r : rows)
    if (!r.pass && std::find(out.begin(), out.end(), r.stage) == out.end()) out.push_back(r.stage);
  return out;
}

std::string StudyResult::csv() const {
  std::ostringstream os;
  os << "stage,parameter,value,error,tolerance,criterion,resolution,pass\n";
  for (const auto& r : rows) {
    os << r.stage << ',' << r.parameter << ',' << format_number(r.value) << ',' << format_number(r.error) << ','
       << format_number(r.tolerance) << ',' << to_string(r.criterion) << ',' << r.resolution << ','
       << (r.pass ? "true" : "false") << '\n';
  }
  return os.str();
}

std::string StudyResult::write_csv(const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / (name + ".csv")).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << csv();
  artifacts.push_back(path);
  return path;
}

// ---------------------------------------------------------------------------

double ProfileA::operator()(double x) const {
  const double v = r * r - x * x;
  return v > 0.0 ? std::pow(v, s.value()) / B : 0.0;
}

ProfileA make_profile_a(FractionalOrder s, double r, double constancy_tol) {
  if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("profile radius must be positive");
  const double sv = s.value();
  auto shape = [r, sv](double x) {
    const double v = r * r - x * x;
    return v > 0.0 ? std::pow(v, sv) : 0.0;
  };
  // Far enough that the truncated tail is a negligible part of the integral.
  const double T = 1e4 * r;
  auto theta_shape = [&](double x0) {
    OracleOptions o;
    o.far_value = 0.0;
    o.breakpoints = {r - x0, r + x0};
    return oracle_theta([&](double t) { return shape(x0 + t); }, s, T, o);
  };

  ProfileA a;
  a.s = s;
  a.r = r;
  a.B = theta_shape(0.0);
  if (!(std::abs(a.B) > 0.0) || !std::isfinite(a.B)) throw NumericalError("profile constant is degenerate");
  a.probe_points = {0.0, 0.25 * r, -0.25 * r, 0.5 * r, -0.5 * r};
  double lo = kInf, hi = -kInf;
  for (double x : a.probe_points) {
    const double v = (x == 0.0 ? a.B : theta_shape(x)) / a.B;
    a.probe_values.push_back(v);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  a.spread = (hi - lo) / std::max(std::abs(lo), std::abs(hi));
  if (!(a.spread <= constancy_tol)) {
    throw NumericalError("profile oracle is not constant: relative spread " + format_number(a.spread));
  }
  return a;
}

Field build_profile_a(FractionalOrder s, double r, std::shared_ptr<const Grid> grid1d, double constancy_tol) {
  if (!grid1d || grid1d->dim() != 1) throw ConfigError("build_profile_a needs a one-dimensional grid");
  const ProfileA a = make_profile_a(s, r, constancy_tol);
  ExteriorDatum g;
  g.evaluate = [a](const Vec& x) { return a(x[0]); };
  g.bound = std::abs(a(0.0));
  g.far_value = 0.0;
  g.far_radius = r;
  g.description = "profile_a(r=" + format_number(r) + ")";
  return Field::from_function(std::move(grid1d), g, g.evaluate);
}

ExteriorDatum profile_difference_datum(const ProfileA& a) {
  ExteriorDatum g;
  g.evaluate = [a](const Vec& x) { return a(x[0]) - a(x[1]); };
  g.bound = 2.0 * std::abs(a(0.0));
  g.description = "profile_difference(r=" + format_number(a.r) + ")";
  return g;
}

double profile_difference_directional(FractionalOrder s, const Vec& v) {
  const double p = 2.0 * s.value();
  return std::pow(std::abs(v[0]), p) - std::pow(std::abs(v[1]), p);
}

// ---------------------------------------------------------------------------

StudyResult nonlinearity_experiment(const NonlinearityConfig& cfg) {
  const auto t0 = Clock::now();
  if (!cfg.s.strict_band()) throw ConfigError("nonlinearity experiment needs 1/2 < s < 1");
  if (!(cfg.epsilon > 0.0 && 2.0 * cfg.epsilon < 1.0)) throw ConfigError("epsilon must satisfy 0 < 2 eps < 1");
  if (!(cfg.bump_inner > 0.0 && cfg.bump_inner < cfg.bump_outer)) throw ConfigError("bump radii out of order");
  if (std::min(std::abs(cfg.bump_center[0]), std::abs(cfg.bump_center[1])) - cfg.bump_outer <= 1.0) {
    throw ConfigError("perturbation support must avoid the strips |x| <= 1 and |y| <= 1");
  }
  if (cfg.r <= 1.0) throw ConfigError("profile radius must exceed the unit disk");

  StudyResult res;
  res.name = "nonlinearity";
  const ProfileA a = make_profile_a(cfg.s, cfg.r);
  res.notes.push_back("B=" + format_number(a.B) + " spread=" + format_number(a.spread));
  const ExteriorDatum u = profile_difference_datum(a);

  auto grid = disk_grid(cfg.grid_n);
  const std::string label = resolution_label(*grid, cfg.directions.resolution);

  Problem p;
  p.grid = grid;
  p.spec = OperatorSpec::trace(cfg.s);
  p.datum = u;
  p.quadrature = cfg.quadrature;
  p.directions = cfg.directions;

  // Stage 1: directional values of the exact field.
  {
    const Field uf = Field::from_function(grid, u, u.evaluate);
    const LineQuadrature q = resolve_quadrature(p);
    const DirectionSet dirs = make_direction_set(2, cfg.directions.resolution);
    double err = 0.0, mag = 0.0;
    for (const Vec& x : cfg.probe_points) {
      for (const Vec& z : dirs.vectors) {
        const double target = profile_difference_directional(cfg.s, z);
        err = std::max(err, std::abs(directional_theta(uf, x, z, q) - target));
        mag = std::max(mag, std::abs(target));
      }
    }
    res.add("directional", "max_rel_error", mag, err / mag, cfg.directional_tolerance, label);
  }

  SolverOptions so;
  so.tol = cfg.solver_tol;
  so.threads = cfg.threads;

  // Stage 2: the solver recovers u.
  const SolveReport r_u = solve_dirichlet(p, so);
  const auto [err_u, mag_u] = interior_error(r_u.solution, u.evaluate);
  res.add("recovery", "converged", r_u.final_residual, r_u.final_residual, r_u.tolerance, label);
  res.add("recovery", "sup_rel_error", mag_u, err_u / mag_u, cfg.recovery_tolerance, label);

  // Stage 3: an off-axis bump in the datum leaves the solution unchanged.
  const ExteriorDatum bump =
      datum::scaled(cfg.epsilon, datum::radial_bump(1.0, cfg.bump_center, cfg.bump_inner, cfg.bump_outer));
  Problem pp = p;
  pp.datum = datum::sum({u, bump});
  const SolveReport r_p = solve_dirichlet(pp, so);
  const auto [err_p, mag_p] = interior_error(r_p.solution, u.evaluate);
  res.add("invariance", "converged", r_p.final_residual, r_p.final_residual, r_p.tolerance, label);
  res.add("invariance", "sup_rel_error", mag_p, err_p / mag_p, cfg.recovery_tolerance, label);
  {
    const DirectionSet dirs = make_direction_set(2, cfg.directions.resolution);
    const LineQuadrature q = resolve_quadrature(pp);
    int wrong = 0;
    for (const Vec& x : cfg.probe_points) {
      const PointEvaluation e = evaluate(pp.spec, r_p.solution, x, dirs, nullptr, q);
      const bool min_on_axis = std::abs(e.witnesses[0][1]) == 1.0;
      const bool max_on_axis = std::abs(e.witnesses[1][0]) == 1.0;
      if (!min_on_axis || !max_on_axis) ++wrong;
    }
    res.add("invariance", "off_axis_witnesses", static_cast<double>(cfg.probe_points.size()), wrong, 0.0, label);
  }

  // Stage 4: the difference datum has a strictly positive solution.
  Problem pd = p;
  pd.datum = bump;
  const SolveReport r_d = solve_dirichlet(pd, so);
  const auto w = r_d.solution.interior_values();
  const double w_min = *std::min_element(w.begin(), w.end());
  res.add("positivity", "converged", r_d.final_residual, r_d.final_residual, r_d.tolerance, label);
  res.add("positivity", "min_interior", w_min, w_min, 0.0, label, Criterion::above);

  std::vector<double> diff(w.size());
  const auto up = r_p.solution.interior_values();
  const auto uu = r_u.solution.interior_values();
  for (std::size_t i = 0; i < w.size(); ++i) diff[i] = up[i] - uu[i];
  const double gap = sup_diff(w, diff);
  res.add("nonlinearity", "gap", gap, gap, 10.0 * cfg.solver_tol, label, Criterion::above);

  res.wall_seconds = seconds_since(t0);
  return res;
}

// ---------------------------------------------------------------------------

Problem s_limit_problem(int grid_n, int resolution) {
  Problem p;
  p.grid = disk_grid(grid_n);
  p.spec = OperatorSpec::trace(FractionalOrder(0.75));
  p.datum = datum::truncated_saddle(2.0, 3.0);
  p.quadrature.tail_mode = TailMode::constant_tail;
  p.directions.resolution = resolution;
  return p;
}

StudyResult s_limit_study(const Problem& problem_template, const std::function<double(const Vec&)>& reference,
                          const SLimitConfig& cfg) {
  const auto t0 = Clock::now();
  if (!problem_template.grid || problem_template.grid->dim() != 2) throw ConfigError("s_limit_study needs N = 2");
  if (cfg.s_list.empty()) throw ConfigError("s_list is empty");
  StudyResult res;
  res.name = "s_limit";
  const std::string label = resolution_label(*problem_template.grid, problem_template.directions.resolution);

  std::vector<OperatorKind> kinds{OperatorKind::trace};
  if (cfg.include_midrange) kinds.push_back(OperatorKind::midrange);
  for (OperatorKind kind : kinds) {
    const std::string stage = to_string(kind);
    double prev = kInf;
    for (std::size_t i = 0; i < cfg.s_list.size(); ++i) {
      const FractionalOrder s(cfg.s_list[i]);
      Problem p = problem_template;
      p.spec = kind == OperatorKind::trace ? OperatorSpec::trace(s) : OperatorSpec::midrange(s);
      const SolveReport rep = solve_dirichlet(p, cfg.solver);
      const auto [err, mag] = interior_error(rep.solution, reference);
      const bool last = i + 1 == cfg.s_list.size();
      const double tol = last ? std::max(cfg.final_tolerance * mag, 10.0 * rep.tolerance) : kInf;
      res.add(stage, fmt_param("s", s.value()) + ":converged", s.value(), rep.final_residual, rep.tolerance, label);
      res.add(stage, fmt_param("s", s.value()) + ":sup_error", s.value(), err, tol, label);
      if (i > 0) res.add(stage, fmt_param("s", s.value()) + ":increase", s.value(), err - prev, 0.0, label);
      prev = err;
    }
  }
  res.wall_seconds = seconds_since(t0);
  return res;
}

// ---------------------------------------------------------------------------

ExteriorDatum quadratic_probe(const std::vector<double>& A, int dim, double inner, double outer) {
  if (dim < 1 || dim > kMaxDim || A.size() != static_cast<std::size_t>(dim * dim)) {
    throw ConfigError("quadratic_probe: A must be N x N with 1 <= N <= 3");
  }
  if (!(inner > 0.0 && inner < outer)) throw ConfigError("quadratic_probe: need 0 < inner < outer");
  double norm_a = 0.0;
  for (double v : A) norm_a += std::abs(v);
  ExteriorDatum g;
  g.evaluate = [A, dim, inner, outer](const Vec& x) {
    const double r = norm(x);
    if (r >= outer) return 0.0;
    double q = 0.0;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) q += A[i * dim + j] * x[i] * x[j];
    return q * datum::smooth_cutoff(r, inner, outer);
  };
  g.bound = norm_a * outer * outer;
  g.far_value = 0.0;
  g.far_radius = outer;
  g.description = "quadratic_probe";
  return g;
}

StudyResult eigen_limit_check(const ExteriorDatum& phi, const std::vector<double>& A, int dim,
                              const EigenLimitConfig& cfg) {
  const auto t0 = Clock::now();
  if (dim < 2 || dim > 3 || A.size() != static_cast<std::size_t>(dim * dim)) {
    throw ConfigError("eigen_limit_check needs N in {2, 3} and an N x N matrix");
  }
  Eigen::MatrixXd M(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) M(i, j) = 2.0 * A[i * dim + j];
  if (!M.isApprox(M.transpose(), 1e-14) && M.norm() > 0.0) throw ConfigError("A must be symmetric");
  const Eigen::VectorXd hess = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M).eigenvalues();

  StudyResult res;
  res.name = "eigen_limit";
  // A grid whose only interior node is the origin; every sample is a datum value.
  const double rho = cfg.delta / 4.0;
  std::vector<int> counts(dim, 3);
  auto grid = std::make_shared<Grid>(Domain::ball({0.0, 0.0, 0.0}, rho, dim), counts);
  const Field field = Field::from_function(grid, phi, phi.evaluate);
  const DirectionSet dirs = make_direction_set(dim, cfg.resolution);
  const SubspaceSet subs = make_subspace_set(cfg.subspace_normals, cfg.subspace_inplane);
  const double T = std::max(cfg.T, phi.far_value ? phi.far_radius : 0.0);
  const TailMode tail = phi.far_value ? TailMode::constant_tail : TailMode::zero_tail;
  const std::string label = "M" + std::to_string(cfg.resolution) +
                            (dim == 3 ? "/S" + std::to_string(cfg.subspace_normals) + "x" +
                                            std::to_string(cfg.subspace_inplane)
                                      : std::string());

  double prev = kInf;
  for (std::size_t i = 0; i < cfg.s_list.size(); ++i) {
    const FractionalOrder s(cfg.s_list[i]);
    const LineQuadrature q = build_quadrature(s, cfg.delta, T, cfg.nodes_per_decade, tail);
    const PointEvaluation e = evaluate(OperatorSpec::trace(s), field, {0.0, 0.0, 0.0}, dirs,
                                       dim == 3 ? &subs : nullptr, q);
    const bool last = i + 1 == cfg.s_list.size();
    double worst = 0.0;
    for (int k = 0; k < dim; ++k) {
      const double ref = hess[k];
      const double err = std::abs(e.lambda[k] - ref) / (std::abs(ref) > 0.0 ? std::abs(ref) : 1.0);
      worst = std::max(worst, err);
      res.add(fmt_param("s", s.value()), "lambda" + std::to_string(k + 1), e.lambda[k], err,
              last ? cfg.tolerance : kInf, label);
    }
    if (i > 0) res.add(fmt_param("s", s.value()), "max_error_increase", s.value(), worst - prev, 0.0, label);
    prev = worst;
  }
  res.wall_seconds = seconds_since(t0);
  return res;
}

// ---------------------------------------------------------------------------

namespace {

struct Rng {
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(gen); }
  std::mt19937_64 gen;
};

ExteriorDatum random_gaussians(Rng& rng, int dim, int count) {
  std::vector<ExteriorDatum> terms;
  for (int i = 0; i < count; ++i) {
    Vec c{};
    for (int d = 0; d < dim; ++d) c[d] = rng.uniform(-2.5, 2.5);
    terms.push_back(datum::gaussian(rng.uniform(-1.0, 1.0), c, rng.uniform(0.3, 0.8)));
  }
  return datum::sum(std::move(terms));
}

Vec random_interior_point(Rng& rng, int dim, double radius) {
  for (;;) {
    Vec x{};
    for (int d = 0; d < dim; ++d) x[d] = rng.uniform(-radius, radius);
    if (norm(x) < radius) return x;
  }
}

Field random_field(Rng& rng, std::shared_ptr<const Grid> grid) {
  ExteriorDatum g = random_gaussians(rng, grid->dim(), 3);
  std::vector<double> vals(grid->interior_count());
  for (double& v : vals) v = rng.uniform(-1.0, 1.0);
  return Field(std::move(grid), std::move(g), std::move(vals));
}

Field shifted(const Field& f, double c) {
  std::vector<double> vals(f.interior_values().begin(), f.interior_values().end());
  for (double& v : vals) v += c;
  return Field(f.grid_ptr(), datum::sum({f.datum(), datum::constant(c)}), std::move(vals));
}

LineQuadrature field_quadrature(FractionalOrder s, const Grid& g) {
  return build_quadrature(s, 4.0 * g.min_spacing(), 8.0 * g.domain().diameter(), 16);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace

StudyResult structural_identities(const PropertiesConfig& cfg) {
  const auto t0 = Clock::now();
  StudyResult res;
  res.name = "structural";
  Rng rng(cfg.seed);
  const FractionalOrder s = cfg.s;

  auto grid2 = disk_grid(cfg.field_grid_n, 2);
  auto grid3 = disk_grid(std::max(5, cfg.field_grid_n / 2), 3);
  const DirectionSet dirs2 = make_direction_set(2, cfg.resolution);
  const DirectionSet dirs3 = make_direction_set(3, 8);
  const SubspaceSet subs3 = make_subspace_set(6, 12);
  const SearchLayout lay2 = make_search_layout(dirs2);
  const SearchLayout lay3 = make_search_layout(dirs3, &subs3);
  const LineQuadrature q2 = field_quadrature(s, *grid2);
  const LineQuadrature q3 = field_quadrature(s, *grid3);
  const std::string label2 = resolution_label(*grid2, cfg.resolution);

  const std::vector<OperatorSpec> specs{OperatorSpec::trace(s), OperatorSpec::midrange(s),
                                        OperatorSpec::weighted(s, {0.7, 1.9}),
                                        OperatorSpec::pucci_plus(s, 0.5, 2.0),
                                        OperatorSpec::pucci_minus(s, 0.5, 2.0), OperatorSpec::classical_mean(s)};

  double mid_err = 0.0, hom_err = 0.0, odd_err = 0.0, kill_err = 0.0, shift_err = 0.0;
  for (int i = 0; i < cfg.random_fields; ++i) {
    const Field f = random_field(rng, grid2);
    const Vec x = random_interior_point(rng, 2, 0.8);
    const auto theta = theta_values(f, x, lay2, q2);
    const PointEvaluation tr = assemble(OperatorSpec::trace(s), lay2, theta, x);
    const PointEvaluation mr = assemble(OperatorSpec::midrange(s), lay2, theta, x);
    mid_err = std::max(mid_err, std::abs(mr.operator_value - 0.5 * tr.operator_value) /
                                    std::max(1.0, std::abs(tr.operator_value)));

    const double k = rng.uniform(0.2, 5.0);
    const double c = rng.uniform(-3.0, 3.0);
    const auto theta_k = theta_values(f.scaled(k), x, lay2, q2);
    const auto theta_neg = theta_values(f.scaled(-k), x, lay2, q2);
    const auto theta_c = theta_values(shifted(f, c), x, lay2, q2);
    const Field flat(grid2, datum::constant(c), std::vector<double>(grid2->interior_count(), c));
    const auto theta_flat = theta_values(flat, x, lay2, q2);
    for (const auto& spec : specs) {
      const double e = equation_value(spec, lay2, theta);
      hom_err = std::max(hom_err, rel(equation_value(spec, lay2, theta_k), k * e));
      shift_err = std::max(shift_err, rel(equation_value(spec, lay2, theta_c), e));
      kill_err = std::max(kill_err, std::abs(equation_value(spec, lay2, theta_flat)));
    }
    // Odd symmetry: trace and midrange are linear in u, P^+(-u) = -P^-(u).
    odd_err = std::max(odd_err, rel(equation_value(specs[0], lay2, theta_neg), -k * equation_value(specs[0], lay2, theta)));
    odd_err = std::max(odd_err, rel(equation_value(specs[1], lay2, theta_neg), -k * equation_value(specs[1], lay2, theta)));
    odd_err = std::max(odd_err, rel(equation_value(specs[3], lay2, theta_neg), -k * equation_value(specs[4], lay2, theta)));
  }
  res.add("midrange_trace", "max_rel_diff", cfg.random_fields, mid_err, 1e-12, label2);
  res.add("homogeneity", "max_rel_diff", cfg.random_fields, hom_err, 1e-10, label2);
  res.add("homogeneity", "negative_k_rel_diff", cfg.random_fields, odd_err, 1e-10, label2);
  res.add("constant_kill", "max_abs_value", cfg.random_fields, kill_err, 1e-10, label2);
  res.add("constant_kill", "shift_rel_diff", cfg.random_fields, shift_err, 1e-10, label2);

  double order_violation = -kInf;
  for (int i = 0; i < cfg.ordering_evaluations; ++i) {
    const bool three = i % 2 == 1;
    const Field f = random_field(rng, three ? grid3 : grid2);
    const Vec x = random_interior_point(rng, three ? 3 : 2, 0.7);
    const SearchLayout& lay = three ? lay3 : lay2;
    const auto theta = theta_values(f, x, lay, three ? q3 : q2);
    const PointEvaluation e = assemble(OperatorSpec::trace(s), lay, theta, x);
    for (std::size_t k = 0; k + 1 < e.lambda.size(); ++k)
      order_violation = std::max(order_violation, e.lambda[k] - e.lambda[k + 1]);
  }
  res.add("ordering", "max_lambda_k_minus_next", cfg.ordering_evaluations, order_violation, 0.0,
          label2 + "+3d");
  res.wall_seconds = seconds_since(t0);
  return res;
}

StudyResult pucci_sandwich(const PropertiesConfig& cfg) {
  const auto t0 = Clock::now();
  StudyResult res;
  res.name = "pucci_sandwich";
  Rng rng(cfg.seed + 1);
  double worst = -kInf;
  for (int i = 0; i < cfg.coefficient_draws; ++i) {
    const int dim = 2 + i % 2;
    const double lower = rng.uniform(0.1, 1.0);
    const double upper = lower + rng.uniform(0.0, 3.0);
    std::vector<double> a(dim);
    for (double& v : a) v = rng.uniform(lower, upper);
    for (int j = 0; j < cfg.lambda_draws; ++j) {
      std::vector<double> lambda(dim);
      for (double& v : lambda) v = rng.uniform(-5.0, 5.0);
      std::sort(lambda.begin(), lambda.end());
      double w = 0.0;
      for (int k = 0; k < dim; ++k) w += a[k] * lambda[k];
      const double hi = pucci_combination(lambda, lower, upper, PucciSign::plus);
      const double lo = pucci_combination(lambda, lower, upper, PucciSign::minus);
      worst = std::max({worst, w - hi, lo - w});
    }
  }
  res.add("sandwich", "max_violation", cfg.coefficient_draws * cfg.lambda_draws, worst, 1e-12, "exact");
  res.wall_seconds = seconds_since(t0);
  return res;
}

StudyResult comparison_study(const PropertiesConfig& cfg) {
  const auto t0 = Clock::now();
  StudyResult res;
  res.name = "comparison";
  Rng rng(cfg.seed + 2);
  const FractionalOrder s = cfg.s;
  auto grid = disk_grid(cfg.solve_grid_n);
  const std::string label = resolution_label(*grid, cfg.resolution);
  const std::vector<OperatorSpec> specs{OperatorSpec::trace(s), OperatorSpec::midrange(s),
                                        OperatorSpec::pucci_plus(s, 0.5, 2.0),
                                        OperatorSpec::pucci_minus(s, 0.5, 2.0),
                                        OperatorSpec::weighted(s, {0.7, 1.9})};
  SolverOptions so;
  so.tol = cfg.solver_tol;
  so.threads = cfg.threads;

  for (int i = 0; i < cfg.comparison_pairs; ++i) {
    const ExteriorDatum g1 = datum::sum({random_gaussians(rng, 2, 3), datum::constant(rng.uniform(-0.5, 0.5))});
    const double c0 = rng.uniform(0.0, 0.2);
    const double b = rng.uniform(0.0, 1.0);
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double radius = rng.uniform(1.5, 2.5);
    // The bump's plateau lies outside the unit disk, so sup |g1 - g2| = c0 + b there.
    const ExteriorDatum d = datum::sum(
        {datum::constant(c0),
         datum::radial_bump(b, {radius * std::cos(angle), radius * std::sin(angle), 0.0}, 0.3, 0.6)});
    const ExteriorDatum g2 = datum::sum({g1, datum::scaled(-1.0, d)});

    Problem p;
    p.grid = grid;
    p.spec = specs[i % specs.size()];
    p.directions.resolution = cfg.resolution;
    p.datum = g1;
    const SolveReport r1 = solve_dirichlet(p, so);
    p.datum = g2;
    const SolveReport r2 = solve_dirichlet(p, so);
    const double tol = std::max(r1.tolerance, r2.tolerance);

    const auto u1 = r1.solution.interior_values();
    const auto u2 = r2.solution.interior_values();
    double order = -kInf;
    for (std::size_t k = 0; k < u1.size(); ++k) order = std::max(order, u2[k] - u1[k]);
    const std::string tag = "pair" + std::to_string(i) + ":" + to_string(p.spec.kind);
    res.add("ordered", tag, tol, order, 10.0 * tol, label);
    res.add("dependence", tag, c0 + b, sup_diff(u1, u2) - (c0 + b), 10.0 * tol, label);
    res.add("converged", tag, tol, std::max(r1.final_residual, r2.final_residual), tol, label);
  }
  res.wall_seconds = seconds_since(t0);
  return res;
}

StudyResult solver_properties(const PropertiesConfig& cfg) {
  const auto t0 = Clock::now();
  StudyResult res;
  res.name = "solver_properties";
  Rng rng(cfg.seed + 3);
  auto grid = disk_grid(cfg.solve_grid_n);
  const std::string label = resolution_label(*grid, cfg.resolution);
  SolverOptions so;
  so.tol = cfg.solver_tol;
  so.threads = cfg.threads;

  Problem p;
  p.grid = grid;
  p.spec = OperatorSpec::trace(cfg.s);
  p.directions.resolution = cfg.resolution;
  p.datum = random_gaussians(rng, 2, 3);

  // Discrete uniqueness probed from three starting points.
  {
    const DiscreteOperator op(p);
    std::vector<SolveReport> reps;
    for (InitialGuess guess : {InitialGuess::datum_mean, InitialGuess::datum_min, InitialGuess::datum_max}) {
      SolverOptions o = so;
      o.guess = guess;
      reps.push_back(solve_dirichlet(op, o));
    }
    double spread = 0.0;
    for (std::size_t i = 1; i < reps.size(); ++i)
      spread = std::max(spread, sup_diff(reps[0].solution.interior_values(), reps[i].solution.interior_values()));
    res.add("uniqueness", "max_spread", 3.0, spread, 10.0 * reps[0].tolerance, label);
  }

  // Strong comparison: g1 - g2 > 0 on an annulus around the domain.
  {
    const double eps = 0.5;
    const ExteriorDatum ring = datum::sum(
        {datum::radial_bump(1.0, {0.0, 0.0, 0.0}, 1.6, 2.0),
         datum::scaled(-1.0, datum::radial_bump(1.0, {0.0, 0.0, 0.0}, 1.05, 1.4))});
    const SolveReport r2 = solve_dirichlet(p, so);
    Problem p1 = p;
    p1.datum = datum::sum({p.datum, datum::scaled(eps, ring)});
    const SolveReport r1 = solve_dirichlet(p1, so);
    double gap = kInf;
    const auto u1 = r1.solution.interior_values();
    const auto u2 = r2.solution.interior_values();
    for (std::size_t k = 0; k < u1.size(); ++k) gap = std::min(gap, u1[k] - u2[k]);
    res.add("strong_comparison", "min_gap", eps, gap, 10.0 * std::max(r1.tolerance, r2.tolerance), label,
            Criterion::above);
  }

  // Constants solve every problem and the iteration sees it immediately.
  {
    Problem pc = p;
    const double c = 0.37;
    pc.datum = datum::constant(c);
    const SolveReport r = solve_dirichlet(pc, so);
    double dev = 0.0;
    for (double v : r.solution.interior_values()) dev = std::max(dev, std::abs(v - c));
    res.add("constant_datum", "iterations", r.iterations, r.iterations, 2.0, label);
    res.add("constant_datum", "max_deviation", c, dev, 1e-12, label);
  }
  res.wall_seconds = seconds_since(t0);
  return res;
}

StudyResult properties_study(const PropertiesConfig& cfg) {
  const auto t0 = Clock::now();
  StudyResult all;
  all.name = "properties";
  for (StudyResult part : {structural_identities(cfg), pucci_sandwich(cfg), comparison_study(cfg),
                           solver_properties(cfg)}) {
    for (auto& r : part.rows) {
      r.stage = part.name + "/" + r.stage;
      all.rows.push_back(std::move(r));
    }
  }
  all.wall_seconds = seconds_since(t0);
  return all;
}

}  // namespace fracop
