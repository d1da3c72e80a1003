#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fracop/geometry.hpp"
#include "fracop/operators.hpp"
#include "fracop/quadrature.hpp"
#include "fracop/solver.hpp"

namespace fracop {

/// Shortest round-trip decimal form, independent of the C locale.
std::string format_number(double v);

enum class Criterion { at_most, above };

std::string to_string(Criterion c);

/// One checked quantity. `pass` is derived from error, tolerance and criterion
/// by StudyResult::add and never set by hand.
struct StudyRow {
  std::string stage;
  std::string parameter;
  double value = 0.0;
  double error = 0.0;
  double tolerance = 0.0;
  Criterion criterion = Criterion::at_most;
  std::string resolution;
  bool pass = false;
};

struct StudyResult {
  std::string name;
  std::vector<StudyRow> rows;
  std::vector<std::string> artifacts;
  std::vector<std::string> notes;
  double wall_seconds = 0.0;

  /// at_most: pass iff error <= tolerance; above: pass iff error > tolerance.
  /// A non-finite error always fails.
  const StudyRow& add(std::string stage, std::string parameter, double value, double error,
                      double tolerance, std::string resolution, Criterion criterion = Criterion::at_most);

  /// True iff there is at least one row and every row passes.
  bool passed() const;
  /// Stage names of the failing rows, in order, without repeats.
  std::vector<std::string> failed_stages() const;
  std::string csv() const;
  /// Writes <dir>/<name>.csv and records it in artifacts.
  std::string write_csv(const std::string& dir);
};

// ---------------------------------------------------------------------------
// The profile a(x) of the nonlinearity construction.

/// a(x) = (r^2 - x^2)_+^s / B with B the oracle value of Theta for
/// (r^2 - x^2)_+^s at x = 0. Then Theta a == 1 on (-r, r).
struct ProfileA {
  FractionalOrder s{0.75};
  double r = 2.0;
  double B = 0.0;
  std::vector<double> probe_points;  // where constancy was checked
  std::vector<double> probe_values;  // Theta a at the probe points
  /// Largest pairwise relative spread of probe_values.
  double spread = 0.0;

  double operator()(double x) const;
};

/// Throws ConfigError unless r > 0 and NumericalError when the oracle values at
/// {0, +-r/4, +-r/2} disagree by more than `constancy_tol` relative.
ProfileA make_profile_a(FractionalOrder s, double r, double constancy_tol = 1e-3);

/// The profile as a field on a one-dimensional grid, datum a outside.
Field build_profile_a(FractionalOrder s, double r, std::shared_ptr<const Grid> grid1d,
                      double constancy_tol = 1e-3);

/// u(x, y) = a(x) - a(y) as an exterior datum of R^2.
ExteriorDatum profile_difference_datum(const ProfileA& a);

/// |v_x|^{2s} - |v_y|^{2s}, the exact Theta_v of profile_difference_datum in the disk of
/// radius r.
double profile_difference_directional(FractionalOrder s, const Vec& v);

// ---------------------------------------------------------------------------

struct NonlinearityConfig {
  FractionalOrder s{0.75};
  int grid_n = 64;
  double r = 2.0;
  double epsilon = 0.1;
  Vec bump_center{2.0, 2.0, 0.0};
  double bump_inner = 0.2;
  double bump_outer = 0.5;
  /// The datum is not constant at infinity; its tail is truncated far out.
  QuadratureParams quadrature = [] {
    QuadratureParams q;
    q.T = 1e4;
    return q;
  }();
  DirectionParams directions;
  double solver_tol = 1e-7;
  int threads = 1;
  double directional_tolerance = 0.02;  // relative to max |target|
  double recovery_tolerance = 5e-3;     // relative to |u|_inf on the interior
  std::vector<Vec> probe_points{{0.0, 0.0, 0.0}, {0.3, -0.2, 0.0}, {-0.5, 0.4, 0.0}, {0.2, 0.6, 0.0}};
};

/// Stages: directional formula, recovery of u, invariance under the
/// off-axis perturbation (with axis witnesses), positivity of the solution for
/// the difference datum and the resulting nonlinearity gap.
StudyResult nonlinearity_experiment(const NonlinearityConfig& cfg);

struct SLimitConfig {
  std::vector<double> s_list{0.6, 0.75, 0.9, 0.95};
  double final_tolerance = 0.05;  // relative to |reference|_inf
  bool include_midrange = true;
  SolverOptions solver;
};

/// Solves the template problem for every s (kind trace, then midrange) and
/// records sup-norm errors against `reference` on the interior nodes.
StudyResult s_limit_study(const Problem& problem_template, const std::function<double(const Vec&)>& reference,
                          const SLimitConfig& cfg);

/// The standard s -> 1 problem: unit disk, truncated x^2 - y^2 datum.
Problem s_limit_problem(int grid_n = 64, int resolution = 64);

struct EigenLimitConfig {
  std::vector<double> s_list{0.6, 0.75, 0.9, 0.99};
  double tolerance = 0.05;  // relative, per eigenvalue, at the last s
  int resolution = 32;
  int subspace_normals = 12;
  int subspace_inplane = 32;
  double delta = 0.05;
  double T = 4.0;
  int nodes_per_decade = 16;
};

/// <A x, x> * cutoff(|x|), cutoff == 1 on |x| <= inner. A is row-major N x N.
ExteriorDatum quadratic_probe(const std::vector<double>& A, int dim, double inner = 1.0, double outer = 2.0);

/// Lambda_k^s phi(0) against the eigenvalues of 2A for each s.
StudyResult eigen_limit_check(const ExteriorDatum& phi, const std::vector<double>& A, int dim,
                              const EigenLimitConfig& cfg);

struct PropertiesConfig {
  std::uint64_t seed = 20240611;
  FractionalOrder s{0.75};
  int field_grid_n = 16;
  int random_fields = 10;
  int ordering_evaluations = 100;
  int coefficient_draws = 20;
  int lambda_draws = 20;
  int comparison_pairs = 5;
  int solve_grid_n = 32;
  int resolution = 32;
  double solver_tol = 1e-8;
  int threads = 1;
};

/// Midrange = trace / 2, eigenvalue ordering, homogeneity and constant kill.
StudyResult structural_identities(const PropertiesConfig& cfg);
/// P^- <= sum a_k Lambda_k <= P^+ over random admissible coefficients.
StudyResult pucci_sandwich(const PropertiesConfig& cfg);
/// Ordered random data give ordered solutions with |u1 - u2| <= |g1 - g2|.
StudyResult comparison_study(const PropertiesConfig& cfg);
/// Three initial guesses, an annulus strong comparison and the constant datum.
StudyResult solver_properties(const PropertiesConfig& cfg);
/// All of the above in one result.
StudyResult properties_study(const PropertiesConfig& cfg);

}  // namespace fracop
