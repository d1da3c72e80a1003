#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracop/directions.hpp"
#include "fracop/geometry.hpp"
#include "fracop/operators.hpp"
#include "fracop/quadrature.hpp"

namespace fracop {

struct QuadratureParams {
  /// Near-field radius; defaults to delta_cells * (smallest grid spacing).
  std::optional<double> delta;
  double delta_cells = 4.0;
  /// Truncation radius; defaults to 8 * diam(Omega).
  std::optional<double> T;
  int nodes_per_decade = 16;
  int points_per_cell = 2;
  TailMode tail_mode = TailMode::zero_tail;
};

struct DirectionParams {
  int resolution = 64;         // M
  int subspace_normals = 8;    // N = 3 only
  int subspace_inplane = 16;   // N = 3 only
};

/// Whether rhs values are targets for the equation form E(u) or for the
/// reported operator value (which differs by sign for trace, midrange and
/// classical_mean).
enum class RhsForm { equation, operator_form };

/// Dirichlet problem E(u) = f in Omega, u = g outside.
struct Problem {
  std::shared_ptr<const Grid> grid;
  OperatorSpec spec;
  ExteriorDatum datum;
  std::function<double(const Vec&)> rhs;  // empty means f == 0
  RhsForm rhs_form = RhsForm::equation;
  QuadratureParams quadrature;
  DirectionParams directions;
};

LineQuadrature resolve_quadrature(const Problem& p);
SearchLayout resolve_layout(const Problem& p);

/// The discrete operator of a problem with all u-independent work done once:
/// sample offsets in grid units, how many samples of every ray stay inside
/// Omega, and the datum contributions of the samples that leave it.
/// Requires a convex domain (all supported shapes are).
class DiscreteOperator {
 public:
  explicit DiscreteOperator(const Problem& p);

  const Problem& problem() const { return problem_; }
  const LineQuadrature& quadrature() const { return quad_; }
  const SearchLayout& layout() const { return layout_; }
  /// c(s) * (2 sum w_k + tail) * coefficient mass: the per-node normalization.
  double normalization() const { return normalization_; }
  /// Right-hand side in equation form at each interior node.
  std::span<const double> rhs() const { return rhs_; }

  /// Theta for every layout direction at interior node `slot`, given all node values.
  void theta_at(std::size_t slot, std::span<const double> node_values, std::span<double> out) const;
  /// E(u) - f at every interior node. `interior` holds u on interior nodes.
  std::vector<double> residual(std::span<const double> interior, int threads = 1) const;
  /// Node values (interior u, datum elsewhere) for an interior vector.
  std::vector<double> node_values(std::span<const double> interior) const;

 private:
  template <int Dim>
  void theta_impl(std::size_t slot, std::span<const double> nodes, std::span<double> out) const;

  Problem problem_;
  LineQuadrature quad_;
  SearchLayout layout_;
  double cs_ = 0.0;
  double normalization_ = 0.0;
  std::vector<double> rhs_;
  std::vector<double> exterior_nodes_;  // datum at each node
  std::vector<Vec> offsets_;            // [d * K + k] = t_k z_d / h
  std::vector<std::uint16_t> inside_;   // [(slot * D + d) * 2 + side]
  std::vector<double> ext_value_;       // [slot * D + d]
  std::vector<double> ext_weight_;      // [slot * D + d]
};

enum class InitialGuess { datum_mean, datum_min, datum_max };

struct SolverOptions {
  /// Defaults to 1e-8 * (1 + |g|_inf).
  std::optional<double> tol;
  long max_iter = 1000000;
  double damping = 0.9;
  int threads = 1;
  InitialGuess guess = InitialGuess::datum_mean;
  /// Overrides `guess` when set.
  std::optional<std::vector<double>> initial_values;
};

struct SolveReport {
  explicit SolveReport(Field f) : solution(std::move(f)) {}

  Field solution;
  long iterations = 0;
  std::vector<double> residual_history;  // sup |R| before each update, plus the final one
  double final_residual = 0.0;
  bool converged = false;
  double damping = 0.0;
  double tolerance = 0.0;
  double normalization = 0.0;
  double observed_rate = 0.0;  // geometric residual decay over the last iterations
  double initial_value = 0.0;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
};

/// Per-node residual E(u) - f of a field defined on the problem's grid.
std::vector<double> residual(const Problem& p, const Field& u);
double sup_norm(std::span<const double> values);

/// Datum values on the exterior nodes adjacent to interior nodes.
std::vector<double> boundary_sample(const Grid& grid, const ExteriorDatum& g);

/// Damped Jacobi iteration u <- u + tau R / W. Throws NumericalError on a
/// non-finite iterate; a run that hits max_iter returns converged = false.
SolveReport solve_dirichlet(const Problem& p, const SolverOptions& options = {});
SolveReport solve_dirichlet(const DiscreteOperator& op, const SolverOptions& options = {});

}  // namespace fracop
