#pragma once

#include <span>
#include <string>
#include <vector>

#include "fracop/directions.hpp"
#include "fracop/geometry.hpp"
#include "fracop/quadrature.hpp"
#include "fracop/special_functions.hpp"

namespace fracop {

enum class OperatorKind { trace, midrange, weighted, pucci_plus, pucci_minus, classical_mean };

std::string to_string(OperatorKind kind);
OperatorKind operator_kind_from_string(const std::string& name);

/// Which combination of fractional eigenvalues to apply.
///
/// Two sign conventions coexist and both are reported:
///  * equation form E(u): trace -> sum Lambda_k, midrange -> (Lambda_1 + Lambda_N)/2,
///    weighted -> sum a_k Lambda_k, pucci -> P^{+/-}, classical_mean -> mean Theta;
///    Dirichlet problems are posed as E(u) = f;
///  * operator form: the "(-Delta)"-type operators (trace, midrange,
///    classical_mean) carry a leading minus, the others equal E(u).
struct OperatorSpec {
  OperatorKind kind = OperatorKind::trace;
  FractionalOrder s{0.75};
  std::vector<double> coefficients;  // weighted: a_1..a_N
  double lower = 1.0;                // pucci: theta
  double upper = 1.0;                // pucci: Theta

  static OperatorSpec trace(FractionalOrder s);
  static OperatorSpec midrange(FractionalOrder s);
  static OperatorSpec weighted(FractionalOrder s, std::vector<double> a);
  static OperatorSpec pucci_plus(FractionalOrder s, double lower, double upper);
  static OperatorSpec pucci_minus(FractionalOrder s, double lower, double upper);
  static OperatorSpec classical_mean(FractionalOrder s);

  /// Throws std::domain_error when the coefficients are not admissible for
  /// dimension N (a_i >= 0, a_1 > 0, a_N > 0; 0 < theta <= Theta).
  void validate(int dim) const;
  /// True when an intermediate Lambda_k (1 < k < N) enters the combination.
  bool needs_intermediate(int dim) const;
  /// Upper bound of the total coefficient mass sum a_k over the admissible class.
  double coefficient_sum(int dim) const;
  /// operator_value = sign * equation_value.
  double operator_sign() const;
};

enum class PucciSign { plus, minus };

/// P^+ = Theta sum_{Lambda>0} Lambda + theta sum_{Lambda<0} Lambda, P^- swaps
/// theta and Theta. Throws std::domain_error unless 0 < theta <= Theta.
double pucci_combination(std::span<const double> lambda, double lower, double upper, PucciSign sign);

struct PointEvaluation {
  Vec x{};
  std::vector<double> lambda;   // Lambda_1..Lambda_N (NaN where not computed)
  std::vector<Vec> witnesses;   // extremal direction per k
  bool lambda_complete = true;  // false if an intermediate eigenvalue was skipped
  double theta_mean = 0.0;      // average of Theta over the direction set
  double equation_value = 0.0;
  double operator_value = 0.0;
};

/// Theta_z(x) for every direction of the layout.
std::vector<double> theta_values(const Field& f, const Vec& x, const SearchLayout& layout,
                                 const LineQuadrature& q);

/// Combines per-direction Theta values into eigenvalues and the operator value.
PointEvaluation assemble(const OperatorSpec& spec, const SearchLayout& layout, std::span<const double> theta,
                         const Vec& x = {});

/// Only the equation-form value (no witnesses); used inside solver sweeps.
double equation_value(const OperatorSpec& spec, const SearchLayout& layout, std::span<const double> theta);

/// Full point evaluation. `subs` is required when N = 3 and the operator needs
/// Lambda_2 (ConfigError otherwise).
PointEvaluation evaluate(const OperatorSpec& spec, const Field& f, const Vec& x, const DirectionSet& dirs,
                         const SubspaceSet* subs, const LineQuadrature& q);

}  // namespace fracop
