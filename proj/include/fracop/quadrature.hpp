#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "fracop/geometry.hpp"
#include "fracop/special_functions.hpp"

namespace fracop {

enum class TailMode { zero_tail, constant_tail };

/// Positive quadrature for the symmetrized singular integral
///   int_0^T D(t) t^{-1-2s} dt,   D(t) = u(x+tz) + u(x-tz) - 2u(x).
///
/// Layout of the nodes:
///  * near field (0, delta]: one node at t = delta with weight
///    delta^{-2s}/(2-2s), i.e. D(t) ~ D(delta) t^2/delta^2 there;
///  * (delta, T]: geometric cells of ratio 10^{1/nodes_per_decade}; each cell
///    carries a Gauss rule for the weight t^{-1-2s} restricted to the cell, so
///    the weights of a cell sum to the exact kernel integral over it.
struct LineQuadrature {
  FractionalOrder s{0.5};
  double delta = 0.0;
  double T = 0.0;
  TailMode tail_mode = TailMode::zero_tail;
  std::vector<double> nodes;    // strictly increasing, in (0, T]
  std::vector<double> weights;  // all positive

  /// int_T^infinity t^{-1-2s} dt.
  double tail_weight() const;
  /// Coefficient of u(x) in the bracket of directional_theta (before c(s)):
  /// 2 sum w_k plus the tail part when the tail is active.
  double total_weight() const;
};

/// Throws ConfigError unless 0 < delta < T, nodes_per_decade >= 4 and
/// points_per_cell is 1 or 2.
LineQuadrature build_quadrature(FractionalOrder s, double delta, double T, int nodes_per_decade,
                                TailMode tail_mode = TailMode::zero_tail, int points_per_cell = 2);

/// c(s) [ sum_k w_k (f(x+t_k z) + f(x-t_k z) - 2 f(x)) + tail ], with
/// tail = 2 (m - f(x)) T^{-2s}/(2s) for a constant far value m.
/// Requires x strictly inside the field's domain and |z| = 1.
double directional_theta(const Field& f, const Vec& x, const Vec& z, const LineQuadrature& q);

/// Reference evaluation of the same integral for a function of one variable at
/// t = 0, by adaptive Gauss-Kronrod. Used by tests and studies only.
struct OracleOptions {
  double tolerance = 1e-9;  // relative to the running magnitude, with an absolute floor
  std::optional<double> far_value;
  std::vector<double> breakpoints;  // t > 0 where f+f(-.) is not smooth
  int max_depth = 60;
  /// Below this radius D(t) is replaced by an even quartic fit (f must be C^4 there).
  double near_cutoff = 1e-4;
};

double oracle_theta(const std::function<double(double)>& f, FractionalOrder s, double T,
                    const OracleOptions& options = {});

/// Adaptive G7-K15 integral of fn over [a, b]; throws NumericalError when the
/// recursion cannot reach the requested tolerance.
double adaptive_integrate(const std::function<double(double)>& fn, double a, double b, double abs_tol,
                          int max_depth = 60);

}  // namespace fracop
