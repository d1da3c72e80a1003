#include "fracop/operators.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "fracop/errors.hpp"

namespace fracop {

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::trace: return "trace";
    case OperatorKind::midrange: return "midrange";
    case OperatorKind::weighted: return "weighted";
    case OperatorKind::pucci_plus: return "pucci_plus";
    case OperatorKind::pucci_minus: return "pucci_minus";
    case OperatorKind::classical_mean: return "classical_mean";
  }
  return "unknown";
}

OperatorKind operator_kind_from_string(const std::string& name) {
  for (auto kind : {OperatorKind::trace, OperatorKind::midrange, OperatorKind::weighted,
                    OperatorKind::pucci_plus, OperatorKind::pucci_minus, OperatorKind::classical_mean}) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown operator kind '" + name + "'");
}

OperatorSpec OperatorSpec::trace(FractionalOrder s) { return {OperatorKind::trace, s, {}, 1.0, 1.0}; }
OperatorSpec OperatorSpec::midrange(FractionalOrder s) { return {OperatorKind::midrange, s, {}, 1.0, 1.0}; }
OperatorSpec OperatorSpec::weighted(FractionalOrder s, std::vector<double> a) {
  return {OperatorKind::weighted, s, std::move(a), 1.0, 1.0};
}
OperatorSpec OperatorSpec::pucci_plus(FractionalOrder s, double lower, double upper) {
  return {OperatorKind::pucci_plus, s, {}, lower, upper};
}
OperatorSpec OperatorSpec::pucci_minus(FractionalOrder s, double lower, double upper) {
  return {OperatorKind::pucci_minus, s, {}, lower, upper};
}
OperatorSpec OperatorSpec::classical_mean(FractionalOrder s) {
  return {OperatorKind::classical_mean, s, {}, 1.0, 1.0};
}

void OperatorSpec::validate(int dim) const {
  switch (kind) {
    case OperatorKind::weighted: {
      if (static_cast<int>(coefficients.size()) != dim) {
        throw std::domain_error("weighted operator needs exactly N coefficients");
      }
      for (double a : coefficients) {
        if (!(a >= 0.0) || !std::isfinite(a)) throw std::domain_error("coefficients must be nonnegative");
      }
      if (!(coefficients.front() > 0.0) || !(coefficients.back() > 0.0)) {
        throw std::domain_error("weighted operator requires a_1 > 0 and a_N > 0");
      }
      break;
    }
    case OperatorKind::pucci_plus:
    case OperatorKind::pucci_minus:
      if (!(lower > 0.0) || !(lower <= upper) || !std::isfinite(upper)) {
        throw std::domain_error("Pucci bounds require 0 < theta <= Theta");
      }
      break;
    default:
      break;
  }
}

bool OperatorSpec::needs_intermediate(int dim) const {
  if (dim < 3) return false;
  switch (kind) {
    case OperatorKind::trace:
    case OperatorKind::pucci_plus:
    case OperatorKind::pucci_minus:
      return true;
    case OperatorKind::weighted:
      for (int k = 1; k + 1 < dim; ++k) {
        if (coefficients.at(k) != 0.0) return true;
      }
      return false;
    default:
      return false;
  }
}

double OperatorSpec::coefficient_sum(int dim) const {
  switch (kind) {
    case OperatorKind::trace: return static_cast<double>(dim);
    case OperatorKind::midrange: return 1.0;
    case OperatorKind::weighted: return std::accumulate(coefficients.begin(), coefficients.end(), 0.0);
    case OperatorKind::pucci_plus:
    case OperatorKind::pucci_minus: return upper * dim;
    case OperatorKind::classical_mean: return 1.0;
  }
  return 1.0;
}

double OperatorSpec::operator_sign() const {
  switch (kind) {
    case OperatorKind::trace:
    case OperatorKind::midrange:
    case OperatorKind::classical_mean:
      return -1.0;
    default:
      return 1.0;
  }
}

double pucci_combination(std::span<const double> lambda, double lower, double upper, PucciSign sign) {
  if (!(lower > 0.0) || !(lower <= upper)) throw std::domain_error("Pucci bounds require 0 < theta <= Theta");
  const double pos = sign == PucciSign::plus ? upper : lower;
  const double neg = sign == PucciSign::plus ? lower : upper;
  double value = 0.0;
  for (double l : lambda) {
    if (l > 0.0) {
      value += pos * l;
    } else if (l < 0.0) {
      value += neg * l;
    }
  }
  return value;
}

namespace {

double combine(const OperatorSpec& spec, std::span<const double> lambda, double mean) {
  const std::size_t n = lambda.size();
  switch (spec.kind) {
    case OperatorKind::trace: {
      double sum = 0.0;
      for (double l : lambda) sum += l;
      return sum;
    }
    case OperatorKind::midrange: return 0.5 * (lambda[0] + lambda[n - 1]);
    case OperatorKind::weighted: {
      double sum = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (spec.coefficients[k] != 0.0) sum += spec.coefficients[k] * lambda[k];
      }
      return sum;
    }
    case OperatorKind::pucci_plus: return pucci_combination(lambda, spec.lower, spec.upper, PucciSign::plus);
    case OperatorKind::pucci_minus: return pucci_combination(lambda, spec.lower, spec.upper, PucciSign::minus);
    case OperatorKind::classical_mean: return mean;
  }
  return 0.0;
}

double sphere_mean(const SearchLayout& layout, std::span<const double> theta) {
  double sum = 0.0;
  for (std::size_t i = 0; i < layout.sphere_count; ++i) sum += theta[i];
  return sum / static_cast<double>(layout.sphere_count);
}

}  // namespace

double equation_value(const OperatorSpec& spec, const SearchLayout& layout, std::span<const double> theta) {
  const int n = layout.dim;
  if (spec.kind == OperatorKind::classical_mean) return sphere_mean(layout, theta);
  std::array<double, kMaxDim> lambda{};
  const bool intermediate = spec.needs_intermediate(n);
  for (int k = 1; k <= n; ++k) {
    if (k > 1 && k < n && !intermediate) {
      lambda[k - 1] = 0.0;  // coefficient is zero
      continue;
    }
    lambda[k - 1] = lambda_k_search(layout, theta, k).value;
  }
  return combine(spec, std::span<const double>(lambda.data(), n), 0.0);
}

PointEvaluation assemble(const OperatorSpec& spec, const SearchLayout& layout, std::span<const double> theta,
                         const Vec& x) {
  const int n = layout.dim;
  PointEvaluation ev;
  ev.x = x;
  ev.lambda.assign(n, std::numeric_limits<double>::quiet_NaN());
  ev.witnesses.assign(n, Vec{});
  for (int k = 1; k <= n; ++k) {
    if (k > 1 && k < n && !layout.has_subspaces()) {
      ev.lambda_complete = false;
      continue;
    }
    const Extremum e = lambda_k_search(layout, theta, k);
    ev.lambda[k - 1] = e.value;
    ev.witnesses[k - 1] = layout.directions[e.index];
  }
  ev.theta_mean = sphere_mean(layout, theta);
  if (ev.lambda_complete) {
    ev.equation_value = combine(spec, ev.lambda, ev.theta_mean);
  } else {
    ev.equation_value = equation_value(spec, layout, theta);
  }
  ev.operator_value = spec.operator_sign() * ev.equation_value;
  return ev;
}

std::vector<double> theta_values(const Field& f, const Vec& x, const SearchLayout& layout,
                                 const LineQuadrature& q) {
  std::vector<double> theta;
  theta.reserve(layout.directions.size());
  for (const Vec& z : layout.directions) theta.push_back(directional_theta(f, x, z, q));
  return theta;
}

PointEvaluation evaluate(const OperatorSpec& spec, const Field& f, const Vec& x, const DirectionSet& dirs,
                         const SubspaceSet* subs, const LineQuadrature& q) {
  const int n = f.grid().dim();
  if (dirs.dim != n) throw ConfigError("direction set dimension does not match the field");
  spec.validate(n);
  if (spec.needs_intermediate(n) && subs == nullptr) {
    throw ConfigError("this operator needs a subspace set in dimension 3");
  }
  const SearchLayout layout = make_search_layout(dirs, n == 3 ? subs : nullptr);
  const auto theta = theta_values(f, x, layout, q);
  return assemble(spec, layout, theta, x);
}

}  // namespace fracop
