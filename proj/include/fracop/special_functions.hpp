#pragma once

namespace fracop {

/// Exponent s of the nonlocal operators, always in the open interval (0, 1).
class FractionalOrder {
 public:
  explicit FractionalOrder(double s);

  double value() const { return s_; }

  /// True iff 1/2 < s < 1, the band where solutions are continuous up to the
  /// boundary.
  bool strict_band() const { return s_ > 0.5 && s_ < 1.0; }

  friend bool operator==(const FractionalOrder&, const FractionalOrder&) = default;

 private:
  double s_;
};

/// ln Gamma(x) for x > 0. Throws std::domain_error otherwise.
double log_gamma(double x);

/// Normalizing constant of the one-dimensional fractional Laplacian,
///   c(s) = 2^{2s} s Gamma(s + 1/2) / (sqrt(pi) Gamma(1 - s)).
/// Evaluated in log space so that s -> 1 does not overflow Gamma(1 - s).
double cs_constant(FractionalOrder s);
double cs_constant(double s);

}  // namespace fracop
