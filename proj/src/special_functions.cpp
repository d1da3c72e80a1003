#include "fracop/special_functions.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fracop {

FractionalOrder::FractionalOrder(double s) : s_(s) {
  if (!(s > 0.0 && s < 1.0)) {
    throw std::domain_error("fractional order must lie in (0,1), got " + std::to_string(s));
  }
}

namespace {

// Lanczos approximation, g = 7, n = 9 (Godfrey's coefficients).
constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

double lanczos_log_gamma(double x) {
  // Valid for x >= 1/2.
  const double y = x - 1.0;
  double sum = kLanczos[0];
  for (std::size_t i = 1; i < kLanczos.size(); ++i) sum += kLanczos[i] / (y + static_cast<double>(i));
  const double t = y + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (y + 0.5) * std::log(t) - t + std::log(sum);
}

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::domain_error("log_gamma requires a finite positive argument");
  }
  if (x < 0.5) return lanczos_log_gamma(x + 1.0) - std::log(x);
  return lanczos_log_gamma(x);
}

double cs_constant(FractionalOrder order) {
  const double s = order.value();
  const double log_c = 2.0 * s * std::numbers::ln2 + std::log(s) + log_gamma(s + 0.5) -
                       0.5 * std::log(std::numbers::pi) - log_gamma(1.0 - s);
  return std::exp(log_c);
}

double cs_constant(double s) { return cs_constant(FractionalOrder(s)); }

}  // namespace fracop
