#include "fracop/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "fracop/errors.hpp"

namespace fracop {

namespace {

// 20-point Gauss-Legendre rule on [-1, 1], computed once by Newton iteration on
// the Legendre recurrence.
struct GaussLegendre20 {
  static constexpr int n = 20;
  std::array<double, n> x{};
  std::array<double, n> w{};

  GaussLegendre20() {
    for (int i = 0; i < n; ++i) {
      double r = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0;
        double p1 = r;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * r * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (r * p1 - p0) / (r * r - 1.0);
        const double step = p1 / dp;
        r -= step;
        if (std::abs(step) < 1e-16) break;
      }
      x[i] = r;
      w[i] = 2.0 / ((1.0 - r * r) * dp * dp);
    }
  }
};

const GaussLegendre20& gauss_legendre20() {
  static const GaussLegendre20 rule;
  return rule;
}

// Gauss rule with `points` nodes for the weight t^{-1-2s} on [a, b]. Moments are
// taken in the centred variable y in [-1, 1] so the 2x2 moment system stays well
// conditioned for thin cells.
void append_cell_rule(double a, double b, double s, int points, std::vector<double>& nodes,
                      std::vector<double>& weights) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const auto& gl = gauss_legendre20();
  std::array<double, 4> m{};
  for (int i = 0; i < GaussLegendre20::n; ++i) {
    const double y = gl.x[i];
    const double k = gl.w[i] * half * std::pow(mid + half * y, -1.0 - 2.0 * s);
    double yp = 1.0;
    for (double& mk : m) {
      mk += k * yp;
      yp *= y;
    }
  }
  if (points == 1) {
    nodes.push_back(mid + half * m[1] / m[0]);
    weights.push_back(m[0]);
    return;
  }
  // Monic orthogonal quadratic y^2 + alpha y + beta.
  const double det = m[1] * m[1] - m[0] * m[2];
  const double alpha = (m[3] * m[0] - m[2] * m[1]) / det;
  const double beta = (m[2] * m[2] - m[1] * m[3]) / det;
  const double disc = std::sqrt(alpha * alpha - 4.0 * beta);
  const double y1 = 0.5 * (-alpha - disc);
  const double y2 = 0.5 * (-alpha + disc);
  const double w1 = (m[1] - y2 * m[0]) / (y1 - y2);
  const double w2 = m[0] - w1;
  nodes.push_back(mid + half * y1);
  weights.push_back(w1);
  nodes.push_back(mid + half * y2);
  weights.push_back(w2);
}

}  // namespace

double LineQuadrature::tail_weight() const {
  const double two_s = 2.0 * s.value();
  return std::pow(T, -two_s) / two_s;
}

double LineQuadrature::total_weight() const {
  double sum = 0.0;
  for (double w : weights) sum += w;
  sum *= 2.0;
  if (tail_mode == TailMode::constant_tail) sum += 2.0 * tail_weight();
  return sum;
}

LineQuadrature build_quadrature(FractionalOrder s, double delta, double T, int nodes_per_decade,
                                TailMode tail_mode, int points_per_cell) {
  if (!(delta > 0.0) || !(T > delta) || !std::isfinite(T)) {
    throw ConfigError("quadrature requires 0 < delta < T");
  }
  if (nodes_per_decade < 4) throw ConfigError("quadrature requires nodes_per_decade >= 4");
  if (points_per_cell != 1 && points_per_cell != 2) {
    throw ConfigError("quadrature supports 1 or 2 points per cell");
  }
  LineQuadrature q;
  q.s = s;
  q.delta = delta;
  q.T = T;
  q.tail_mode = tail_mode;

  const double sv = s.value();
  q.nodes.push_back(delta);
  q.weights.push_back(std::pow(delta, -2.0 * sv) / (2.0 - 2.0 * sv));

  const double ratio = std::pow(10.0, 1.0 / nodes_per_decade);
  double a = delta;
  while (a < T) {
    double b = a * ratio;
    // Merge a sliver at the end into the last cell.
    if (b * std::pow(ratio, 0.5) >= T) b = T;
    append_cell_rule(a, b, sv, points_per_cell, q.nodes, q.weights);
    a = b;
  }
  return q;
}

double directional_theta(const Field& f, const Vec& x, const Vec& z, const LineQuadrature& q) {
  const Domain& dom = f.grid().domain();
  if (!dom.contains(x)) throw ConfigError("directional_theta requires x strictly inside the domain");
  if (std::abs(norm(z) - 1.0) > 1e-12) throw ConfigError("direction must be a unit vector");
  const double fx = f.sample(x);
  double tail = 0.0;
  if (q.tail_mode == TailMode::constant_tail) {
    const auto& far = f.datum().far_value;
    if (!far) throw ConfigError("constant tail requires a datum with a far value");
    if (dom.contains(axpy(q.T, z, x)) || dom.contains(axpy(-q.T, z, x))) {
      throw ConfigError("truncation radius T does not leave the domain");
    }
    tail = 2.0 * (*far - fx) * q.tail_weight();
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < q.nodes.size(); ++k) {
    const double t = q.nodes[k];
    sum += q.weights[k] * ((f.sample(axpy(t, z, x)) - fx) + (f.sample(axpy(-t, z, x)) - fx));
  }
  return cs_constant(q.s) * (sum + tail);
}

// ---------------------------------------------------------------------------
// Adaptive reference integration

namespace {

constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct GkResult {
  double value;
  double error;
};

GkResult gauss_kronrod15(const std::function<double(double)>& fn, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = fn(c);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double f1 = fn(c - dx);
    const double f2 = fn(c + dx);
    kronrod += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
  }
  return {kronrod * h, std::abs((kronrod - gauss) * h)};
}

double adaptive_step(const std::function<double(double)>& fn, double a, double b, double tol,
                     const GkResult& whole, int depth, int max_depth) {
  if (whole.error <= tol || (whole.error <= 1e-15 * std::abs(whole.value))) return whole.value;
  if (depth >= max_depth) {
    throw NumericalError("adaptive quadrature did not converge on [" + std::to_string(a) + ", " +
                         std::to_string(b) + "]");
  }
  const double m = 0.5 * (a + b);
  const GkResult left = gauss_kronrod15(fn, a, m);
  const GkResult right = gauss_kronrod15(fn, m, b);
  return adaptive_step(fn, a, m, 0.5 * tol, left, depth + 1, max_depth) +
         adaptive_step(fn, m, b, 0.5 * tol, right, depth + 1, max_depth);
}

}  // namespace

double adaptive_integrate(const std::function<double(double)>& fn, double a, double b, double abs_tol,
                          int max_depth) {
  if (!(b > a)) return 0.0;
  const GkResult whole = gauss_kronrod15(fn, a, b);
  const double value = adaptive_step(fn, a, b, abs_tol, whole, 0, max_depth);
  if (!std::isfinite(value)) throw NumericalError("adaptive quadrature produced a non-finite value");
  return value;
}

double oracle_theta(const std::function<double(double)>& f, FractionalOrder order, double T,
                    const OracleOptions& options) {
  if (!(T > 0.0)) throw ConfigError("oracle requires T > 0");
  const double s = order.value();
  const double f0 = f(0.0);
  const auto symmetric = [&](double t) { return (f(t) - f0) + (f(-t) - f0); };

  // Below t_c the increments drown in cancellation error, so D(t) is replaced by
  // its even Taylor fit k t^2 + m t^4 through t_c and t_c/2.
  const double tc = std::min(options.near_cutoff, 0.5 * T);
  const double d1 = symmetric(tc);
  const double d2 = symmetric(0.5 * tc);
  const double m4 = (d1 - 4.0 * d2) / (0.75 * std::pow(tc, 4.0));
  const double k2 = (d1 - m4 * std::pow(tc, 4.0)) / (tc * tc);
  double integral = k2 * std::pow(tc, 2.0 - 2.0 * s) / (2.0 - 2.0 * s) +
                    m4 * std::pow(tc, 4.0 - 2.0 * s) / (4.0 - 2.0 * s);

  std::vector<double> cuts{tc, T};
  for (double b : options.breakpoints) {
    if (b > tc && b < T) cuts.push_back(b);
  }
  for (double decade = 10.0 * tc; decade < T; decade *= 10.0) cuts.push_back(decade);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const auto integrand = [&](double t) { return symmetric(t) * std::pow(t, -1.0 - 2.0 * s); };

  // Magnitude estimate to turn the relative tolerance into an absolute one.
  double scale = std::abs(integral);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    scale += std::abs(gauss_kronrod15(integrand, cuts[i], cuts[i + 1]).value);
  }
  const double abs_tol = options.tolerance * std::max(scale, 1e-6) / static_cast<double>(cuts.size());

  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    integral += adaptive_integrate(integrand, cuts[i], cuts[i + 1], abs_tol, options.max_depth);
  }
  if (options.far_value) {
    integral += 2.0 * (*options.far_value - f0) * std::pow(T, -2.0 * s) / (2.0 * s);
  }
  return cs_constant(order) * integral;
}

}  // namespace fracop
