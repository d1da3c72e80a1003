#include "fracop/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "fracop/errors.hpp"

namespace fracop {

double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

Vec axpy(double t, const Vec& z, const Vec& x) {
  return {x[0] + t * z[0], x[1] + t * z[1], x[2] + t * z[2]};
}

// ---------------------------------------------------------------------------
// Domain

Domain Domain::interval(double a, double b) {
  if (!(a < b)) throw ConfigError("interval requires a < b");
  Domain d(Shape::interval, 1);
  d.lo_ = {a, 0.0, 0.0};
  d.hi_ = {b, 0.0, 0.0};
  d.center_ = {0.5 * (a + b), 0.0, 0.0};
  d.radius_ = 0.5 * (b - a);
  return d;
}

Domain Domain::ball(const Vec& center, double radius, int dim) {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("ball dimension must be 1, 2 or 3");
  if (!(radius > 0.0)) throw ConfigError("ball radius must be positive");
  Domain d(Shape::ball, dim);
  d.center_ = {};
  for (int i = 0; i < dim; ++i) {
    d.center_[i] = center[i];
    d.lo_[i] = center[i] - radius;
    d.hi_[i] = center[i] + radius;
  }
  d.radius_ = radius;
  return d;
}

Domain Domain::box(const Vec& lo, const Vec& hi, int dim) {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("box dimension must be 1, 2 or 3");
  Domain d(Shape::box, dim);
  for (int i = 0; i < dim; ++i) {
    if (!(lo[i] < hi[i])) throw ConfigError("box requires lo < hi on every axis");
    d.lo_[i] = lo[i];
    d.hi_[i] = hi[i];
    d.center_[i] = 0.5 * (lo[i] + hi[i]);
  }
  return d;
}

double Domain::diameter() const {
  Vec ext{};
  for (int i = 0; i < dim_; ++i) ext[i] = hi_[i] - lo_[i];
  return shape_ == Shape::ball ? 2.0 * radius_ : norm(ext);
}

double Domain::signed_distance(const Vec& x) const {
  switch (shape_) {
    case Shape::ball: {
      Vec d{};
      for (int i = 0; i < dim_; ++i) d[i] = x[i] - center_[i];
      return norm(d) - radius_;
    }
    case Shape::interval:
    case Shape::box: {
      // Exact box distance: outside part via the clamped offset, inside part via
      // the nearest face.
      Vec outside{};
      double inside = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < dim_; ++i) {
        const double q = std::max(lo_[i] - x[i], x[i] - hi_[i]);
        outside[i] = std::max(q, 0.0);
        inside = std::max(inside, q);
      }
      return norm(outside) + std::min(inside, 0.0);
    }
  }
  return 0.0;
}

double signed_distance(const Domain& d, const Vec& x) { return d.signed_distance(x); }

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(const Domain& domain, std::span<const int> counts) : domain_(domain) {
  if (static_cast<int>(counts.size()) != domain.dim()) {
    throw ConfigError("grid counts must have one entry per dimension");
  }
  node_count_ = 1;
  for (int a = 0; a < domain.dim(); ++a) {
    if (counts[a] < 3) throw ConfigError("grid needs at least 3 nodes per axis");
    counts_[a] = counts[a];
    h_[a] = (domain.hi()[a] - domain.lo()[a]) / static_cast<double>(counts[a] - 1);
    strides_[a] = node_count_;
    node_count_ *= static_cast<std::size_t>(counts[a]);
  }
  for (int a = domain.dim(); a < kMaxDim; ++a) strides_[a] = node_count_;

  slot_.assign(node_count_, -1);
  for (std::size_t n = 0; n < node_count_; ++n) {
    if (domain_.contains(node(n))) {
      slot_[n] = static_cast<long>(interior_.size());
      interior_.push_back(n);
    }
  }
  if (interior_.empty()) throw ConfigError("grid has no interior nodes");
}

double Grid::min_spacing() const {
  double h = h_[0];
  for (int a = 1; a < dim(); ++a) h = std::min(h, h_[a]);
  return h;
}

std::array<int, kMaxDim> Grid::multi_index(std::size_t flat) const {
  std::array<int, kMaxDim> idx{0, 0, 0};
  for (int a = 0; a < dim(); ++a) {
    idx[a] = static_cast<int>(flat % static_cast<std::size_t>(counts_[a]));
    flat /= static_cast<std::size_t>(counts_[a]);
  }
  return idx;
}

std::size_t Grid::flat_index(const std::array<int, kMaxDim>& idx) const {
  std::size_t flat = 0;
  for (int a = 0; a < dim(); ++a) flat += static_cast<std::size_t>(idx[a]) * strides_[a];
  return flat;
}

Vec Grid::node(std::size_t flat) const {
  const auto idx = multi_index(flat);
  Vec x{};
  for (int a = 0; a < dim(); ++a) x[a] = origin()[a] + static_cast<double>(idx[a]) * h_[a];
  return x;
}

// ---------------------------------------------------------------------------
// Interpolation

double interpolate_nodes(const Grid& grid, std::span<const double> node_values, const Vec& xi) {
  const int dim = grid.dim();
  std::array<int, kMaxDim> cell{0, 0, 0};
  std::array<double, kMaxDim> frac{0.0, 0.0, 0.0};
  std::size_t base = 0;
  for (int a = 0; a < dim; ++a) {
    const int last = grid.count(a) - 2;
    cell[a] = std::clamp(static_cast<int>(std::floor(xi[a])), 0, last);
    frac[a] = std::clamp(xi[a] - static_cast<double>(cell[a]), 0.0, 1.0);
    base += static_cast<std::size_t>(cell[a]) * grid.stride(a);
  }
  double value = 0.0;
  const int corners = 1 << dim;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t offset = base;
    for (int a = 0; a < dim; ++a) {
      if (c & (1 << a)) {
        w *= frac[a];
        offset += grid.stride(a);
      } else {
        w *= 1.0 - frac[a];
      }
    }
    value += w * node_values[offset];
  }
  return value;
}

// ---------------------------------------------------------------------------
// Field

Field::Field(std::shared_ptr<const Grid> grid, ExteriorDatum datum, std::vector<double> interior_values)
    : Field(grid, datum, std::move(interior_values), nullptr) {}

Field::Field(std::shared_ptr<const Grid> grid, ExteriorDatum datum, std::vector<double> interior,
             std::shared_ptr<const std::vector<double>> exterior_nodes)
    : grid_(std::move(grid)), datum_(std::move(datum)), interior_(std::move(interior)) {
  if (!grid_) throw ConfigError("field requires a grid");
  if (!datum_.evaluate) throw ConfigError("field requires an exterior datum");
  if (interior_.size() != grid_->interior_count()) {
    throw ConfigError("interior value count does not match the grid");
  }
  if (!exterior_nodes) {
    auto ext = std::make_shared<std::vector<double>>(grid_->node_count(), 0.0);
    for (std::size_t n = 0; n < grid_->node_count(); ++n) {
      if (grid_->interior_slot(n) < 0) (*ext)[n] = datum_(grid_->node(n));
    }
    exterior_nodes = std::move(ext);
  }
  exterior_nodes_ = std::move(exterior_nodes);
  nodes_ = *exterior_nodes_;
  const auto& interior_nodes = grid_->interior_nodes();
  for (std::size_t i = 0; i < interior_nodes.size(); ++i) nodes_[interior_nodes[i]] = interior_[i];
}

Field Field::from_function(std::shared_ptr<const Grid> grid, ExteriorDatum datum,
                           const std::function<double(const Vec&)>& fn) {
  std::vector<double> values;
  values.reserve(grid->interior_count());
  for (std::size_t n : grid->interior_nodes()) values.push_back(fn(grid->node(n)));
  return Field(std::move(grid), std::move(datum), std::move(values));
}

double Field::sample(const Vec& x) const {
  const Grid& g = *grid_;
  if (!g.domain().contains(x)) return datum_(x);
  Vec xi{};
  for (int a = 0; a < g.dim(); ++a) xi[a] = (x[a] - g.origin()[a]) / g.spacing(a);
  return interpolate_nodes(g, nodes_, xi);
}

Field Field::with_values(std::vector<double> interior_values) const {
  return Field(grid_, datum_, std::move(interior_values), exterior_nodes_);
}

Field Field::scaled(double k) const {
  std::vector<double> values(interior_.begin(), interior_.end());
  for (double& v : values) v *= k;
  return Field(grid_, datum::scaled(k, datum_), std::move(values));
}

double sample_extended(const Field& f, const Vec& x) { return f.sample(x); }

// ---------------------------------------------------------------------------
// Builtin data

namespace datum {

double smooth_cutoff(double r, double inner, double outer) {
  if (r <= inner) return 1.0;
  if (r >= outer) return 0.0;
  // Standard C^infinity transition built from exp(-1/x).
  const double u = (r - inner) / (outer - inner);
  const auto psi = [](double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; };
  const double a = psi(1.0 - u);
  const double b = psi(u);
  return a / (a + b);
}

ExteriorDatum constant(double c) {
  ExteriorDatum g;
  g.evaluate = [c](const Vec&) { return c; };
  g.bound = std::abs(c);
  g.far_value = c;
  g.far_radius = 0.0;
  g.description = "constant";
  return g;
}

ExteriorDatum gaussian(double amplitude, const Vec& center, double width) {
  if (!(width > 0.0)) throw ConfigError("gaussian width must be positive");
  ExteriorDatum g;
  g.evaluate = [amplitude, center, width](const Vec& x) {
    Vec d{x[0] - center[0], x[1] - center[1], x[2] - center[2]};
    return amplitude * std::exp(-dot(d, d) / (width * width));
  };
  g.bound = std::abs(amplitude);
  g.far_value = 0.0;
  // exp(-28^2) underflows to exactly 0 in double precision.
  g.far_radius = norm(center) + 28.0 * width;
  g.description = "gaussian";
  return g;
}

ExteriorDatum radial_bump(double amplitude, const Vec& center, double inner, double outer) {
  if (!(0.0 <= inner && inner < outer)) throw ConfigError("radial bump requires 0 <= inner < outer");
  ExteriorDatum g;
  g.evaluate = [amplitude, center, inner, outer](const Vec& x) {
    Vec d{x[0] - center[0], x[1] - center[1], x[2] - center[2]};
    return amplitude * smooth_cutoff(norm(d), inner, outer);
  };
  g.bound = std::abs(amplitude);
  g.far_value = 0.0;
  g.far_radius = norm(center) + outer;
  g.description = "radial_bump";
  return g;
}

ExteriorDatum truncated_saddle(double inner, double outer) {
  if (!(0.0 < inner && inner < outer)) throw ConfigError("saddle truncation requires 0 < inner < outer");
  ExteriorDatum g;
  g.evaluate = [inner, outer](const Vec& x) {
    const double r = std::hypot(x[0], x[1], x[2]);
    return (x[0] * x[0] - x[1] * x[1]) * smooth_cutoff(r, inner, outer);
  };
  g.bound = outer * outer;
  g.far_value = 0.0;
  g.far_radius = outer;
  g.description = "truncated_saddle";
  return g;
}

ExteriorDatum sum(std::vector<ExteriorDatum> terms) {
  if (terms.empty()) return constant(0.0);
  ExteriorDatum g;
  g.bound = 0.0;
  g.far_value = 0.0;
  g.far_radius = 0.0;
  std::ostringstream desc;
  desc << "sum(";
  for (std::size_t i = 0; i < terms.size(); ++i) {
    g.bound += terms[i].bound;
    if (g.far_value && terms[i].far_value) {
      *g.far_value += *terms[i].far_value;
      g.far_radius = std::max(g.far_radius, terms[i].far_radius);
    } else {
      g.far_value.reset();
    }
    desc << (i ? "," : "") << terms[i].description;
  }
  desc << ")";
  g.description = desc.str();
  g.evaluate = [terms = std::move(terms)](const Vec& x) {
    double v = 0.0;
    for (const auto& t : terms) v += t(x);
    return v;
  };
  return g;
}

ExteriorDatum scaled(double factor, ExteriorDatum inner) {
  ExteriorDatum g;
  g.bound = std::abs(factor) * inner.bound;
  if (inner.far_value) g.far_value = factor * *inner.far_value;
  g.far_radius = inner.far_radius;
  g.description = "scaled(" + inner.description + ")";
  g.evaluate = [factor, f = std::move(inner.evaluate)](const Vec& x) { return factor * f(x); };
  return g;
}

}  // namespace datum
}  // namespace fracop
