#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fracop {

/// Point or vector in R^N, N <= 3. Unused trailing components are zero.
using Vec = std::array<double, 3>;

inline constexpr int kMaxDim = 3;

/// Nodes whose signed distance is within this of zero belong to the boundary and
/// carry the exterior datum.
inline constexpr double kBoundaryTol = 1e-12;

double dot(const Vec& a, const Vec& b);
double norm(const Vec& a);
Vec axpy(double t, const Vec& z, const Vec& x);  // x + t z

/// Bounded convex domain: an interval, a ball, or an axis-aligned box.
class Domain {
 public:
  enum class Shape { interval, ball, box };

  static Domain interval(double a, double b);
  static Domain ball(const Vec& center, double radius, int dim);
  static Domain box(const Vec& lo, const Vec& hi, int dim);

  Shape shape() const { return shape_; }
  int dim() const { return dim_; }
  const Vec& lo() const { return lo_; }  // bounding box
  const Vec& hi() const { return hi_; }
  const Vec& center() const { return center_; }
  double radius() const { return radius_; }
  double diameter() const;

  /// Exact signed distance: negative inside, zero on the boundary, positive outside.
  double signed_distance(const Vec& x) const;
  bool contains(const Vec& x) const { return signed_distance(x) < -kBoundaryTol; }

 private:
  Domain(Shape shape, int dim) : shape_(shape), dim_(dim) {}

  Shape shape_;
  int dim_;
  Vec lo_{};
  Vec hi_{};
  Vec center_{};
  double radius_ = 0.0;
};

/// Tensor grid over the bounding box of a domain, nodes at lo + i h per axis.
class Grid {
 public:
  Grid(const Domain& domain, std::span<const int> counts);

  const Domain& domain() const { return domain_; }
  int dim() const { return domain_.dim(); }
  int count(int axis) const { return counts_[axis]; }
  double spacing(int axis) const { return h_[axis]; }
  double min_spacing() const;
  const Vec& origin() const { return domain_.lo(); }

  std::size_t node_count() const { return node_count_; }
  std::size_t stride(int axis) const { return strides_[axis]; }
  std::array<int, kMaxDim> multi_index(std::size_t flat) const;
  std::size_t flat_index(const std::array<int, kMaxDim>& idx) const;
  Vec node(std::size_t flat) const;

  /// Flat indices of nodes with signed distance < -kBoundaryTol, ascending.
  const std::vector<std::size_t>& interior_nodes() const { return interior_; }
  /// Position of a node in interior_nodes(), or -1 for exterior nodes.
  long interior_slot(std::size_t flat) const { return slot_[flat]; }
  std::size_t interior_count() const { return interior_.size(); }

 private:
  Domain domain_;
  std::array<int, kMaxDim> counts_{1, 1, 1};
  std::array<double, kMaxDim> h_{1.0, 1.0, 1.0};
  std::array<std::size_t, kMaxDim> strides_{1, 1, 1};
  std::size_t node_count_ = 0;
  std::vector<std::size_t> interior_;
  std::vector<long> slot_;
};

/// Exterior datum g on R^N \ Omega (evaluable everywhere for convenience).
struct ExteriorDatum {
  std::function<double(const Vec&)> evaluate;
  /// Sup-norm bound of g.
  double bound = 0.0;
  /// If set, g(x) == *far_value for |x| >= far_radius.
  std::optional<double> far_value;
  double far_radius = 0.0;
  std::string description;

  double operator()(const Vec& x) const { return evaluate(x); }
};

/// Builtin data. Each sets bound, far-field behaviour and a description.
namespace datum {
ExteriorDatum constant(double c);
/// amplitude * exp(-|x - center|^2 / width^2); far value 0 at the radius where
/// the gaussian underflows.
ExteriorDatum gaussian(double amplitude, const Vec& center, double width);
/// Radially non-increasing C^infinity bump: amplitude on B_{inner}(center),
/// zero outside B_{outer}(center).
ExteriorDatum radial_bump(double amplitude, const Vec& center, double inner, double outer);
/// (x^2 - y^2) * chi(|x|), chi == 1 on |x| <= inner and 0 beyond outer.
ExteriorDatum truncated_saddle(double inner, double outer);
ExteriorDatum sum(std::vector<ExteriorDatum> terms);
ExteriorDatum scaled(double factor, ExteriorDatum g);

/// Smooth step: 1 for r <= inner, 0 for r >= outer, C^infinity in between.
double smooth_cutoff(double r, double inner, double outer);
}  // namespace datum

/// Interior nodal values plus an exterior datum: the discrete u^g on all of R^N.
class Field {
 public:
  Field(std::shared_ptr<const Grid> grid, ExteriorDatum datum, std::vector<double> interior_values);
  /// Interior values sampled from fn at the interior nodes.
  static Field from_function(std::shared_ptr<const Grid> grid, ExteriorDatum datum,
                             const std::function<double(const Vec&)>& fn);

  const Grid& grid() const { return *grid_; }
  std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
  const ExteriorDatum& datum() const { return datum_; }
  std::span<const double> interior_values() const { return interior_; }
  /// Values at all grid nodes: interior values, datum at the other nodes.
  std::span<const double> node_values() const { return nodes_; }

  /// Multilinear interpolation inside Omega, datum evaluation outside.
  double sample(const Vec& x) const;

  /// Same datum and grid, new interior values.
  Field with_values(std::vector<double> interior_values) const;
  /// Pointwise k * u, with the datum scaled as well.
  Field scaled(double k) const;

 private:
  Field(std::shared_ptr<const Grid> grid, ExteriorDatum datum, std::vector<double> interior,
        std::shared_ptr<const std::vector<double>> exterior_nodes);

  std::shared_ptr<const Grid> grid_;
  ExteriorDatum datum_;
  std::vector<double> interior_;
  std::shared_ptr<const std::vector<double>> exterior_nodes_;  // datum at every node
  std::vector<double> nodes_;
};

double signed_distance(const Domain& d, const Vec& x);
double sample_extended(const Field& f, const Vec& x);

/// Multilinear interpolation of node_values at fractional grid coordinate xi
/// (cell = floor(xi) clamped to the grid). Weights are nonnegative and sum to 1.
double interpolate_nodes(const Grid& grid, std::span<const double> node_values, const Vec& xi);

}  // namespace fracop
