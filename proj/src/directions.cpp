#include "fracop/directions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fracop/errors.hpp"

namespace fracop {

namespace {

// Orthonormal pair spanning the plane orthogonal to n (|n| = 1).
std::array<Vec, 2> plane_basis(const Vec& n) {
  // Start from the coordinate axis least aligned with n.
  int axis = 0;
  for (int a = 1; a < 3; ++a) {
    if (std::abs(n[a]) < std::abs(n[axis])) axis = a;
  }
  Vec e{};
  e[axis] = 1.0;
  const double proj = dot(e, n);
  Vec u{e[0] - proj * n[0], e[1] - proj * n[1], e[2] - proj * n[2]};
  const double un = norm(u);
  for (double& c : u) c /= un;
  Vec v{n[1] * u[2] - n[2] * u[1], n[2] * u[0] - n[0] * u[2], n[0] * u[1] - n[1] * u[0]};
  const double vn = norm(v);
  for (double& c : v) c /= vn;
  return {u, v};
}

}  // namespace

DirectionSet make_direction_set(int dim, int resolution) {
  if (dim < 1 || dim > 3) throw ConfigError("direction sets support N = 1, 2, 3");
  if (resolution < 2) throw ConfigError("direction resolution must be at least 2");
  DirectionSet set;
  set.dim = dim;
  set.resolution = resolution;
  switch (dim) {
    case 1:
      set.vectors.push_back({1.0, 0.0, 0.0});
      break;
    case 2:
      for (int k = 0; k < resolution; ++k) {
        const double angle = std::numbers::pi * k / resolution;
        set.vectors.push_back({std::cos(angle), std::sin(angle), 0.0});
      }
      // Exact axes for angles 0 and pi/2.
      if (resolution % 2 == 0) set.vectors[resolution / 2] = {0.0, 1.0, 0.0};
      break;
    case 3: {
      const int n = resolution * resolution;
      const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
      for (int i = 0; i < n; ++i) {
        const double h = (i + 0.5) / n;  // height in (0, 1): open upper hemisphere
        const double r = std::sqrt(1.0 - h * h);
        double frac = i * golden;
        frac -= std::floor(frac);
        const double phi = 2.0 * std::numbers::pi * frac;
        Vec v{r * std::cos(phi), r * std::sin(phi), h};
        const double vn = norm(v);
        for (double& c : v) c /= vn;
        set.vectors.push_back(v);
      }
      break;
    }
  }
  return set;
}

SubspaceSet make_subspace_set(int normal_resolution, int inplane_resolution) {
  if (inplane_resolution < 2) throw ConfigError("in-plane resolution must be at least 2");
  SubspaceSet subs;
  subs.normal_resolution = normal_resolution;
  subs.inplane_resolution = inplane_resolution;
  subs.normals = make_direction_set(3, normal_resolution).vectors;
  for (const Vec& n : subs.normals) subs.bases.push_back(plane_basis(n));
  return subs;
}

SearchLayout make_search_layout(const DirectionSet& dirs, const SubspaceSet* subs) {
  SearchLayout layout;
  layout.dim = dirs.dim;
  layout.directions = dirs.vectors;
  layout.sphere_count = dirs.vectors.size();
  if (subs != nullptr) {
    if (dirs.dim != 3) throw ConfigError("subspace sets are only used for N = 3");
    const int m = subs->inplane_resolution;
    for (const auto& basis : subs->bases) {
      std::vector<std::size_t> members;
      for (int k = 0; k < m; ++k) {
        const double angle = std::numbers::pi * k / m;
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        members.push_back(layout.directions.size());
        layout.directions.push_back({c * basis[0][0] + s * basis[1][0], c * basis[0][1] + s * basis[1][1],
                                     c * basis[0][2] + s * basis[1][2]});
      }
      layout.subspaces.push_back(std::move(members));
    }
  }
  return layout;
}

Extremum extremize(std::span<const double> values, Extreme mode) {
  if (values.empty()) throw std::logic_error("extremize: empty value set");
  Extremum best{0, values[0]};
  for (std::size_t i = 1; i < values.size(); ++i) {
    const bool better = mode == Extreme::min ? values[i] < best.value : values[i] > best.value;
    if (better) best = {i, values[i]};
  }
  return best;
}

Extremum lambda_k_search(const SearchLayout& layout, std::span<const double> values, int k) {
  const int n = layout.dim;
  if (k < 1 || k > n) throw std::domain_error("eigenvalue index k must lie in [1, N]");
  if (values.size() != layout.directions.size()) {
    throw std::logic_error("lambda_k_search: value count does not match the layout");
  }
  if (k == 1) return extremize(values, Extreme::min);
  if (k == n) return extremize(values, Extreme::max);
  // Only N = 3, k = 2 remains: max over 2-planes of the in-plane minimum.
  if (!layout.has_subspaces()) throw ConfigError("intermediate eigenvalue requires a subspace set");
  Extremum best{};
  bool first = true;
  for (const auto& members : layout.subspaces) {
    Extremum inner{members.front(), values[members.front()]};
    for (std::size_t idx : members) {
      if (values[idx] < inner.value) inner = {idx, values[idx]};
    }
    if (first || inner.value > best.value) {
      best = inner;
      first = false;
    }
  }
  return best;
}

}  // namespace fracop
