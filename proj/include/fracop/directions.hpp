#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fracop/geometry.hpp"

namespace fracop {

/// Unit vectors representing S^{N-1} modulo z ~ -z.
///  N = 1: {+1};  N = 2: angles k pi / M, k < M;  N = 3: M^2 points of a
///  Fibonacci lattice on the open upper hemisphere.
struct DirectionSet {
  int dim = 0;
  int resolution = 0;
  std::vector<Vec> vectors;
};

DirectionSet make_direction_set(int dim, int resolution);

/// 2-planes of R^3, indexed by unit normals taken from a hemisphere set; each
/// plane carries an orthonormal basis and `inplane` equispaced directions.
struct SubspaceSet {
  int normal_resolution = 0;
  int inplane_resolution = 0;
  std::vector<Vec> normals;
  std::vector<std::array<Vec, 2>> bases;
};

SubspaceSet make_subspace_set(int normal_resolution, int inplane_resolution);

/// Directions at which Theta is evaluated, with the grouping the max-min
/// searches need. The first `sphere_count` entries are the DirectionSet; the
/// rest are in-plane directions of the subspaces (N = 3 only). Lambda_1 and
/// Lambda_N search the whole list, so the discrete values stay ordered.
struct SearchLayout {
  int dim = 0;
  std::size_t sphere_count = 0;
  std::vector<Vec> directions;
  std::vector<std::vector<std::size_t>> subspaces;

  bool has_subspaces() const { return !subspaces.empty(); }
};

SearchLayout make_search_layout(const DirectionSet& dirs, const SubspaceSet* subs = nullptr);

enum class Extreme { min, max };

struct Extremum {
  std::size_t index = 0;
  double value = 0.0;
};

/// Extremal value with the smallest index among ties. Throws std::logic_error
/// on an empty input.
Extremum extremize(std::span<const double> values, Extreme mode);

/// Discrete Lambda_k: max over subspaces of dimension N-k+1 of the min over
/// their directions. k = 1 and k = N reduce to a plain min / max over all
/// directions. Throws std::domain_error for k outside [1, N] and ConfigError
/// when N = 3, k = 2 and the layout has no subspaces.
Extremum lambda_k_search(const SearchLayout& layout, std::span<const double> values, int k);

}  // namespace fracop
