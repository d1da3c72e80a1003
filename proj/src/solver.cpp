#include "fracop/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "fracop/errors.hpp"

namespace fracop {

namespace {

template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const std::size_t workers = std::clamp<std::size_t>(threads < 1 ? 1 : threads, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    fn(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

template <int Dim>
inline double interpolate(const Grid& grid, std::span<const double> nodes, const double* xi) {
  int cell[Dim];
  double frac[Dim];
  std::size_t base = 0;
  for (int a = 0; a < Dim; ++a) {
    cell[a] = std::clamp(static_cast<int>(std::floor(xi[a])), 0, grid.count(a) - 2);
    frac[a] = std::clamp(xi[a] - static_cast<double>(cell[a]), 0.0, 1.0);
    base += static_cast<std::size_t>(cell[a]) * grid.stride(a);
  }
  if constexpr (Dim == 1) {
    return (1.0 - frac[0]) * nodes[base] + frac[0] * nodes[base + 1];
  } else {
    double value = 0.0;
    for (int c = 0; c < (1 << Dim); ++c) {
      double w = 1.0;
      std::size_t offset = base;
      for (int a = 0; a < Dim; ++a) {
        if (c & (1 << a)) {
          w *= frac[a];
          offset += grid.stride(a);
        } else {
          w *= 1.0 - frac[a];
        }
      }
      value += w * nodes[offset];
    }
    return value;
  }
}

}  // namespace

LineQuadrature resolve_quadrature(const Problem& p) {
  if (!p.grid) throw ConfigError("problem has no grid");
  const Grid& grid = *p.grid;
  const auto& qp = p.quadrature;
  const double delta = qp.delta.value_or(qp.delta_cells * grid.min_spacing());
  const double T = qp.T.value_or(8.0 * grid.domain().diameter());
  return build_quadrature(p.spec.s, delta, T, qp.nodes_per_decade, qp.tail_mode, qp.points_per_cell);
}

SearchLayout resolve_layout(const Problem& p) {
  if (!p.grid) throw ConfigError("problem has no grid");
  const int dim = p.grid->dim();
  const auto dirs = make_direction_set(dim, p.directions.resolution);
  if (dim == 3 && p.spec.needs_intermediate(3)) {
    const auto subs = make_subspace_set(p.directions.subspace_normals, p.directions.subspace_inplane);
    return make_search_layout(dirs, &subs);
  }
  return make_search_layout(dirs, nullptr);
}

namespace {

const Problem& checked(const Problem& p) {
  if (!p.grid) throw ConfigError("problem has no grid");
  if (!p.datum.evaluate) throw ConfigError("problem has no exterior datum");
  return p;
}

}  // namespace

DiscreteOperator::DiscreteOperator(const Problem& p)
    : problem_(checked(p)), quad_(resolve_quadrature(p)), layout_(resolve_layout(p)) {
  const Grid& grid = *problem_.grid;
  const int dim = grid.dim();
  problem_.spec.validate(dim);
  if (quad_.tail_mode == TailMode::constant_tail && !problem_.datum.far_value) {
    throw ConfigError("constant tail requires a datum with a far value");
  }
  if (quad_.T <= grid.domain().diameter()) throw ConfigError("truncation radius T must exceed diam(Omega)");

  cs_ = cs_constant(quad_.s);
  normalization_ = cs_ * quad_.total_weight() * problem_.spec.coefficient_sum(dim);

  const std::size_t n_slots = grid.interior_count();
  const std::size_t n_dirs = layout_.directions.size();
  const std::size_t n_samples = quad_.nodes.size();
  if (n_samples > 65535) throw ConfigError("too many quadrature nodes");

  exterior_nodes_.assign(grid.node_count(), 0.0);
  for (std::size_t n = 0; n < grid.node_count(); ++n) {
    if (grid.interior_slot(n) < 0) exterior_nodes_[n] = problem_.datum(grid.node(n));
  }

  const double sign = problem_.rhs_form == RhsForm::operator_form ? problem_.spec.operator_sign() : 1.0;
  rhs_.assign(n_slots, 0.0);
  if (problem_.rhs) {
    for (std::size_t i = 0; i < n_slots; ++i) {
      rhs_[i] = sign * problem_.rhs(grid.node(grid.interior_nodes()[i]));
      if (!std::isfinite(rhs_[i])) throw ConfigError("right-hand side is not finite on the grid");
    }
  }

  offsets_.resize(n_dirs * n_samples);
  for (std::size_t d = 0; d < n_dirs; ++d) {
    const Vec& z = layout_.directions[d];
    for (std::size_t k = 0; k < n_samples; ++k) {
      Vec off{};
      for (int a = 0; a < dim; ++a) off[a] = quad_.nodes[k] * z[a] / grid.spacing(a);
      offsets_[d * n_samples + k] = off;
    }
  }

  const Domain& dom = grid.domain();
  const double tail_w = quad_.tail_mode == TailMode::constant_tail ? quad_.tail_weight() : 0.0;
  const double far = problem_.datum.far_value.value_or(0.0);
  inside_.assign(n_slots * n_dirs * 2, 0);
  ext_value_.assign(n_slots * n_dirs, 0.0);
  ext_weight_.assign(n_slots * n_dirs, 0.0);
  for (std::size_t i = 0; i < n_slots; ++i) {
    const Vec x = grid.node(grid.interior_nodes()[i]);
    for (std::size_t d = 0; d < n_dirs; ++d) {
      const Vec& z = layout_.directions[d];
      double value = 2.0 * far * tail_w;
      double weight = 2.0 * tail_w;
      for (int side = 0; side < 2; ++side) {
        const double sgn = side == 0 ? 1.0 : -1.0;
        std::uint16_t count = 0;
        bool left = false;
        for (std::size_t k = 0; k < n_samples; ++k) {
          const Vec pt = axpy(sgn * quad_.nodes[k], z, x);
          if (dom.contains(pt)) {
            if (left) throw std::logic_error("ray re-enters the domain; convex domain required");
            ++count;
          } else {
            left = true;
            value += quad_.weights[k] * problem_.datum(pt);
            weight += quad_.weights[k];
          }
        }
        inside_[(i * n_dirs + d) * 2 + side] = count;
      }
      ext_value_[i * n_dirs + d] = value;
      ext_weight_[i * n_dirs + d] = weight;
    }
  }
}

template <int Dim>
void DiscreteOperator::theta_impl(std::size_t slot, std::span<const double> nodes, std::span<double> out) const {
  const Grid& grid = *problem_.grid;
  const std::size_t flat = grid.interior_nodes()[slot];
  const auto idx = grid.multi_index(flat);
  const double ui = nodes[flat];
  const std::size_t n_dirs = layout_.directions.size();
  const std::size_t n_samples = quad_.nodes.size();
  const double* w = quad_.weights.data();
  for (std::size_t d = 0; d < n_dirs; ++d) {
    const Vec* off = offsets_.data() + d * n_samples;
    double sum = 0.0;
    for (int side = 0; side < 2; ++side) {
      const double sgn = side == 0 ? 1.0 : -1.0;
      const std::size_t count = inside_[(slot * n_dirs + d) * 2 + side];
      for (std::size_t k = 0; k < count; ++k) {
        double xi[Dim];
        for (int a = 0; a < Dim; ++a) xi[a] = static_cast<double>(idx[a]) + sgn * off[k][a];
        sum += w[k] * (interpolate<Dim>(grid, nodes, xi) - ui);
      }
    }
    const std::size_t e = slot * n_dirs + d;
    sum += ext_value_[e] - ext_weight_[e] * ui;
    out[d] = cs_ * sum;
  }
}

void DiscreteOperator::theta_at(std::size_t slot, std::span<const double> node_values, std::span<double> out) const {
  switch (problem_.grid->dim()) {
    case 1: theta_impl<1>(slot, node_values, out); break;
    case 2: theta_impl<2>(slot, node_values, out); break;
    default: theta_impl<3>(slot, node_values, out); break;
  }
}

std::vector<double> DiscreteOperator::node_values(std::span<const double> interior) const {
  const Grid& grid = *problem_.grid;
  if (interior.size() != grid.interior_count()) throw ConfigError("interior vector has the wrong size");
  std::vector<double> nodes = exterior_nodes_;
  const auto& ids = grid.interior_nodes();
  for (std::size_t i = 0; i < ids.size(); ++i) nodes[ids[i]] = interior[i];
  return nodes;
}

std::vector<double> DiscreteOperator::residual(std::span<const double> interior, int threads) const {
  const auto nodes = node_values(interior);
  std::vector<double> r(interior.size());
  parallel_for(interior.size(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> theta(layout_.directions.size());
    for (std::size_t i = begin; i < end; ++i) {
      theta_at(i, nodes, theta);
      r[i] = equation_value(problem_.spec, layout_, theta) - rhs_[i];
    }
  });
  return r;
}

std::vector<double> residual(const Problem& p, const Field& u) {
  if (u.grid().node_count() != p.grid->node_count() || u.grid().interior_count() != p.grid->interior_count()) {
    throw ConfigError("field is not defined on the problem grid");
  }
  DiscreteOperator op(p);
  return op.residual(u.interior_values());
}

double sup_norm(std::span<const double> values) {
  double m = 0.0;
  for (double v : values) {
    if (std::isnan(v)) return v;
    m = std::max(m, std::abs(v));
  }
  return m;
}

std::vector<double> boundary_sample(const Grid& grid, const ExteriorDatum& g) {
  std::vector<double> sample;
  for (std::size_t n = 0; n < grid.node_count(); ++n) {
    if (grid.interior_slot(n) >= 0) continue;
    const auto idx = grid.multi_index(n);
    bool adjacent = false;
    for (int a = 0; a < grid.dim() && !adjacent; ++a) {
      for (int step : {-1, 1}) {
        auto nb = idx;
        nb[a] += step;
        if (nb[a] < 0 || nb[a] >= grid.count(a)) continue;
        if (grid.interior_slot(grid.flat_index(nb)) >= 0) {
          adjacent = true;
          break;
        }
      }
    }
    if (adjacent) sample.push_back(g(grid.node(n)));
  }
  return sample;
}

SolveReport solve_dirichlet(const Problem& p, const SolverOptions& options) {
  const DiscreteOperator op(p);
  return solve_dirichlet(op, options);
}

SolveReport solve_dirichlet(const DiscreteOperator& op, const SolverOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const Problem& p = op.problem();
  const Grid& grid = *p.grid;
  const double tol = options.tol.value_or(1e-8 * (1.0 + p.datum.bound));
  if (!(tol >= 0.0)) throw ConfigError("tolerance must be nonnegative");
  if (!std::isfinite(tol)) throw NumericalError("tolerance is not finite (unbounded datum?)");
  if (!(options.damping > 0.0 && options.damping <= 1.0)) throw ConfigError("damping must lie in (0, 1]");
  if (options.max_iter < 0) throw ConfigError("max_iter must be nonnegative");

  std::vector<std::string> warnings;
  if (!p.spec.s.strict_band()) {
    warnings.push_back("s <= 1/2: boundary continuity of solutions is not guaranteed; results are observational");
  }

  std::vector<double> u;
  double initial = 0.0;
  if (options.initial_values) {
    u = *options.initial_values;
    if (u.size() != grid.interior_count()) throw ConfigError("initial guess has the wrong size");
  } else {
    const auto sample = boundary_sample(grid, p.datum);
    if (sample.empty()) throw ConfigError("no exterior nodes next to the domain");
    switch (options.guess) {
      case InitialGuess::datum_mean:
        initial = std::accumulate(sample.begin(), sample.end(), 0.0) / static_cast<double>(sample.size());
        break;
      case InitialGuess::datum_min: initial = *std::min_element(sample.begin(), sample.end()); break;
      case InitialGuess::datum_max: initial = *std::max_element(sample.begin(), sample.end()); break;
    }
    u.assign(grid.interior_count(), initial);
  }
  for (double v : u)
    if (!std::isfinite(v)) throw NumericalError("non-finite initial guess");

  const double step = options.damping / op.normalization();
  std::vector<double> history;
  long iterations = 0;
  bool converged = false;
  double r_sup = 0.0;
  while (true) {
    const auto r = op.residual(u, options.threads);
    r_sup = sup_norm(r);
    if (!std::isfinite(r_sup)) throw NumericalError("non-finite residual at iteration " + std::to_string(iterations));
    history.push_back(r_sup);
    if (r_sup <= tol) {
      converged = true;
      break;
    }
    if (iterations >= options.max_iter) break;
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += step * r[i];
    ++iterations;
  }

  SolveReport report(Field(p.grid, p.datum, u));
  report.iterations = iterations;
  report.residual_history = std::move(history);
  report.final_residual = r_sup;
  report.converged = converged;
  report.damping = options.damping;
  report.tolerance = tol;
  report.normalization = op.normalization();
  report.initial_value = initial;
  report.warnings = std::move(warnings);
  const auto& h = report.residual_history;
  if (h.size() >= 3) {
    const std::size_t span = std::min<std::size_t>(h.size() - 1, 50);
    const double a = h[h.size() - 1 - span];
    const double b = h.back();
    if (a > 0.0 && b > 0.0) report.observed_rate = std::pow(b / a, 1.0 / static_cast<double>(span));
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace fracop
