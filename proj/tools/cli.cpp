#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "fracop/errors.hpp"
#include "fracop/experiments.hpp"

namespace fracop::cli {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Strict reading of one JSON object. Every key must be taken before finish().

class Section {
 public:
  Section(const json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && j_->is_null()) j_ = nullptr;
    if (j_ && !j_->is_object()) throw ConfigError(path_ + ": expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* take(const std::string& key) {
    used_.insert(key);
    if (!j_) return nullptr;
    const auto it = j_->find(key);
    if (it == j_->end() || it->is_null()) return nullptr;
    return &*it;
  }

  double number(const std::string& key, double def) {
    const auto v = optional_number(key);
    return v ? *v : def;
  }

  std::optional<double> optional_number(const std::string& key) {
    const json* v = take(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) throw ConfigError(at(key) + ": expected a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) throw ConfigError(at(key) + ": expected a finite number");
    return d;
  }

  long integer(const std::string& key, long def) {
    const json* v = take(key);
    if (!v) return def;
    if (!v->is_number_integer()) throw ConfigError(at(key) + ": expected an integer");
    return v->get<long>();
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = take(key);
    if (!v) return def;
    if (!v->is_boolean()) throw ConfigError(at(key) + ": expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& def) {
    const json* v = take(key);
    if (!v) return def;
    if (!v->is_string()) throw ConfigError(at(key) + ": expected a string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> def) {
    const json* v = take(key);
    if (!v) return def;
    return number_list(*v, at(key));
  }

  void finish() const {
    if (!j_) return;
    for (const auto& [key, value] : j_->items()) {
      if (!used_.count(key)) throw ConfigError("unknown key '" + at(key) + "'");
    }
  }

  static std::vector<double> number_list(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number() || !std::isfinite(e.get<double>())) throw ConfigError(path + ": expected finite numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

 private:
  const json* j_;
  std::string path_;
  std::set<std::string> used_;
};

void require(bool cond, const std::string& message) {
  if (!cond) throw ConfigError(message);
}

Vec to_vec(const std::vector<double>& v) {
  Vec out{};
  std::copy_n(v.begin(), std::min<std::size_t>(v.size(), 3), out.begin());
  return out;
}


json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// ---------------------------------------------------------------------------
// Datum catalog

struct DatumContext {
  int dim = 2;
  double s = 0.75;
};

const std::map<std::string, std::string>& catalog() {
  static const std::map<std::string, std::string> entries{
      {"constant", "value (0)"},
      {"gaussian", "amplitude (1), center (origin), width (1)"},
      {"profile_difference", "s (operator s), r (2); a(x) - a(y) with a = (r^2 - x^2)_+^s / B, N = 2 only"},
      {"truncated_saddle", "inner (2), outer (3); (x^2 - y^2) times a smooth cutoff"},
      {"radial_bump", "amplitude (1), center (origin), inner (0.2), outer (0.5)"},
  };
  return entries;
}

std::vector<double> center_param(Section& p, const DatumContext& ctx) {
  const auto c = p.numbers("center", std::vector<double>(ctx.dim, 0.0));
  require(static_cast<int>(c.size()) == ctx.dim, p.at("center") + ": expected " + std::to_string(ctx.dim) + " coordinates");
  return c;
}

json resolve_datum(const json& j, const std::string& path, const DatumContext& ctx) {
  if (j.is_number()) return resolve_datum(json{{"builtin", "constant"}, {"params", {{"value", j}}}}, path, ctx);
  Section sec(&j, path);
  require(j.is_object(), path + ": expected a number or an object");
  const int forms = static_cast<int>(j.contains("builtin")) + static_cast<int>(j.contains("sum")) +
                    static_cast<int>(j.contains("scaled"));
  require(forms == 1, path + ": expected exactly one of 'builtin', 'sum', 'scaled'");

  json out;
  if (j.contains("sum")) {
    const json* terms = sec.take("sum");
    require(terms && terms->is_array() && !terms->empty(), sec.at("sum") + ": expected a non-empty array");
    json list = json::array();
    for (std::size_t i = 0; i < terms->size(); ++i)
      list.push_back(resolve_datum((*terms)[i], sec.at("sum") + "[" + std::to_string(i) + "]", ctx));
    out = {{"sum", list}};
  } else if (j.contains("scaled")) {
    Section sc(sec.take("scaled"), sec.at("scaled"));
    const double factor = sc.number("factor", 1.0);
    const json* inner = sc.take("datum");
    require(inner != nullptr, sc.at("datum") + ": required");
    out = {{"scaled", {{"factor", factor}, {"datum", resolve_datum(*inner, sc.at("datum"), ctx)}}}};
    sc.finish();
  } else {
    const std::string name = sec.string("builtin", "");
    Section p(sec.take("params"), sec.at("params"));
    json params;
    if (name == "constant") {
      params = {{"value", p.number("value", 0.0)}};
    } else if (name == "gaussian") {
      params = {{"amplitude", p.number("amplitude", 1.0)}, {"center", center_param(p, ctx)}, {"width", p.number("width", 1.0)}};
      require(params["width"].get<double>() > 0.0, p.at("width") + ": must be positive");
    } else if (name == "profile_difference") {
      require(ctx.dim == 2, sec.at("builtin") + ": profile_difference is defined for N = 2 only");
      params = {{"s", p.number("s", ctx.s)}, {"r", p.number("r", 2.0)}};
      require(params["r"].get<double>() > 0.0, p.at("r") + ": must be positive");
    } else if (name == "truncated_saddle") {
      params = {{"inner", p.number("inner", 2.0)}, {"outer", p.number("outer", 3.0)}};
    } else if (name == "radial_bump") {
      params = {{"amplitude", p.number("amplitude", 1.0)}, {"center", center_param(p, ctx)},
                {"inner", p.number("inner", 0.2)}, {"outer", p.number("outer", 0.5)}};
    } else {
      throw ConfigError(sec.at("builtin") + ": unknown builtin '" + name + "'");
    }
    if (params.contains("outer")) {
      require(params["inner"].get<double>() >= 0.0 && params["inner"].get<double>() < params["outer"].get<double>(),
              p.at("inner") + ": need 0 <= inner < outer");
    }
    p.finish();
    out = {{"builtin", name}, {"params", params}};
  }
  sec.finish();
  return out;
}

// ---------------------------------------------------------------------------
// Study parameters

const std::vector<std::string> kStudies{"nonlinearity", "s_limit", "eigen_limit", "properties"};

json resolve_study_params(const std::string& name, const json* raw, const std::string& path) {
  Section p(raw, path);
  json out;
  if (name == "nonlinearity") {
    const NonlinearityConfig d;
    out = {{"s", p.number("s", d.s.value())},
           {"grid_n", p.integer("grid_n", d.grid_n)},
           {"r", p.number("r", d.r)},
           {"epsilon", p.number("epsilon", d.epsilon)},
           {"bump_center", p.numbers("bump_center", {d.bump_center[0], d.bump_center[1]})},
           {"bump_inner", p.number("bump_inner", d.bump_inner)},
           {"bump_outer", p.number("bump_outer", d.bump_outer)},
           {"T", p.number("T", *d.quadrature.T)},
           {"delta_cells", p.number("delta_cells", d.quadrature.delta_cells)},
           {"nodes_per_decade", p.integer("nodes_per_decade", d.quadrature.nodes_per_decade)},
           {"M", p.integer("M", d.directions.resolution)},
           {"solver_tol", p.number("solver_tol", d.solver_tol)},
           {"directional_tolerance", p.number("directional_tolerance", d.directional_tolerance)},
           {"recovery_tolerance", p.number("recovery_tolerance", d.recovery_tolerance)}};
    require(out["bump_center"].size() == 2, p.at("bump_center") + ": expected 2 coordinates");
    require(out["epsilon"].get<double>() > 0.0 && out["epsilon"].get<double>() < 0.5, p.at("epsilon") + ": need 0 < epsilon < 1/2");
  } else if (name == "s_limit") {
    const SLimitConfig d;
    out = {{"s_list", p.numbers("s_list", d.s_list)},
           {"grid_n", p.integer("grid_n", 64)},
           {"M", p.integer("M", 64)},
           {"final_tolerance", p.number("final_tolerance", d.final_tolerance)},
           {"include_midrange", p.boolean("include_midrange", d.include_midrange)},
           {"solver_tol", optional_json(p.optional_number("solver_tol"))}};
    require(!out["s_list"].empty(), p.at("s_list") + ": must not be empty");
  } else if (name == "eigen_limit") {
    const EigenLimitConfig d;
    out = {{"A", p.numbers("A", {0.5, 0, 0, 0, 1, 0, 0, 0, 2.5})},
           {"s_list", p.numbers("s_list", d.s_list)},
           {"tolerance", p.number("tolerance", d.tolerance)},
           {"resolution", p.integer("resolution", d.resolution)},
           {"subspace_normals", p.integer("subspace_normals", d.subspace_normals)},
           {"subspace_inplane", p.integer("subspace_inplane", d.subspace_inplane)},
           {"delta", p.number("delta", d.delta)},
           {"T", p.number("T", d.T)},
           {"nodes_per_decade", p.integer("nodes_per_decade", d.nodes_per_decade)},
           {"inner", p.number("inner", 1.0)},
           {"outer", p.number("outer", 2.0)}};
    const std::size_t n = out["A"].size();
    require(n == 1 || n == 4 || n == 9, p.at("A") + ": expected a row-major 1x1, 2x2 or 3x3 matrix");
    const int dim = n == 1 ? 1 : n == 4 ? 2 : 3;
    for (int i = 0; i < dim; ++i)
      for (int k = 0; k < i; ++k)
        require(out["A"][i * dim + k] == out["A"][k * dim + i], p.at("A") + ": must be symmetric");
    require(!out["s_list"].empty(), p.at("s_list") + ": must not be empty");
  } else if (name == "properties") {
    const PropertiesConfig d;
    const json* seed = p.take("seed");
    std::uint64_t seed_value = d.seed;
    if (seed) {
      require(seed->is_number_integer() && seed->get<long long>() >= 0, p.at("seed") + ": expected a nonnegative integer");
      seed_value = seed->get<std::uint64_t>();
    }
    out = {{"seed", seed_value},
           {"s", p.number("s", d.s.value())},
           {"field_grid_n", p.integer("field_grid_n", d.field_grid_n)},
           {"random_fields", p.integer("random_fields", d.random_fields)},
           {"ordering_evaluations", p.integer("ordering_evaluations", d.ordering_evaluations)},
           {"coefficient_draws", p.integer("coefficient_draws", d.coefficient_draws)},
           {"lambda_draws", p.integer("lambda_draws", d.lambda_draws)},
           {"comparison_pairs", p.integer("comparison_pairs", d.comparison_pairs)},
           {"solve_grid_n", p.integer("solve_grid_n", d.solve_grid_n)},
           {"resolution", p.integer("resolution", d.resolution)},
           {"solver_tol", p.number("solver_tol", d.solver_tol)}};
  } else {
    throw ConfigError("study.name: unknown study '" + name + "' (expected nonlinearity, s_limit, eigen_limit or properties)");
  }
  p.finish();
  for (const auto& [key, value] : out.items()) {
    if (value.is_number_integer()) require(value.get<long>() > 0 || key == "seed", p.at(key) + ": must be positive");
  }
  return out;
}

OperatorSpec build_spec(const json& o);

// ---------------------------------------------------------------------------

json resolve_impl(const json& raw) {
  Section top(&raw, "");
  require(raw.is_object(), "config: expected a JSON object");

  // domain
  Section dom(top.take("domain"), "domain");
  const std::string shape = dom.string("shape", "ball");
  Section dp(dom.take("params"), "domain.params");
  json domain_params;
  int dim = 0;
  if (shape == "ball") {
    const auto c = dp.numbers("center", {0.0, 0.0});
    const double r = dp.number("radius", 1.0);
    require(c.size() >= 1 && c.size() <= 3, dp.at("center") + ": expected 1 to 3 coordinates");
    require(r > 0.0, dp.at("radius") + ": must be positive");
    domain_params = {{"center", c}, {"radius", r}};
    dim = static_cast<int>(c.size());
  } else if (shape == "box") {
    const auto lo = dp.numbers("lo", {-1.0, -1.0});
    const auto hi = dp.numbers("hi", {1.0, 1.0});
    require(lo.size() == hi.size() && lo.size() >= 1 && lo.size() <= 3, dp.at("lo") + ": lo and hi need 1 to 3 matching coordinates");
    for (std::size_t i = 0; i < lo.size(); ++i) require(lo[i] < hi[i], dp.at("hi") + ": need lo < hi on every axis");
    domain_params = {{"lo", lo}, {"hi", hi}};
    dim = static_cast<int>(lo.size());
  } else if (shape == "interval") {
    const double a = dp.number("a", -1.0), b = dp.number("b", 1.0);
    require(a < b, dp.at("b") + ": need a < b");
    domain_params = {{"a", a}, {"b", b}};
    dim = 1;
  } else {
    throw ConfigError("domain.shape: unknown shape '" + shape + "' (expected ball, box or interval)");
  }
  dp.finish();
  dom.finish();

  // grid
  Section gs(top.take("grid"), "grid");
  std::vector<double> counts(dim, 64.0);
  if (const json* c = gs.take("counts")) {
    if (c->is_number_integer()) {
      counts.assign(dim, c->get<double>());
    } else {
      counts = Section::number_list(*c, "grid.counts");
    }
  }
  require(static_cast<int>(counts.size()) == dim, "grid.counts: expected " + std::to_string(dim) + " entries");
  json counts_json = json::array();
  for (double c : counts) {
    require(c >= 3 && c == std::floor(c) && c <= 4096, "grid.counts: entries must be integers in [3, 4096]");
    counts_json.push_back(static_cast<long>(c));
  }
  gs.finish();

  // operator
  Section op(top.take("operator"), "operator");
  const std::string kind = op.string("kind", "trace");
  const double s = op.number("s", 0.75);
  require(s > 0.0 && s < 1.0, "operator.s: must lie in (0, 1)");
  const auto coefficients = op.numbers("coefficients", {});
  const double lower = op.number("lower", 1.0), upper = op.number("upper", 1.0);
  op.finish();
  const OperatorKind k = operator_kind_from_string(kind);
  if (k == OperatorKind::weighted) {
    require(static_cast<int>(coefficients.size()) == dim,
            "operator.coefficients: weighted needs " + std::to_string(dim) + " coefficients");
  } else {
    require(coefficients.empty(), "operator.coefficients: only used by kind 'weighted'");
  }

  // quadrature
  Section qs(top.take("quadrature"), "quadrature");
  const auto delta = qs.optional_number("delta");
  const double delta_cells = qs.number("delta_cells", 4.0);
  const auto T = qs.optional_number("T");
  const long npd = qs.integer("nodes_per_decade", 16);
  const long ppc = qs.integer("points_per_cell", 2);
  const std::string tail = qs.string("tail_mode", "zero_tail");
  qs.finish();
  require(!delta || *delta > 0.0, "quadrature.delta: must be positive");
  require(delta_cells > 0.0, "quadrature.delta_cells: must be positive");
  require(!T || *T > 0.0, "quadrature.T: must be positive");
  require(npd >= 4, "quadrature.nodes_per_decade: must be at least 4");
  require(ppc == 1 || ppc == 2, "quadrature.points_per_cell: must be 1 or 2");
  require(tail == "zero_tail" || tail == "constant_tail", "quadrature.tail_mode: expected zero_tail or constant_tail");

  // directions
  Section ds(top.take("directions"), "directions");
  const long M = ds.integer("M", 64);
  const long normals = ds.integer("subspace_normals", 8);
  const long inplane = ds.integer("subspace_inplane", 16);
  ds.finish();
  require(M >= 2 && normals >= 2 && inplane >= 2, "directions: resolutions must be at least 2");

  // datum and rhs
  const DatumContext ctx{dim, s};
  const json* dj = top.take("datum");
  const json datum_json = resolve_datum(dj ? *dj : json(0.0), "datum", ctx);
  json rhs_json;
  {
    const json* rj = top.take("rhs");
    json body = rj ? *rj : json(0.0);
    std::string form = "equation";
    if (body.is_object() && body.contains("form")) {
      require(body["form"].is_string(), "rhs.form: expected a string");
      form = body["form"].get<std::string>();
      body.erase("form");
    }
    require(form == "equation" || form == "operator", "rhs.form: expected equation or operator");
    rhs_json = resolve_datum(body, "rhs", ctx);
    rhs_json["form"] = form;
  }

  // solver
  Section ss(top.take("solver"), "solver");
  const auto tol = ss.optional_number("tol");
  const long max_iter = ss.integer("max_iter", 1000000);
  const double damping = ss.number("damping", 0.9);
  const std::string guess = ss.string("initial_guess", "datum_mean");
  ss.finish();
  require(!tol || *tol >= 0.0, "solver.tol: must be nonnegative");
  require(max_iter >= 0, "solver.max_iter: must be nonnegative");
  require(damping > 0.0 && damping <= 1.0, "solver.damping: must lie in (0, 1]");
  require(guess == "datum_mean" || guess == "datum_min" || guess == "datum_max",
          "solver.initial_guess: expected datum_mean, datum_min or datum_max");

  // eval
  Section es(top.take("eval"), "eval");
  json points = json::array();
  if (const json* pj = es.take("points")) {
    require(pj->is_array(), "eval.points: expected an array of points");
    for (std::size_t i = 0; i < pj->size(); ++i) {
      const std::string path = "eval.points[" + std::to_string(i) + "]";
      const auto pt = Section::number_list((*pj)[i], path);
      require(static_cast<int>(pt.size()) == dim, path + ": expected " + std::to_string(dim) + " coordinates");
      points.push_back(pt);
    }
  }
  es.finish();

  // study
  Section st(top.take("study"), "study");
  json study = {{"name", nullptr}, {"params", json::object()}};
  const json* params = st.take("params");
  if (const json* name = st.take("name")) {
    require(name->is_string(), "study.name: expected a string");
    study["name"] = *name;
    study["params"] = resolve_study_params(name->get<std::string>(), params, "study.params");
  } else {
    require(!params || params->empty(), "study.params: given without study.name");
  }
  st.finish();
  top.finish();

  json out;
  out["domain"] = {{"shape", shape}, {"params", domain_params}};
  out["grid"] = {{"counts", counts_json}};
  out["operator"] = {{"kind", kind}, {"s", s}, {"coefficients", coefficients}, {"lower", lower}, {"upper", upper}};
  out["quadrature"] = {{"delta", optional_json(delta)}, {"delta_cells", delta_cells}, {"T", optional_json(T)},
                       {"nodes_per_decade", npd}, {"points_per_cell", ppc}, {"tail_mode", tail}};
  out["directions"] = {{"M", M}, {"subspace_normals", normals}, {"subspace_inplane", inplane}};
  out["datum"] = datum_json;
  out["rhs"] = rhs_json;
  out["solver"] = {{"tol", optional_json(tol)}, {"max_iter", max_iter}, {"damping", damping}, {"initial_guess", guess}};
  out["eval"] = {{"points", points}};
  out["study"] = study;

  try {
    build_spec(out["operator"]).validate(dim);
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("operator: ") + e.what());
  }
  return out;
}

Domain build_domain(const json& d) {
  const json& p = d.at("params");
  const std::string shape = d.at("shape");
  if (shape == "ball") {
    const auto c = p.at("center").get<std::vector<double>>();
    return Domain::ball(to_vec(c), p.at("radius").get<double>(), static_cast<int>(c.size()));
  }
  if (shape == "box") {
    const auto lo = p.at("lo").get<std::vector<double>>();
    return Domain::box(to_vec(lo), to_vec(p.at("hi").get<std::vector<double>>()), static_cast<int>(lo.size()));
  }
  return Domain::interval(p.at("a").get<double>(), p.at("b").get<double>());
}

OperatorSpec build_spec(const json& o) {
  const FractionalOrder s(o.at("s").get<double>());
  switch (operator_kind_from_string(o.at("kind"))) {
    case OperatorKind::trace: return OperatorSpec::trace(s);
    case OperatorKind::midrange: return OperatorSpec::midrange(s);
    case OperatorKind::weighted: return OperatorSpec::weighted(s, o.at("coefficients").get<std::vector<double>>());
    case OperatorKind::pucci_plus: return OperatorSpec::pucci_plus(s, o.at("lower"), o.at("upper"));
    case OperatorKind::pucci_minus: return OperatorSpec::pucci_minus(s, o.at("lower"), o.at("upper"));
    case OperatorKind::classical_mean: return OperatorSpec::classical_mean(s);
  }
  throw ConfigError("operator.kind: unsupported");
}

std::optional<double> get_optional(const json& j) {
  return j.is_null() ? std::nullopt : std::optional<double>(j.get<double>());
}

// ---------------------------------------------------------------------------
// Output

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
  if (!f) throw ConfigError("failed writing " + path.string());
}

json nullable(double v) { return std::isfinite(v) ? json(v == 0.0 ? 0.0 : v) : json(nullptr); }

json vec_json(const Vec& v, int dim) {
  json a = json::array();
  for (int i = 0; i < dim; ++i) a.push_back(v[i]);
  return a;
}

std::string coordinate_header(int dim) {
  static const char* names[] = {"x", "y", "z"};
  std::string h;
  for (int i = 0; i < dim; ++i) h += std::string(names[i]) + ",";
  return h;
}

json study_json(const StudyResult& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"stage", row.stage}, {"parameter", row.parameter}, {"value", nullable(row.value)},
                    {"error", nullable(row.error)}, {"tolerance", nullable(row.tolerance)},
                    {"criterion", to_string(row.criterion)}, {"resolution", row.resolution}, {"pass", row.pass}});
  }
  return {{"name", r.name}, {"passed", r.passed()}, {"failed_stages", r.failed_stages()}, {"rows", rows},
          {"notes", r.notes}, {"artifacts", r.artifacts}, {"wall_seconds", r.wall_seconds}};
}

struct Context {
  json config;
  std::filesystem::path out_dir;
  int threads = 1;
  bool verbose = false;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  void log(const std::string& line) const {
    if (verbose) *err << line << "\n";
  }
  void prepare() const {
    std::filesystem::create_directories(out_dir);
    write_text(out_dir / "config.json", config.dump(2) + "\n");
    log("resolved config written to " + (out_dir / "config.json").string());
  }
};

int cmd_eval(const Context& c) {
  const json& points = c.config.at("eval").at("points");
  require(!points.empty(), "eval.points: at least one point is required");
  c.prepare();
  const Problem p = build_problem(c.config);
  const int dim = p.grid->dim();
  const Field f = Field::from_function(p.grid, p.datum, p.datum.evaluate);
  const LineQuadrature q = resolve_quadrature(p);
  const DirectionSet dirs = make_direction_set(dim, p.directions.resolution);
  std::optional<SubspaceSet> subs;
  if (dim == 3 && p.spec.needs_intermediate(3))
    subs = make_subspace_set(p.directions.subspace_normals, p.directions.subspace_inplane);

  json results = json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec x = to_vec(points[i].get<std::vector<double>>());
    require(p.grid->domain().contains(x), "eval.points[" + std::to_string(i) + "]: must lie strictly inside the domain");
    const PointEvaluation e = evaluate(p.spec, f, x, dirs, subs ? &*subs : nullptr, q);
    json lambda = json::array(), witnesses = json::array();
    for (int k = 0; k < dim; ++k) {
      lambda.push_back(nullable(e.lambda[k]));
      witnesses.push_back(std::isfinite(e.lambda[k]) ? vec_json(e.witnesses[k], dim) : json(nullptr));
    }
    results.push_back({{"x", vec_json(x, dim)}, {"lambda", lambda}, {"witnesses", witnesses},
                       {"lambda_complete", e.lambda_complete}, {"theta_mean", nullable(e.theta_mean)},
                       {"equation_value", nullable(e.equation_value)}, {"operator_value", nullable(e.operator_value)}});
  }
  const json doc = {{"points", results}, {"operator", to_string(p.spec.kind)}};
  write_text(c.out_dir / "eval.json", doc.dump(2) + "\n");
  *c.out << doc.dump(2) << "\n";
  return ok;
}

int cmd_solve(const Context& c) {
  c.prepare();
  const Problem p = build_problem(c.config);
  const SolverOptions opt = build_solver_options(c.config, c.threads);
  c.log("grid interior nodes: " + std::to_string(p.grid->interior_count()));
  const SolveReport r = solve_dirichlet(p, opt);
  const int dim = p.grid->dim();

  std::string csv = coordinate_header(dim) + "value\n";
  const auto& nodes = p.grid->interior_nodes();
  const auto values = r.solution.interior_values();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Vec x = p.grid->node(nodes[i]);
    for (int d = 0; d < dim; ++d) csv += format_number(x[d]) + ",";
    csv += format_number(values[i]) + "\n";
  }
  write_text(c.out_dir / "solution.csv", csv);

  const json report = {{"converged", r.converged},
                       {"iterations", r.iterations},
                       {"final_residual", r.final_residual},
                       {"tolerance", r.tolerance},
                       {"damping", r.damping},
                       {"normalization", r.normalization},
                       {"observed_rate", r.observed_rate},
                       {"initial_value", r.initial_value},
                       {"wall_seconds", r.wall_seconds},
                       {"warnings", r.warnings},
                       {"residual_history", r.residual_history},
                       {"solution", "solution.csv"},
                       {"config", c.config}};
  write_text(c.out_dir / "report.json", report.dump(2) + "\n");
  for (const auto& w : r.warnings) *c.err << "warning: " << w << "\n";
  *c.out << "solve: " << (r.converged ? "converged" : "NOT converged") << " after " << r.iterations
         << " iterations, residual " << format_number(r.final_residual) << " (tol " << format_number(r.tolerance)
         << ")\n";
  return r.converged ? ok : not_converged;
}

StudyResult run_study(const std::string& name, const json& p, int threads) {
  if (name == "nonlinearity") {
    NonlinearityConfig cfg;
    cfg.s = FractionalOrder(p.at("s").get<double>());
    cfg.grid_n = p.at("grid_n");
    cfg.r = p.at("r");
    cfg.epsilon = p.at("epsilon");
    const auto bc = p.at("bump_center").get<std::vector<double>>();
    cfg.bump_center = {bc[0], bc[1], 0.0};
    cfg.bump_inner = p.at("bump_inner");
    cfg.bump_outer = p.at("bump_outer");
    cfg.quadrature.T = p.at("T").get<double>();
    cfg.quadrature.delta_cells = p.at("delta_cells");
    cfg.quadrature.nodes_per_decade = p.at("nodes_per_decade");
    cfg.directions.resolution = p.at("M");
    cfg.solver_tol = p.at("solver_tol");
    cfg.directional_tolerance = p.at("directional_tolerance");
    cfg.recovery_tolerance = p.at("recovery_tolerance");
    cfg.threads = threads;
    return nonlinearity_experiment(cfg);
  }
  if (name == "s_limit") {
    SLimitConfig cfg;
    cfg.s_list = p.at("s_list").get<std::vector<double>>();
    cfg.final_tolerance = p.at("final_tolerance");
    cfg.include_midrange = p.at("include_midrange");
    cfg.solver.tol = get_optional(p.at("solver_tol"));
    cfg.solver.threads = threads;
    const Problem tmpl = s_limit_problem(p.at("grid_n"), p.at("M"));
    return s_limit_study(tmpl, [](const Vec& x) { return x[0] * x[0] - x[1] * x[1]; }, cfg);
  }
  if (name == "eigen_limit") {
    EigenLimitConfig cfg;
    const auto A = p.at("A").get<std::vector<double>>();
    const int dim = A.size() == 1 ? 1 : A.size() == 4 ? 2 : 3;
    cfg.s_list = p.at("s_list").get<std::vector<double>>();
    cfg.tolerance = p.at("tolerance");
    cfg.resolution = p.at("resolution");
    cfg.subspace_normals = p.at("subspace_normals");
    cfg.subspace_inplane = p.at("subspace_inplane");
    cfg.delta = p.at("delta");
    cfg.T = p.at("T");
    cfg.nodes_per_decade = p.at("nodes_per_decade");
    return eigen_limit_check(quadratic_probe(A, dim, p.at("inner"), p.at("outer")), A, dim, cfg);
  }
  PropertiesConfig cfg;
  cfg.seed = p.at("seed");
  cfg.s = FractionalOrder(p.at("s").get<double>());
  cfg.field_grid_n = p.at("field_grid_n");
  cfg.random_fields = p.at("random_fields");
  cfg.ordering_evaluations = p.at("ordering_evaluations");
  cfg.coefficient_draws = p.at("coefficient_draws");
  cfg.lambda_draws = p.at("lambda_draws");
  cfg.comparison_pairs = p.at("comparison_pairs");
  cfg.solve_grid_n = p.at("solve_grid_n");
  cfg.resolution = p.at("resolution");
  cfg.solver_tol = p.at("solver_tol");
  cfg.threads = threads;
  return properties_study(cfg);
}

int cmd_study(const Context& c) {
  const json& st = c.config.at("study");
  require(!st.at("name").is_null(), "study.name: required for the study command");
  c.prepare();
  const std::string name = st.at("name");
  c.log("running study " + name);
  StudyResult r = run_study(name, st.at("params"), c.threads);
  r.write_csv(c.out_dir.string());
  json verdict = study_json(r);
  verdict["config"] = c.config;
  write_text(c.out_dir / (name + ".json"), verdict.dump(2) + "\n");
  for (const auto& row : r.rows) {
    if (c.verbose || !row.pass) {
      *c.out << (row.pass ? "  ok   " : "  FAIL ") << row.stage << " " << row.parameter << " error="
             << format_number(row.error) << " tol=" << format_number(row.tolerance) << "\n";
    }
  }
  *c.out << "study " << name << ": " << (r.passed() ? "PASS" : "FAIL") << " (" << r.rows.size() << " rows, "
         << format_number(std::round(r.wall_seconds * 10) / 10) << " s)\n";
  return r.passed() ? ok : study_failed;
}

}  // namespace

// ---------------------------------------------------------------------------

json default_config() { return resolve_impl(json::object()); }

json resolve_config(const json& raw) { return resolve_impl(raw); }

json parse_config_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

json load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str());
}

ExteriorDatum build_datum(const json& d) {
  if (d.contains("sum")) {
    std::vector<ExteriorDatum> terms;
    for (const auto& t : d.at("sum")) terms.push_back(build_datum(t));
    return datum::sum(std::move(terms));
  }
  if (d.contains("scaled")) {
    const json& sc = d.at("scaled");
    return datum::scaled(sc.at("factor").get<double>(), build_datum(sc.at("datum")));
  }
  const std::string name = d.at("builtin");
  const json& p = d.at("params");
  if (name == "constant") return datum::constant(p.at("value"));
  if (name == "gaussian") {
    return datum::gaussian(p.at("amplitude"), to_vec(p.at("center").get<std::vector<double>>()), p.at("width"));
  }
  if (name == "profile_difference") return profile_difference_datum(make_profile_a(FractionalOrder(p.at("s").get<double>()), p.at("r")));
  if (name == "truncated_saddle") return datum::truncated_saddle(p.at("inner"), p.at("outer"));
  if (name == "radial_bump") {
    return datum::radial_bump(p.at("amplitude"), to_vec(p.at("center").get<std::vector<double>>()), p.at("inner"),
                              p.at("outer"));
  }
  throw ConfigError("datum: unknown builtin '" + name + "'");
}

Problem build_problem(const json& c) {
  Problem p;
  const auto counts = c.at("grid").at("counts").get<std::vector<int>>();
  p.grid = std::make_shared<Grid>(build_domain(c.at("domain")), counts);
  p.spec = build_spec(c.at("operator"));
  p.datum = build_datum(c.at("datum"));
  const json& rhs = c.at("rhs");
  const bool zero_rhs = rhs.contains("builtin") && rhs.at("builtin") == "constant" && rhs.at("params").at("value") == 0.0;
  if (!zero_rhs) p.rhs = build_datum(rhs).evaluate;
  p.rhs_form = rhs.at("form") == "operator" ? RhsForm::operator_form : RhsForm::equation;
  const json& q = c.at("quadrature");
  p.quadrature.delta = get_optional(q.at("delta"));
  p.quadrature.delta_cells = q.at("delta_cells");
  p.quadrature.T = get_optional(q.at("T"));
  p.quadrature.nodes_per_decade = q.at("nodes_per_decade");
  p.quadrature.points_per_cell = q.at("points_per_cell");
  p.quadrature.tail_mode = q.at("tail_mode") == "constant_tail" ? TailMode::constant_tail : TailMode::zero_tail;
  const json& d = c.at("directions");
  p.directions.resolution = d.at("M");
  p.directions.subspace_normals = d.at("subspace_normals");
  p.directions.subspace_inplane = d.at("subspace_inplane");
  return p;
}

SolverOptions build_solver_options(const json& c, int threads) {
  const json& s = c.at("solver");
  SolverOptions o;
  o.tol = get_optional(s.at("tol"));
  o.max_iter = s.at("max_iter");
  o.damping = s.at("damping");
  const std::string g = s.at("initial_guess");
  o.guess = g == "datum_min" ? InitialGuess::datum_min : g == "datum_max" ? InitialGuess::datum_max : InitialGuess::datum_mean;
  o.threads = threads;
  return o;
}

std::string defaults_help() {
  std::ostringstream h;
  h << "\nCONFIG (JSON; unknown keys are rejected). Defaults, null meaning derived:\n"
    << "  quadrature.delta = delta_cells * grid spacing, quadrature.T = 8 * diam(domain),\n"
    << "  solver.tol = 1e-8 * (1 + sup|datum|).\n"
    << default_config().dump(2) << "\n\n"
    << "DATUM / RHS: a number (constant), {\"builtin\": name, \"params\": {...}},\n"
    << "  {\"sum\": [d1, d2, ...]} or {\"scaled\": {\"factor\": k, \"datum\": d}}.\n"
    << "  rhs may carry \"form\": \"equation\" (E(u) = f) or \"operator\" (operator value = f).\n";
  for (const auto& [name, params] : catalog()) h << "  " << name << ": " << params << "\n";
  h << "\nSTUDY: {\"name\": one of nonlinearity, s_limit, eigen_limit, properties, \"params\": {...}}.\n";
  for (const auto& name : kStudies) h << "  " << name << ": " << resolve_study_params(name, nullptr, "study.params").dump() << "\n";
  h << "\nEXIT CODES: 0 ok, 2 config error, 3 numerical failure, 4 not converged, 5 study failed.\n";
  return h.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"fracop: fractional eigenvalue operators, Dirichlet solves and studies", "fracop"};
  std::string config_path;
  std::string out_dir = "fracop_out";
  int threads = 1;
  bool verbose = false;
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--threads", threads, "worker threads for solver sweeps")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_flag("--verbose", verbose, "progress and all study rows");
  auto* eval = app.add_subcommand("eval", "evaluate eigenvalues and the operator of the datum at eval.points");
  auto* solve = app.add_subcommand("solve", "solve the Dirichlet problem; writes solution.csv and report.json");
  auto* study = app.add_subcommand("study", "run study.name; writes <name>.csv and <name>.json");
  for (auto* sub : {eval, solve, study}) sub->fallthrough();
  app.require_subcommand(1, 1);
  app.footer(defaults_help());

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return e.get_exit_code() == 0 ? ok : config_error;
  }

  try {
    Context c;
    c.config = resolve_config(load_config(config_path));
    c.out_dir = out_dir;
    c.threads = threads;
    c.verbose = verbose;
    c.out = &out;
    c.err = &err;
    if (verbose) err << c.config.dump(2) << "\n";
    if (eval->parsed()) return cmd_eval(c);
    if (solve->parsed()) return cmd_solve(c);
    return cmd_study(c);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return numerical_failure;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const std::domain_error& e) {
    err << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "config error: " << e.what() << "\n";
    return config_error;
  }
}

}  // namespace fracop::cli
