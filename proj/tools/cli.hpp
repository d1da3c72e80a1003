#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracop/solver.hpp"

namespace fracop::cli {

enum ExitCode : int {
  ok = 0,
  config_error = 2,
  numerical_failure = 3,
  not_converged = 4,
  study_failed = 5,
};

/// Every key with its default. Optional numbers are null ("derived").
nlohmann::json default_config();

/// Validates a raw config and fills in defaults. Unknown keys, wrong types and
/// inadmissible values throw ConfigError naming the offending path. The result
/// is canonical: resolve_config(resolve_config(j)) == resolve_config(j).
nlohmann::json resolve_config(const nlohmann::json& raw);

/// Parses a JSON document; syntax errors become ConfigError with line/column.
nlohmann::json parse_config_text(const std::string& text);
nlohmann::json load_config(const std::string& path);

/// The Dirichlet problem described by a resolved config.
Problem build_problem(const nlohmann::json& resolved);
SolverOptions build_solver_options(const nlohmann::json& resolved, int threads);
/// A datum (or rhs) from its resolved description.
ExteriorDatum build_datum(const nlohmann::json& resolved_datum);

/// Text appended to --help: the defaults and the datum catalog.
std::string defaults_help();

/// Full command-line entry point. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fracop::cli
