#pragma once

#include "fista/instance.hpp"
#include "fista/solvers.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fista::cli {

/// Parsed "--variant" preset, e.g. "mod:0.05,0.5,4" or "rada1:auto".
struct VariantSpec {
    std::string text;
    std::string name;
    std::vector<double> params;
    bool auto_xi = false;
};

VariantSpec parse_variant(const std::string& text);

struct SolverSetup {
    InertialRule<double> rule;
    RestartPolicy<double> policy;
    std::optional<double> step;
};

/// Turns a preset into a rule/policy pair for `problem` (some presets need L or alpha).
SolverSetup make_setup(const VariantSpec& spec, const Problem<double>& problem);

/// Greedy FISTA (gamma = 1.3/L, S = 1, xi = 0.96) from x0 = 0 down to residual `tol`.
RunTrace<double> reference_run(const Problem<double>& problem, double tol, long max_iters);

/// key = value lines ('#' comments) turned into "--key=value" tokens.
std::vector<std::string> read_config_file(const std::string& path);

/// Resolves "--config <file>": file tokens go right after the subcommand and
/// any key also given on the command line is dropped from the file part.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

void write_trace_csv(std::ostream& out, const RunTrace<double>& trace);

nlohmann::json summary_json(const RunTrace<double>& trace, const Problem<double>& problem,
                            std::uint64_t seed, const std::string& preset);

/// Entry point shared by the executable and the tests. Returns the exit code:
/// 0 success, 1 usage or input error, 2 numerical fault.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fista::cli
