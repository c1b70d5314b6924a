#pragma once

// Scenario runner behind the weylcheck command line.
//
// Exit codes: 0 pass, 1 check failure, 2 config error, 3 math error,
// 4 solver non-convergence.

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace weylcli {

enum ExitCode { kPass = 0, kCheckFailure = 1, kConfigError = 2, kMathError = 3, kNoConvergence = 4 };

struct Overrides {
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
};

struct BuiltinScenario {
  std::string name;
  std::string description;
  nlohmann::json config;
};

const std::vector<BuiltinScenario>& builtin_scenarios();
const BuiltinScenario* find_builtin(std::string_view name);

/// Check names accepted for a scenario kind; empty for an unknown kind.
std::vector<std::string> known_checks(std::string_view kind);

struct RunOutcome {
  int exit_code = kPass;
  nlohmann::json report;
};

/// Runs a parsed scenario. `solve_only` restricts to toda_solve scenarios and
/// writes the grid named by "output". Never throws for bad input; the exit
/// code and report carry the error.
RunOutcome run_scenario(const nlohmann::json& config, const Overrides& overrides, bool solve_only = false);

/// One CSV row per check: name,points_evaluated,max_defect,tolerance,pass.
std::string report_csv(const nlohmann::json& report);

/// Full command line without the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace weylcli
