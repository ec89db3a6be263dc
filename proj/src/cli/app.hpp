#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>

namespace lqstack::cli {

/// Version string recorded in every run manifest.
inline constexpr const char* kToolVersion = "1.0.0";

/// The embedded benchmark instance (scalar system, horizon N = 5) used by
/// `reproduce-paper` and available to tests.
const char* embedded_benchmark_instance();

/// Options shared by all commands.
struct CommonOptions {
  std::string out_dir = ".";
  int precision = 6;  ///< fixed decimals in CSV and text outputs
};

/// Fixed-decimal formatter used for all CSV/text numbers: round-half-even,
/// never scientific, "-0.000" normalized to "0.000".
std::string format_fixed(double value, int precision);

/// solve: write solution.json, gains.csv, trajectory.csv, manifest.json.
/// mode is "closed-loop" or "feedback". Returns the process exit code
/// (0 success, 2 input validation, 3 solver failure).
int run_solve(const std::string& problem_path, const std::string& mode,
              const CommonOptions& opt, std::ostream& diag,
              std::ostream& err);

/// compare: solve and simulate both modes; write comparison.json, the two
/// gain tables, the two trajectories, manifest.json.
int run_compare(const std::string& problem_path, const CommonOptions& opt,
                std::ostream& diag, std::ostream& err);

/// verify: run the invariant suite at level "fast" or "full" (full adds the
/// brute-force follower search on a horizon truncated to the search's
/// parameter bound). `solution_path` optionally replaces the computed leader
/// schedule by one loaded from a solution document, so existing artifacts can
/// be checked. `tolerance_overrides` rebinds named check tolerances.
/// Returns 0, 2, 3, or 4 (verification failure).
int run_verify(const std::string& problem_path, const std::string& level,
               std::uint64_t seed,
               const std::map<std::string, double>& tolerance_overrides,
               const std::string& solution_path, const CommonOptions& opt,
               std::ostream& diag, std::ostream& err);

/// reproduce-paper: regenerate the three benchmark gain tables and the cost
/// comparison from the embedded instance, write table1.csv, table2.csv,
/// table3.csv, deviations.txt, manifest.json. Entries deviating from the
/// printed reference beyond 2e-3 are flagged in deviations.txt without
/// affecting the exit code.
int run_reproduce_paper(const CommonOptions& opt, std::ostream& diag,
                        std::ostream& err);

}  // namespace lqstack::cli
