#include <cstdint>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "app.hpp"

namespace {

// Parses repeated --tolerance NAME=VALUE flags into a map.
std::map<std::string, double> parse_tolerances(
    const std::vector<std::string>& raw) {
  std::map<std::string, double> out;
  for (const std::string& item : raw) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw CLI::ValidationError("--tolerance expects NAME=VALUE, got '" +
                                 item + "'");
    const std::string name = item.substr(0, eq);
    try {
      std::size_t used = 0;
      const double value = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1)
        throw CLI::ValidationError("--tolerance value for '" + name +
                                   "' is not a number");
      out[name] = value;
    } catch (const std::invalid_argument&) {
      throw CLI::ValidationError("--tolerance value for '" + name +
                                 "' is not a number");
    } catch (const std::out_of_range&) {
      throw CLI::ValidationError("--tolerance value for '" + name +
                                 "' is out of range");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "lqstack: finite-horizon linear-quadratic leader-follower games with "
      "one-step-memory strategies"};
  app.require_subcommand(1);

  std::string problem_path, mode = "closed-loop", level = "fast";
  std::string solution_path;
  lqstack::cli::CommonOptions opt;
  std::uint64_t seed = 0;
  std::vector<std::string> tolerance_flags;

  CLI::App* solve = app.add_subcommand(
      "solve", "Solve one instance and write solution, gains, trajectory");
  solve->add_option("problem", problem_path, "problem JSON file")->required();
  solve->add_option("--mode", mode, "closed-loop (default) or feedback");
  solve->add_option("--out", opt.out_dir, "output directory (default .)");
  solve->add_option("--precision", opt.precision,
                    "fixed decimals in CSV output (default 6)");

  CLI::App* compare = app.add_subcommand(
      "compare", "Solve and simulate both modes, write a comparison report");
  compare->add_option("problem", problem_path, "problem JSON file")->required();
  compare->add_option("--out", opt.out_dir, "output directory (default .)");
  compare->add_option("--precision", opt.precision,
                      "fixed decimals in CSV output (default 6)");

  CLI::App* verify = app.add_subcommand(
      "verify", "Run the invariant suite against one instance");
  verify->add_option("problem", problem_path, "problem JSON file")->required();
  verify->add_option("--level", level, "fast (default) or full");
  verify->add_option("--seed", seed, "seed for the brute-force search");
  verify->add_option("--solution", solution_path,
                     "verify this solution document instead of a fresh solve");
  verify->add_option("--tolerance", tolerance_flags,
                     "override a named check tolerance, NAME=VALUE (repeatable)");
  verify->add_option("--out", opt.out_dir, "output directory (default .)");
  verify->add_option("--precision", opt.precision,
                     "fixed decimals in text output (default 6)");

  CLI::App* reproduce = app.add_subcommand(
      "reproduce-paper",
      "Regenerate the published benchmark tables from the embedded instance");
  reproduce->add_option("--out", opt.out_dir, "output directory (default .)");
  reproduce->add_option("--precision", opt.precision,
                        "fixed decimals in CSV output (default 6)");

  std::map<std::string, double> tolerances;
  try {
    app.parse(argc, argv);
    tolerances = parse_tolerances(tolerance_flags);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version exit 0; bad input exits 2
  }

  if (solve->parsed())
    return lqstack::cli::run_solve(problem_path, mode, opt, std::cout,
                                   std::cerr);
  if (compare->parsed())
    return lqstack::cli::run_compare(problem_path, opt, std::cout, std::cerr);
  if (verify->parsed())
    return lqstack::cli::run_verify(problem_path, level, seed, tolerances,
                                    solution_path, opt, std::cout, std::cerr);
  if (reproduce->parsed())
    return lqstack::cli::run_reproduce_paper(opt, std::cout, std::cerr);
  return 2;
}
