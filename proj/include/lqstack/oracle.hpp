#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lqstack/closed_loop.hpp"
#include "lqstack/follower.hpp"
#include "lqstack/leader.hpp"
#include "lqstack/model.hpp"

namespace lqstack {

/// Configuration of the derivative-free search in brute_force_follower.
struct SearchConfig {
  double box = 5.0;             ///< parameter bounds: each entry in [-box, box]
  int resolution = 5;           ///< grid points per axis and refinement level
  int refinement_levels = 4;    ///< grid refinement passes
  int simplex_max_iter = 2000;  ///< Nelder-Mead iteration cap per start
  double tol = 1e-10;           ///< convergence tolerance on the objective
  std::uint64_t seed = 0;       ///< seed for the multi-start point set
  int multistarts = 8;          ///< deterministic low-discrepancy starts
  long max_evaluations = 2000000;  ///< total objective-evaluation budget
};

/// One named pass/fail check inside an oracle report.
struct OracleCheck {
  std::string name;
  bool pass = false;
  double value = 0.0;      ///< measured quantity
  double tolerance = 0.0;  ///< threshold it was compared against
};

/// Outcome of one oracle run. `gap` is best - analytic, reported with sign: a
/// negative gap beyond tolerance flags a violated optimality claim.
struct OracleReport {
  double best = 0.0;
  std::vector<double> best_params;
  double analytic = 0.0;
  double gap = 0.0;
  std::vector<OracleCheck> checks;
  bool pass = true;  ///< conjunction of all checks
};

/// Minimizes the simulated follower cost over follower schedules
/// (K_0..K_N, G_1..G_N) against the fixed leader schedule by deterministic
/// multi-start grid-then-Nelder-Mead descent, and compares the best value
/// found with the analytic x0'P_0 x0 of the backward recursion.
/// Pass criteria: gap >= -1e-6 (1 + |analytic|) and
/// |best - analytic| <= 1e-4 (1 + |analytic|).
/// Throws DimensionTooLarge when the parameter count (2N+1) m1 n exceeds 12,
/// SearchBudgetExceeded when cfg.max_evaluations is exhausted.
OracleReport brute_force_follower(const GameProblem& p,
                                  const GainSchedule& leader,
                                  const SearchConfig& cfg);

/// Central finite-difference check that each announced Kbar_k (k >= 1) is a
/// stationary point of the stage map Kbar_k -> x'P_k(Kbar_k)x with every
/// downstream recursion quantity held fixed. Stage 0 is skipped: its
/// announced gain is the effective leader gain, which optimizes the leader's
/// (not the follower's) stage objective. Probes random directions and random
/// x (seeded); pass iff every |directional derivative| <= 1e-5 (1 + |x'P_k x|).
/// h must lie in [1e-7, 1e-3].
OracleReport finite_diff_stationarity(const GameProblem& p,
                                      const ClosedLoopSolution& sol, double h,
                                      std::uint64_t seed = 0);

/// Independent confirmation of the leader recursion: builds the time-varying
/// LQR with cross terms over the reduced dynamics (A_red, B_red) from the
/// frozen follower quantities and solves it with a generic cross-term Riccati
/// recursion written independently of leader_backward. Pass iff the gain and
/// Pbar sequences agree to 1e-10 (max norm).
OracleReport reduced_lqr_crosscheck(const GameProblem& p,
                                    const FollowerRecursion& frec,
                                    const LeaderRecursion& lrec);

}  // namespace lqstack
