#pragma once

#include <vector>

#include "lqstack/follower.hpp"
#include "lqstack/leader.hpp"
#include "lqstack/simulator.hpp"

namespace lqstack {

/// Solution of the one-step-memory closed-loop game: the leader's announced
/// schedule (Kbar_k, Gbar_k), both value recursions, both players' effective
/// current-state-feedback forms along the closed loop, and the predicted
/// optimal costs.
struct ClosedLoopSolution {
  GainSchedule leader_schedule;            ///< Kbar_k, Gbar_k (Gbar_0 = 0)
  FollowerRecursion follower_rec;          ///< best response to the schedule
  LeaderRecursion leader_rec;              ///< leader recursion over it
  std::vector<Matrix> effective_leader;    ///< N+1 gains -GammaL^{-1} MLcal
  std::vector<Matrix> effective_follower;  ///< N+1 gains -GammaF^{-1} MFcal
  double predicted_Jf = 0.0;               ///< x0' P_0 x0
  double predicted_Jl = 0.0;               ///< x0' Pbar_0 x0
  double max_S_norm = 0.0;                 ///< max_k ||S_k||_max (self-check)
};

/// Runs the interleaved backward pass that determines the leader's
/// one-step-memory schedule together with both Riccati sequences:
/// for k = N down to 0, with P_{N+1}, Pbar_{N+1} from the problem and
/// S_{N+1} = 0, Gbar_{N+1} = 0:
///   (1) follower stage quantities at P_{k+1};
///   (2) Kbar_k = -Delta_k^{-1} M2cal_k (Delta near-singularity aborts);
///   (3) leader stage quantities at Pbar_{k+1};
///   (4) Gbar_{k+1} = (effective_leader_{k+1} - Kbar_{k+1})
///                    (A + B1 effective_follower_k + B2 effective_leader_k)
///       (skipped at k = N);
///   (5) P_k including the Gbar_{k+1}' Delta_{k+1} Gbar_{k+1} term; S_k is
///       computed from its defining equation and recorded (it vanishes
///       identically for this schedule);
///   (6) Pbar_k.
/// At k = 0 there is no x_{-1} and Gbar_0 = 0, so the stage-0 announced gain
/// is the effective leader gain itself (the memory split degenerates).
///
/// Throws DeltaSingular, GammaNotPD, GammaLNotPD, or NonFiniteValue, each
/// carrying the stage index.
ClosedLoopSolution solve_closed_loop(const GameProblem& p);

/// Residual report of the identity Kbar_k x_k + Gbar_k x_{k-1} =
/// effective_leader[k] x_k along a simulated trajectory.
struct IdentityReport {
  std::vector<double> residuals;  ///< N+1 entries; 2-norm per stage
  std::vector<bool> skipped;      ///< true where the check does not apply
  double worst_scaled = 0.0;      ///< max residual / (1 + ||x_k||)
  bool ok = true;                 ///< worst_scaled <= 1e-9
};

/// Checks the effective-gain realization identity for k >= 1 (stage 0 has no
/// x_{-1} and is marked skipped). Contract: residual <= 1e-9 (1 + ||x_k||).
IdentityReport effective_trajectory_identity_check(const ClosedLoopSolution& sol,
                                                   const Trajectory& traj);

}  // namespace lqstack
