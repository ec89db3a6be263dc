#pragma once

#include <vector>

#include "lqstack/follower.hpp"
#include "lqstack/leader.hpp"
#include "lqstack/model.hpp"

namespace lqstack {

/// A simulated run of the game: states, controls, per-stage and total costs,
/// and (after attach_costates) reconstructed co-states with the stationarity
/// residuals of both players' first-order conditions.
struct Trajectory {
  std::vector<Vector> x;          ///< N+2 states x_0..x_{N+1}
  std::vector<Vector> uf;         ///< N+1 follower controls
  std::vector<Vector> ul;         ///< N+1 leader controls
  std::vector<double> stage_Jf;   ///< N+1 follower stage costs
  std::vector<double> stage_Jl;   ///< N+1 leader stage costs
  double total_Jf = 0.0;          ///< sum of stage costs plus terminal term
  double total_Jl = 0.0;
  std::vector<Vector> lambda_f;   ///< N+1 co-states lambda^f_k (attached)
  std::vector<Vector> lambda_l;   ///< N+1 co-states lambda^l_k (attached)
  std::vector<double> residual_f; ///< per-stage follower stationarity norm
  std::vector<double> residual_l; ///< per-stage leader stationarity norm
};

/// Simulates x_{k+1} = A x_k + B1 uf_k + B2 ul_k from x_0 = p.x0 under the
/// two memory strategies (x_{-1} := 0), accumulating both costs with
/// compensated (Neumaier) summation. Throws NonFiniteValue when any state
/// magnitude exceeds 1e150 or a non-finite value appears.
Trajectory rollout(const GameProblem& p, const GainSchedule& follower,
                   const GainSchedule& leader);

/// Reconstructs co-states along the trajectory,
///   lambda^f_k = P_{k+1} x_{k+1} + S_{k+1} x_k,   lambda^l_k = Pbar_{k+1} x_{k+1},
/// and evaluates the stationarity residuals of both players' first-order
/// conditions with these co-states:
///   follower:  R1 uf_k + B1' lambda^f_k
///   leader:    MB' GammaF^{-1} R1bar GammaF^{-1} msf x_k
///              + (R2bar + MB' GammaF^{-1} R1bar GammaF^{-1} MB) ul_k
///              + B_red' lambda^l_k
/// Residual norms are 2-norms. Report-only: never throws.
Trajectory attach_costates(Trajectory traj, const FollowerRecursion& frec,
                           const LeaderRecursion& lrec, const GameProblem& p);

}  // namespace lqstack
