#pragma once

#include <utility>
#include <vector>

#include "lqstack/follower.hpp"
#include "lqstack/model.hpp"

namespace lqstack {

/// Stage quantities of the leader's backward recursion on the reduced system
/// obtained by substituting the follower's best response:
///   A_red = A - B1 GammaF^{-1} (M1 + B1' S_{k+1})
///   B_red = B2 - B1 GammaF^{-1} MB
///   GammaL = R2bar + MB' GammaF^{-1} R1bar GammaF^{-1} MB + B_red' Pbar_{k+1} B_red
///   MLcal  = MB' GammaF^{-1} R1bar GammaF^{-1} (M1 + B1' S_{k+1})
///            + B_red' Pbar_{k+1} A_red
///   MFcal  = (M1 + B1' S_{k+1}) - MB GammaL^{-1} MLcal
struct LeaderStageData {
  Matrix GammaL;  ///< m2 x m2, symmetric PD
  Matrix MLcal;   ///< m2 x n
  Matrix MFcal;   ///< m1 x n
  Matrix A_red;   ///< n x n
  Matrix B_red;   ///< n x m2
};

/// Output of the leader's backward pass over frozen follower quantities.
struct LeaderRecursion {
  std::vector<Matrix> Pbar;                    ///< N+2 symmetric n x n
  std::vector<LeaderStageData> stages;         ///< N+1 stage records
  std::vector<Matrix> leader_state_feedback;   ///< N+1 gains -GammaL^{-1} MLcal
};

/// The reduced closed-loop pair (A_red, B_red) at one stage.
std::pair<Matrix, Matrix> reduced_system(const FollowerStageData& stage,
                                         const Matrix& S_next,
                                         const GameProblem& p);

/// Evaluates the leader stage quantities at Pbar_{k+1} = Pbar_next with the
/// follower stage data and S_{k+1} = S_next. Throws GammaLNotPD.
LeaderStageData leader_stage(const Matrix& Pbar_next,
                             const FollowerStageData& stage,
                             const Matrix& S_next, const GameProblem& p,
                             int stage_hint = -1);

/// Backward pass k = N..0 of the leader's Riccati recursion
///   Pbar_k = Qbar + msf' GammaF^{-1} R1bar GammaF^{-1} msf
///            - MLcal' GammaL^{-1} MLcal + A_red' Pbar_{k+1} A_red
/// with msf = M1 + B1' S_{k+1}, over the follower quantities frozen in `frec`.
/// Throws GammaLNotPD with the failing stage index.
LeaderRecursion leader_backward(const GameProblem& p,
                                const FollowerRecursion& frec);

/// The leader's optimal cost x0' Pbar_0 x0.
double leader_cost(const LeaderRecursion& rec, const Vector& x0);

}  // namespace lqstack
