#pragma once

#include <vector>

#include "lqstack/model.hpp"

namespace lqstack {

/// Stage quantities of the follower's backward recursion, all evaluated at
/// P_{k+1}, S_{k+1}:
///   M1 = B1' P_{k+1} A            M2 = B2' P_{k+1} A
///   MB = B1' P_{k+1} B2           GammaF = R1 + B1' P_{k+1} B1
///   Delta = R2 + B2' P_{k+1} B2 - MB' GammaF^{-1} MB
///   M2cal = M2 - MB' GammaF^{-1} M1 + (B2 - B1 GammaF^{-1} MB)' S_{k+1}
struct FollowerStageData {
  Matrix M1;      ///< m1 x n
  Matrix M2;      ///< m2 x n
  Matrix MB;      ///< m1 x m2
  Matrix GammaF;  ///< m1 x m1, symmetric PD
  Matrix Delta;   ///< m2 x m2, symmetric
  Matrix M2cal;   ///< m2 x n
};

/// Output of the follower's backward pass for a fixed leader schedule:
/// value matrices P_k (quadratic in x_k) and S_k (cross term with x_{k-1})
/// such that the follower's optimal cost-to-go satisfies
/// lambda_{k-1} = P_k x_k + S_k x_{k-1}, plus the per-stage data and the
/// canonical gain split of the best-response controller.
struct FollowerRecursion {
  std::vector<Matrix> P;                  ///< N+2 symmetric n x n, P_k
  std::vector<Matrix> S;                  ///< N+2 n x n, S_{N+1} = 0
  std::vector<FollowerStageData> stages;  ///< N+1 stage records
  GainSchedule follower_gains;            ///< canonical best-response split
};

/// Evaluates the stage quantities at (P_next, S_next).
/// Throws GammaNotPD when R1 + B1'P_next B1 fails a PD factorization; the
/// stage index is reported as `stage_hint` (pass the recursion's k when
/// known, -1 otherwise).
FollowerStageData follower_stage(const Matrix& P_next, const Matrix& S_next,
                                 const GameProblem& p, int stage_hint = -1);

/// Backward pass k = N..0 of the follower's Riccati pair (P_k, S_k) against
/// the fixed leader schedule, including the Gbar_{k+1}' Delta_{k+1} Gbar_{k+1}
/// contribution to P_k (with Gbar_{N+1} = 0). The canonical controller split
/// is
///   current[k] = -GammaF^{-1} (M1 + MB Kbar_k + B1' S_{k+1})
///   memory[k]  = -GammaF^{-1} MB Gbar_k .
/// Throws GammaNotPD with the failing stage index.
FollowerRecursion follower_backward(const GameProblem& p,
                                    const GainSchedule& leader);

/// The follower's optimal cost x0' P_0 x0.
double follower_cost(const FollowerRecursion& rec, const Vector& x0);

}  // namespace lqstack
