#pragma once

#include <limits>
#include <vector>

#include "lqstack/model.hpp"

namespace lqstack {

/// Finite-horizon LQR solution: value matrices P_0..P_{N+1} and gains
/// K_0..K_N for u_k = K_k x_k. predicted_J is x0'P_0 x0 when the caller
/// supplies an initial state, otherwise NaN.
struct LqrSolution {
  std::vector<Matrix> P;
  std::vector<Matrix> K;
  double predicted_J = std::numeric_limits<double>::quiet_NaN();
};

/// Memoryless (feedback) Stackelberg solution used as the comparison
/// baseline: per-stage leader announcement, follower one-stage best response,
/// value propagation for both players.
struct FeedbackStackelbergSolution {
  std::vector<Matrix> Pf;  ///< N+2 follower value matrices
  std::vector<Matrix> Pl;  ///< N+2 leader value matrices
  std::vector<Matrix> Kf;  ///< N+1 follower gains
  std::vector<Matrix> Kl;  ///< N+1 leader gains
  double predicted_Jf = 0.0;
  double predicted_Jl = 0.0;
};

/// Textbook backward Riccati recursion
///   P_k = Q + A'P_{k+1}A - A'P_{k+1}B (R + B'P_{k+1}B)^{-1} B'P_{k+1}A,
///   K_k = -(R + B'P_{k+1}B)^{-1} B'P_{k+1}A.
/// Throws GammaNotPD.
LqrSolution standard_lqr(const Matrix& A, const Matrix& B, const Matrix& Q,
                         const Matrix& R, const Matrix& P_terminal, int N);

/// The same LQR solved along the constrained-maximum-principle route: the
/// stationarity condition 0 = R u_k + B' lambda_k with the structural
/// multiplier resolved to zero stage by stage and the co-state ansatz
/// lambda_{k-1} = P_k x_k. An independent code path from standard_lqr (no
/// Gamma completion); contractually identical output. Throws GammaNotPD.
LqrSolution constrained_lqr(const Matrix& A, const Matrix& B, const Matrix& Q,
                            const Matrix& R, const Matrix& P_terminal, int N);

/// Stagewise feedback Stackelberg backward pass (see README for the stage
/// equations). Throws GammaNotPD or LeaderStagePDFailure with the stage
/// index.
FeedbackStackelbergSolution solve_feedback_stackelberg(const GameProblem& p);

}  // namespace lqstack
