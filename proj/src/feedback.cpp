#include "lqstack/feedback.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace lqstack {

LqrSolution standard_lqr(const Matrix& A, const Matrix& B, const Matrix& Q,
                         const Matrix& R, const Matrix& P_terminal, int N) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != m || R.cols() != m || P_terminal.rows() != n ||
      P_terminal.cols() != n || N < 0)
    throw DimensionError("inconsistent LQR problem dimensions");

  LqrSolution sol;
  sol.P.assign(N + 2, Matrix());
  sol.K.assign(N + 1, Matrix());
  sol.P[N + 1] = P_terminal;
  for (int k = N; k >= 0; --k) {
    const Matrix& P1 = sol.P[k + 1];
    const Matrix Gamma = symmetrize(R + B.transpose() * P1 * B);
    Eigen::LLT<Matrix> llt(Gamma);
    if (llt.info() != Eigen::Success)
      throw GammaNotPD("R + B'P B is not positive definite", k);
    const Matrix BPA = B.transpose() * P1 * A;
    sol.K[k] = -llt.solve(BPA);
    sol.P[k] = symmetrize(Q + A.transpose() * P1 * A +
                          BPA.transpose() * sol.K[k]);
    if (!sol.P[k].allFinite())
      throw NonFiniteValue("LQR recursion produced a non-finite value", k);
  }
  return sol;
}

LqrSolution constrained_lqr(const Matrix& A, const Matrix& B, const Matrix& Q,
                            const Matrix& R, const Matrix& P_terminal, int N) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != m || R.cols() != m || P_terminal.rows() != n ||
      P_terminal.cols() != n || N < 0)
    throw DimensionError("inconsistent LQR problem dimensions");
  Eigen::LLT<Matrix> lltR(R);
  if (lltR.info() != Eigen::Success)
    throw GammaNotPD("R must be positive definite", -1);

  LqrSolution sol;
  sol.P.assign(N + 2, Matrix());
  sol.K.assign(N + 1, Matrix());
  sol.P[N + 1] = P_terminal;
  for (int k = N; k >= 0; --k) {
    const Matrix& P1 = sol.P[k + 1];
    // Co-state route: u_k = -R^{-1} B' P_{k+1} x_{k+1} substituted into the
    // dynamics, then the implicit gain equation is solved directly instead of
    // completing the square.
    const Matrix RiBP = lltR.solve(B.transpose() * P1);
    const Matrix M = Matrix::Identity(m, m) + RiBP * B;
    sol.K[k] = Eigen::PartialPivLU<Matrix>(M).solve(-RiBP * A);
    sol.P[k] = symmetrize(Q + A.transpose() * P1 * (A + B * sol.K[k]));
    if (!sol.P[k].allFinite())
      throw NonFiniteValue("LQR recursion produced a non-finite value", k);
  }
  return sol;
}

FeedbackStackelbergSolution solve_feedback_stackelberg(const GameProblem& p) {
  {
    const ValidationReport rep = validate(p);
    if (!rep.ok) {
      for (const Finding& f : rep.findings)
        if (f.severity == "error") {
          if (f.code == "dimension_mismatch") throw DimensionError(f.message);
          throw DefinitenessError(f.code + ": " + f.message);
        }
      throw Error("problem validation failed");
    }
  }
  const int N = p.N;

  FeedbackStackelbergSolution sol;
  sol.Pf.assign(N + 2, Matrix());
  sol.Pl.assign(N + 2, Matrix());
  sol.Kf.assign(N + 1, Matrix());
  sol.Kl.assign(N + 1, Matrix());
  sol.Pf[N + 1] = p.P_terminal;
  sol.Pl[N + 1] = p.Pbar_terminal;

  for (int k = N; k >= 0; --k) {
    const Matrix& Pf1 = sol.Pf[k + 1];
    const Matrix& Pl1 = sol.Pl[k + 1];
    const Matrix M1 = p.B1.transpose() * Pf1 * p.A;
    const Matrix MB = p.B1.transpose() * Pf1 * p.B2;
    const Matrix GammaF = symmetrize(p.R1 + p.B1.transpose() * Pf1 * p.B1);
    Eigen::LLT<Matrix> lltF(GammaF);
    if (lltF.info() != Eigen::Success)
      throw GammaNotPD("GammaF = R1 + B1'Pf B1 is not positive definite", k);

    const Matrix Gi_M1 = lltF.solve(M1);
    const Matrix Gi_MB = lltF.solve(MB);
    const Matrix A_r = p.A - p.B1 * Gi_M1;
    const Matrix B_r = p.B2 - p.B1 * Gi_MB;
    const Matrix lhs =
        symmetrize(p.R2bar + MB.transpose() * lltF.solve(p.R1bar * Gi_MB) +
                   B_r.transpose() * Pl1 * B_r);
    Eigen::LLT<Matrix> lltL(lhs);
    if (lltL.info() != Eigen::Success)
      throw LeaderStagePDFailure(
          "leader stage normal matrix is not positive definite", k);
    const Matrix rhs = MB.transpose() * lltF.solve(p.R1bar * Gi_M1) +
                       B_r.transpose() * Pl1 * A_r;
    sol.Kl[k] = -lltL.solve(rhs);
    sol.Kf[k] = -lltF.solve(M1 + MB * sol.Kl[k]);

    const Matrix F = p.A + p.B1 * sol.Kf[k] + p.B2 * sol.Kl[k];
    sol.Pf[k] = symmetrize(p.Q + sol.Kf[k].transpose() * p.R1 * sol.Kf[k] +
                           sol.Kl[k].transpose() * p.R2 * sol.Kl[k] +
                           F.transpose() * Pf1 * F);
    sol.Pl[k] = symmetrize(p.Qbar + sol.Kf[k].transpose() * p.R1bar * sol.Kf[k] +
                           sol.Kl[k].transpose() * p.R2bar * sol.Kl[k] +
                           F.transpose() * Pl1 * F);
    if (!sol.Pf[k].allFinite() || !sol.Pl[k].allFinite())
      throw NonFiniteValue("feedback recursion produced a non-finite value", k);
  }
  sol.predicted_Jf = p.x0.dot(sol.Pf[0] * p.x0);
  sol.predicted_Jl = p.x0.dot(sol.Pl[0] * p.x0);
  return sol;
}

}  // namespace lqstack
