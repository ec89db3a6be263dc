#include "lqstack/closed_loop.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>

namespace lqstack {

namespace {

constexpr double kDeltaConditionLimit = 1e12;

void require_valid(const GameProblem& p) {
  const ValidationReport rep = validate(p);
  if (rep.ok) return;
  for (const Finding& f : rep.findings) {
    if (f.severity != "error") continue;
    if (f.code == "dimension_mismatch") throw DimensionError(f.message);
    throw DefinitenessError(f.code + ": " + f.message);
  }
  throw Error("problem validation failed");
}

// Solve Delta y = rhs after rejecting ill-conditioned Delta. Delta is
// symmetric but only guaranteed nonsingular, so factor with LDLT and gate on
// the eigenvalue condition number.
Matrix solve_delta(const Matrix& Delta, const Matrix& rhs, int stage) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Delta,
                                            Eigen::EigenvaluesOnly);
  const double amax = eig.eigenvalues().cwiseAbs().maxCoeff();
  const double amin = eig.eigenvalues().cwiseAbs().minCoeff();
  if (!(amin > 0.0) || !std::isfinite(amax) ||
      amax / amin > kDeltaConditionLimit)
    throw DeltaSingular("Delta is singular or ill-conditioned", stage);
  Eigen::LDLT<Matrix> ldlt(Delta);
  if (ldlt.info() != Eigen::Success)
    throw DeltaSingular("Delta failed an LDLT factorization", stage);
  return ldlt.solve(rhs);
}

}  // namespace

ClosedLoopSolution solve_closed_loop(const GameProblem& p) {
  require_valid(p);
  const int n = p.n(), m2 = p.m2(), N = p.N;

  std::vector<Matrix> P(N + 2), Pbar(N + 2);
  std::vector<Matrix> Kbar(N + 1), Gbar(N + 1, Matrix::Zero(m2, n));
  std::vector<Matrix> effL(N + 1), effF(N + 1);
  P[N + 1] = p.P_terminal;
  Pbar[N + 1] = p.Pbar_terminal;
  const Matrix S_zero = Matrix::Zero(n, n);

  Matrix Delta_next;  // Delta_{k+1}, cached across iterations
  for (int k = N; k >= 0; --k) {
    const FollowerStageData st = follower_stage(P[k + 1], S_zero, p, k);
    Kbar[k] = -solve_delta(st.Delta, st.M2cal, k);

    const LeaderStageData ls = leader_stage(Pbar[k + 1], st, S_zero, p, k);
    Eigen::LLT<Matrix> lltF(st.GammaF);
    Eigen::LLT<Matrix> lltL(ls.GammaL);
    effL[k] = -lltL.solve(ls.MLcal);
    effF[k] = -lltF.solve(ls.MFcal);
    // Stage 0 has no x_{-1} and Gbar_0 = 0, so the announced stage-0 gain
    // must realize the effective leader feedback directly.
    if (k == 0) Kbar[0] = effL[0];

    // The memory gain one stage later reconciles the announced pair with the
    // effective closed loop: Gbar_{k+1} = (effL_{k+1} - Kbar_{k+1}) T_k where
    // T_k is the effective closed-loop map at stage k.
    if (k < N) {
      const Matrix T_red = p.A + p.B1 * effF[k] + p.B2 * effL[k];
      Gbar[k + 1] = (effL[k + 1] - Kbar[k + 1]) * T_red;
    }

    Matrix T_next = Matrix::Zero(n, n);
    if (k < N)
      T_next = Gbar[k + 1].transpose() * Delta_next * Gbar[k + 1];
    const Matrix H = st.M1 + st.MB * Kbar[k];
    const Matrix At = p.A + p.B2 * Kbar[k];
    P[k] = symmetrize(p.Q + Kbar[k].transpose() * p.R2 * Kbar[k] +
                      At.transpose() * P[k + 1] * At + T_next -
                      H.transpose() * lltF.solve(H));

    const Matrix Gi_msf = lltF.solve(st.M1);
    const Matrix W1 = lltF.solve(p.R1bar * Gi_msf);
    Pbar[k] = symmetrize(p.Qbar + st.M1.transpose() * W1 -
                         ls.MLcal.transpose() * lltL.solve(ls.MLcal) +
                         ls.A_red.transpose() * Pbar[k + 1] * ls.A_red);
    if (!P[k].allFinite() || !Pbar[k].allFinite() || !Kbar[k].allFinite() ||
        !Gbar[std::min(k + 1, N)].allFinite())
      throw NonFiniteValue("closed-loop construction produced a non-finite value",
                           k);
    Delta_next = st.Delta;
  }

  ClosedLoopSolution sol;
  sol.leader_schedule.current = std::move(Kbar);
  sol.leader_schedule.memory = std::move(Gbar);

  // Re-run the two value recursions against the announced schedule; they are
  // the single source of truth for the returned value matrices, gains, and
  // predicted costs. The memory coupling term S_k is computed there from its
  // defining equation and is zero up to roundoff for this schedule.
  sol.follower_rec = follower_backward(p, sol.leader_schedule);
  sol.leader_rec = leader_backward(p, sol.follower_rec);

  sol.effective_leader.assign(N + 1, Matrix());
  sol.effective_follower.assign(N + 1, Matrix());
  sol.max_S_norm = 0.0;
  for (int k = 0; k <= N; ++k) {
    sol.effective_leader[k] = sol.leader_rec.leader_state_feedback[k];
    const FollowerStageData& st = sol.follower_rec.stages[k];
    Eigen::LLT<Matrix> lltF(st.GammaF);
    sol.effective_follower[k] = -lltF.solve(sol.leader_rec.stages[k].MFcal);
    sol.max_S_norm =
        std::max(sol.max_S_norm, sol.follower_rec.S[k].cwiseAbs().maxCoeff());
  }
  sol.predicted_Jf = follower_cost(sol.follower_rec, p.x0);
  sol.predicted_Jl = leader_cost(sol.leader_rec, p.x0);
  return sol;
}

IdentityReport effective_trajectory_identity_check(
    const ClosedLoopSolution& sol, const Trajectory& traj) {
  const std::vector<Vector>& x = traj.x;
  const int N = static_cast<int>(sol.leader_schedule.current.size()) - 1;
  if (static_cast<int>(x.size()) < N + 1)
    throw DimensionError("trajectory must contain states x_0..x_N");

  IdentityReport rep;
  rep.residuals.assign(N + 1, 0.0);
  rep.skipped.assign(N + 1, false);
  rep.skipped[0] = true;  // stage 0 has no x_{-1}; identity starts at k = 1
  rep.worst_scaled = 0.0;
  for (int k = 1; k <= N; ++k) {
    const Vector announced = sol.leader_schedule.current[k] * x[k] +
                             sol.leader_schedule.memory[k] * x[k - 1];
    const Vector effective = sol.effective_leader[k] * x[k];
    const double r = (announced - effective).norm();
    rep.residuals[k] = r;
    rep.worst_scaled = std::max(rep.worst_scaled, r / (1.0 + x[k].norm()));
  }
  rep.ok = rep.worst_scaled <= 1e-9;
  return rep;
}

}  // namespace lqstack
