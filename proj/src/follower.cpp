#include "lqstack/follower.hpp"

#include <Eigen/Cholesky>

namespace lqstack {

namespace {

Eigen::LLT<Matrix> pd_factor_or_throw(const Matrix& G, int stage_hint) {
  Eigen::LLT<Matrix> llt(G);
  if (llt.info() != Eigen::Success)
    throw GammaNotPD("GammaF = R1 + B1'P B1 failed a positive-definite factorization",
                     stage_hint);
  return llt;
}

}  // namespace

FollowerStageData follower_stage(const Matrix& P_next, const Matrix& S_next,
                                 const GameProblem& p, int stage_hint) {
  const int n = p.n();
  if (P_next.rows() != n || P_next.cols() != n || S_next.rows() != n ||
      S_next.cols() != n)
    throw DimensionError("P_next and S_next must be n x n");

  FollowerStageData st;
  st.M1 = p.B1.transpose() * P_next * p.A;
  st.M2 = p.B2.transpose() * P_next * p.A;
  st.MB = p.B1.transpose() * P_next * p.B2;
  st.GammaF = symmetrize(p.R1 + p.B1.transpose() * P_next * p.B1);
  const auto llt = pd_factor_or_throw(st.GammaF, stage_hint);
  st.Delta = symmetrize(p.R2 + p.B2.transpose() * P_next * p.B2 -
                        st.MB.transpose() * llt.solve(st.MB));
  const Matrix B_red = p.B2 - p.B1 * llt.solve(st.MB);
  st.M2cal = st.M2 - st.MB.transpose() * llt.solve(st.M1) +
             B_red.transpose() * S_next;
  return st;
}

FollowerRecursion follower_backward(const GameProblem& p,
                                    const GainSchedule& leader) {
  const int n = p.n(), N = p.N;
  if (leader.stages() != N + 1)
    throw DimensionError("leader schedule must have N+1 stages");
  if (leader.memory[0].cwiseAbs().maxCoeff() != 0.0)
    throw Error("leader schedule memory[0] must be the zero matrix");

  FollowerRecursion rec;
  rec.P.assign(N + 2, Matrix());
  rec.S.assign(N + 2, Matrix());
  rec.stages.assign(N + 1, FollowerStageData());
  rec.follower_gains.current.assign(N + 1, Matrix());
  rec.follower_gains.memory.assign(N + 1, Matrix());
  rec.P[N + 1] = p.P_terminal;
  rec.S[N + 1] = Matrix::Zero(n, n);

  Matrix Delta_next;  // Delta_{k+1}, carried from the previous iteration
  for (int k = N; k >= 0; --k) {
    const Matrix& P1 = rec.P[k + 1];
    const Matrix& S1 = rec.S[k + 1];
    const Matrix& Kb = leader.current[k];
    const Matrix& Gb = leader.memory[k];
    FollowerStageData st = follower_stage(P1, S1, p, k);
    Eigen::LLT<Matrix> llt(st.GammaF);  // PD established by follower_stage

    const Matrix H = st.M1 + st.MB * Kb + p.B1.transpose() * S1;
    rec.follower_gains.current[k] = -llt.solve(H);
    rec.follower_gains.memory[k] = -llt.solve(st.MB * Gb);

    const Matrix At = p.A + p.B2 * Kb;
    // Memory term of the value recursion: Gbar_{k+1}' Delta_{k+1} Gbar_{k+1},
    // zero at k = N since Gbar_{N+1} = 0.
    Matrix T_next = Matrix::Zero(n, n);
    if (k < N) {
      const Matrix& Gb1 = leader.memory[k + 1];
      T_next = Gb1.transpose() * Delta_next * Gb1;
    }
    rec.P[k] = symmetrize(p.Q + Kb.transpose() * p.R2 * Kb +
                          At.transpose() * P1 * At + At.transpose() * S1 +
                          S1.transpose() * At + T_next -
                          H.transpose() * llt.solve(H));
    rec.S[k] = (st.Delta * Kb + st.M2cal).transpose() * Gb;
    if (!rec.P[k].allFinite() || !rec.S[k].allFinite())
      throw NonFiniteValue("follower recursion produced a non-finite value", k);

    rec.stages[k] = std::move(st);
    Delta_next = rec.stages[k].Delta;
  }
  return rec;
}

double follower_cost(const FollowerRecursion& rec, const Vector& x0) {
  return x0.dot(rec.P[0] * x0);
}

}  // namespace lqstack
