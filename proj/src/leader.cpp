#include "lqstack/leader.hpp"

#include <Eigen/Cholesky>

namespace lqstack {

namespace {

struct ReducedData {
  Matrix msf;     // M1 + B1' S_{k+1}
  Matrix W1;      // GammaF^{-1} R1bar GammaF^{-1} msf
  Matrix W2;      // GammaF^{-1} R1bar GammaF^{-1} MB
  Matrix A_red;   // A - B1 GammaF^{-1} msf
  Matrix B_red;   // B2 - B1 GammaF^{-1} MB
};

ReducedData reduce(const FollowerStageData& stage, const Matrix& S_next,
                   const GameProblem& p) {
  Eigen::LLT<Matrix> llt(stage.GammaF);
  if (llt.info() != Eigen::Success)
    throw GammaNotPD("GammaF in leader stage reduction is not positive definite",
                     -1);
  ReducedData rd;
  rd.msf = stage.M1 + p.B1.transpose() * S_next;
  const Matrix Gi_msf = llt.solve(rd.msf);
  const Matrix Gi_MB = llt.solve(stage.MB);
  rd.W1 = llt.solve(p.R1bar * Gi_msf);
  rd.W2 = llt.solve(p.R1bar * Gi_MB);
  rd.A_red = p.A - p.B1 * Gi_msf;
  rd.B_red = p.B2 - p.B1 * Gi_MB;
  return rd;
}

}  // namespace

std::pair<Matrix, Matrix> reduced_system(const FollowerStageData& stage,
                                         const Matrix& S_next,
                                         const GameProblem& p) {
  const ReducedData rd = reduce(stage, S_next, p);
  return {rd.A_red, rd.B_red};
}

LeaderStageData leader_stage(const Matrix& Pbar_next,
                             const FollowerStageData& stage,
                             const Matrix& S_next, const GameProblem& p,
                             int stage_hint) {
  const int n = p.n();
  if (Pbar_next.rows() != n || Pbar_next.cols() != n)
    throw DimensionError("Pbar_next must be n x n");

  const ReducedData rd = reduce(stage, S_next, p);
  LeaderStageData ls;
  ls.A_red = rd.A_red;
  ls.B_red = rd.B_red;
  ls.GammaL = symmetrize(p.R2bar + stage.MB.transpose() * rd.W2 +
                         rd.B_red.transpose() * Pbar_next * rd.B_red);
  Eigen::LLT<Matrix> llt(ls.GammaL);
  if (llt.info() != Eigen::Success)
    throw GammaLNotPD("GammaL in the leader stage is not positive definite",
                      stage_hint);
  ls.MLcal = stage.MB.transpose() * rd.W1 +
             rd.B_red.transpose() * Pbar_next * rd.A_red;
  ls.MFcal = rd.msf - stage.MB * llt.solve(ls.MLcal);
  return ls;
}

LeaderRecursion leader_backward(const GameProblem& p,
                                const FollowerRecursion& frec) {
  const int n = p.n();
  const int N = static_cast<int>(frec.stages.size()) - 1;
  if (N < 0 || static_cast<int>(frec.P.size()) != N + 2)
    throw DimensionError("follower recursion is empty or inconsistent");

  LeaderRecursion rec;
  rec.Pbar.assign(N + 2, Matrix());
  rec.stages.assign(N + 1, LeaderStageData());
  rec.leader_state_feedback.assign(N + 1, Matrix());
  rec.Pbar[N + 1] = p.Pbar_terminal;

  for (int k = N; k >= 0; --k) {
    const FollowerStageData& st = frec.stages[k];
    const Matrix& S1 = frec.S[k + 1];
    LeaderStageData ls = leader_stage(rec.Pbar[k + 1], st, S1, p, k);
    const ReducedData rd = reduce(st, S1, p);
    Eigen::LLT<Matrix> llt(ls.GammaL);
    rec.leader_state_feedback[k] = -llt.solve(ls.MLcal);
    rec.Pbar[k] = symmetrize(
        p.Qbar + rd.msf.transpose() * rd.W1 -
        ls.MLcal.transpose() * llt.solve(ls.MLcal) +
        rd.A_red.transpose() * rec.Pbar[k + 1] * rd.A_red);
    if (!rec.Pbar[k].allFinite())
      throw NonFiniteValue("leader recursion produced a non-finite value", k);
    rec.stages[k] = std::move(ls);
  }
  return rec;
}

double leader_cost(const LeaderRecursion& rec, const Vector& x0) {
  return x0.dot(rec.Pbar[0] * x0);
}

}  // namespace lqstack
