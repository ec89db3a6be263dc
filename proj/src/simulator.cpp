#include "lqstack/simulator.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace lqstack {

namespace {

constexpr double kDivergenceLimit = 1e150;

/// Neumaier-compensated accumulator: keeps a running correction term so that
/// long sums of stage costs do not lose low-order bits.
struct CompensatedSum {
  double sum = 0.0;
  double compensation = 0.0;
  void add(double value) {
    const double t = sum + value;
    if (std::abs(sum) >= std::abs(value))
      compensation += (sum - t) + value;
    else
      compensation += (value - t) + sum;
    sum = t;
  }
  double total() const { return sum + compensation; }
};

void guard_finite(const Vector& x, int stage) {
  if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kDivergenceLimit)
    throw NonFiniteValue("simulated state diverged", stage);
}

}  // namespace

Trajectory rollout(const GameProblem& p, const GainSchedule& follower,
                   const GainSchedule& leader) {
  const int n = p.n(), N = p.N;
  if (follower.stages() != N + 1 || leader.stages() != N + 1)
    throw DimensionError("gain schedules must have N+1 stages");
  if (follower.memory[0].cwiseAbs().maxCoeff() != 0.0 ||
      leader.memory[0].cwiseAbs().maxCoeff() != 0.0)
    throw Error("memory gains at stage 0 must be zero");

  Trajectory traj;
  traj.x.assign(N + 2, Vector());
  traj.uf.assign(N + 1, Vector());
  traj.ul.assign(N + 1, Vector());
  traj.stage_Jf.assign(N + 1, 0.0);
  traj.stage_Jl.assign(N + 1, 0.0);
  traj.x[0] = p.x0;

  CompensatedSum Jf, Jl;
  const Vector zero_prev = Vector::Zero(n);
  for (int k = 0; k <= N; ++k) {
    guard_finite(traj.x[k], k);
    const Vector& xprev = (k == 0) ? zero_prev : traj.x[k - 1];
    traj.uf[k] = evaluate_strategy(follower, k, traj.x[k], xprev);
    traj.ul[k] = evaluate_strategy(leader, k, traj.x[k], xprev);

    const double jf = traj.x[k].dot(p.Q * traj.x[k]) +
                      traj.uf[k].dot(p.R1 * traj.uf[k]) +
                      traj.ul[k].dot(p.R2 * traj.ul[k]);
    const double jl = traj.x[k].dot(p.Qbar * traj.x[k]) +
                      traj.uf[k].dot(p.R1bar * traj.uf[k]) +
                      traj.ul[k].dot(p.R2bar * traj.ul[k]);
    traj.stage_Jf[k] = jf;
    traj.stage_Jl[k] = jl;
    Jf.add(jf);
    Jl.add(jl);

    traj.x[k + 1] = p.A * traj.x[k] + p.B1 * traj.uf[k] + p.B2 * traj.ul[k];
  }
  guard_finite(traj.x[N + 1], N + 1);
  Jf.add(traj.x[N + 1].dot(p.P_terminal * traj.x[N + 1]));
  Jl.add(traj.x[N + 1].dot(p.Pbar_terminal * traj.x[N + 1]));
  traj.total_Jf = Jf.total();
  traj.total_Jl = Jl.total();
  return traj;
}

Trajectory attach_costates(Trajectory traj, const FollowerRecursion& frec,
                           const LeaderRecursion& lrec, const GameProblem& p) {
  const int N = static_cast<int>(traj.uf.size()) - 1;
  if (static_cast<int>(frec.stages.size()) != N + 1 ||
      static_cast<int>(lrec.stages.size()) != N + 1)
    throw DimensionError("recursions and trajectory disagree on the horizon");

  traj.lambda_f.assign(N + 1, Vector());
  traj.lambda_l.assign(N + 1, Vector());
  traj.residual_f.assign(N + 1, 0.0);
  traj.residual_l.assign(N + 1, 0.0);

  for (int k = 0; k <= N; ++k) {
    traj.lambda_f[k] = frec.P[k + 1] * traj.x[k + 1] + frec.S[k + 1] * traj.x[k];
    traj.lambda_l[k] = lrec.Pbar[k + 1] * traj.x[k + 1];

    traj.residual_f[k] =
        (p.R1 * traj.uf[k] + p.B1.transpose() * traj.lambda_f[k]).norm();

    const FollowerStageData& st = frec.stages[k];
    Eigen::LLT<Matrix> lltF(st.GammaF);
    const Matrix msf = st.M1 + p.B1.transpose() * frec.S[k + 1];
    const Matrix W1 = lltF.solve(p.R1bar * lltF.solve(msf));
    const Matrix W2 = lltF.solve(p.R1bar * lltF.solve(st.MB));
    const Matrix B_red = p.B2 - p.B1 * lltF.solve(st.MB);
    const Vector res = st.MB.transpose() * W1 * traj.x[k] +
                       (p.R2bar + st.MB.transpose() * W2) * traj.ul[k] +
                       B_red.transpose() * traj.lambda_l[k];
    traj.residual_l[k] = res.norm();
  }
  return traj;
}

}  // namespace lqstack
