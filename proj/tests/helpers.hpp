#pragma once

// Shared fixtures for the test suites: the scalar benchmark instance, frozen
// reference values for it, a deterministic random-instance generator, and an
// independent augmented-state LQR that re-derives the follower's best
// response to a fixed leader schedule from first principles.

#include <cstdint>
#include <vector>

#include "lqstack/model.hpp"

namespace testutil {

using lqstack::GainSchedule;
using lqstack::GameProblem;
using lqstack::Matrix;
using lqstack::Vector;

inline Matrix scalar(double v) {
  Matrix M(1, 1);
  M(0, 0) = v;
  return M;
}

/// The scalar benchmark instance (horizon N = 5) used throughout.
inline GameProblem benchmark_problem() {
  GameProblem p;
  p.A = scalar(3.0);
  p.B1 = scalar(1.0);
  p.B2 = scalar(1.0);
  p.Q = scalar(2.0);
  p.R1 = scalar(1.0);
  p.R2 = scalar(10.0);
  p.Qbar = scalar(1.0);
  p.R1bar = scalar(1.0);
  p.R2bar = scalar(2.0);
  p.P_terminal = scalar(2.0);
  p.Pbar_terminal = scalar(2.0);
  p.N = 5;
  p.x0 = Vector::Constant(1, 5.0);
  return p;
}

/// N = 1 scalar instance whose follower-side LQR solves by hand:
/// P_1 = 3/2, P_0 = 8/5, gains (-3/5, -1/2), optimal cost 8/5 at x0 = 1.
inline GameProblem unit_lqr_problem() {
  GameProblem p;
  p.A = scalar(1.0);
  p.B1 = scalar(1.0);
  p.B2 = scalar(1.0);
  p.Q = scalar(1.0);
  p.R1 = scalar(1.0);
  p.R2 = scalar(1.0);
  p.Qbar = scalar(1.0);
  p.R1bar = scalar(1.0);
  p.R2bar = scalar(1.0);
  p.P_terminal = scalar(1.0);
  p.Pbar_terminal = scalar(1.0);
  p.N = 1;
  p.x0 = Vector::Constant(1, 1.0);
  return p;
}

// Reference values for the benchmark instance, computed once with
// independently validated recursions and frozen. All closed-loop numbers are
// from the faithful recursions (see README on the two published cost values
// that disagree with them).
namespace frozen {

inline const std::vector<double> P = {14.5034756359, 9.6631909178,
                                      9.6623920321,  9.6519241616,
                                      9.5105599420,  7.625,
                                      2.0};
inline const std::vector<double> Pbar = {6.4927733722, 6.4927360843,
                                         6.4922355021, 6.4853763176,
                                         6.3927179110, 5.5,
                                         2.0};
inline const std::vector<double> Kbar = {-0.9154622287, -0.2492741881,
                                         -0.2492509418, -0.2489324366,
                                         -0.2436750999, -0.1875};
inline const std::vector<double> Gbar = {0.0,           -0.1302312966,
                                         -0.1302296763, -0.1302014772,
                                         -0.1300037045, -0.1370356749};
inline const std::vector<double> effF = {-1.8890486548, -1.8890396395,
                                         -1.8889231112, -1.8873253715,
                                         -1.8575947039, -1.5};
inline const std::vector<double> effL = {-0.9154622287, -0.9154560140,
                                         -0.9153725837, -0.9142293863,
                                         -0.8987863185, -0.75};
inline constexpr double Jf = 362.5868908968;
inline constexpr double Jl = 162.3193343045;

inline const std::vector<double> Pf = {14.7133383553, 14.7132016622,
                                       14.7113703280, 14.6868708288,
                                       14.3653303572, 11.0,
                                       2.0};
inline const std::vector<double> Pl = {6.6011891155, 6.6011465435,
                                       6.6005761998, 6.5929487500,
                                       6.4933655006, 5.5,
                                       2.0};
inline const std::vector<double> Kf = {-1.9349568687, -1.9349481833,
                                       -1.9348317636, -1.9332634555,
                                       -1.9107358263, -1.5};
inline const std::vector<double> Kl = {-0.9335315193, -0.9335244239,
                                       -0.9334293666, -0.9321581250,
                                       -0.9155609168, -0.75};
inline constexpr double fbJf = 367.8334588815;
inline constexpr double fbJl = 165.0297278886;

}  // namespace frozen

/// Deterministic, platform-independent RNG (splitmix64) so random-instance
/// tests reproduce bit-for-bit everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  double uniform(double lo, double hi) {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return lo + (hi - lo) * (static_cast<double>(z >> 11) * 0x1.0p-53);
  }

  Matrix matrix(int rows, int cols, double scale) {
    Matrix M(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) M(i, j) = uniform(-scale, scale);
    return M;
  }

  /// Symmetric positive definite d x d matrix M'M + shift I.
  Matrix spd(int d, double shift = 0.3) {
    const Matrix M = matrix(d, d, 1.0);
    return Matrix(M.transpose() * M) + shift * Matrix::Identity(d, d);
  }

  Vector vector(int d, double scale) {
    Vector v(d);
    for (int i = 0; i < d; ++i) v(i) = uniform(-scale, scale);
    return v;
  }

 private:
  std::uint64_t state_;
};

/// Random instance with PD/PSD weights, scalar inputs, state dimension n.
inline GameProblem random_problem(std::uint64_t seed, int n, int N) {
  Rng rng(seed * 0x9e3779b97f4a7c15ULL + 12345);
  GameProblem p;
  p.A = rng.matrix(n, n, n == 1 ? 2.0 : 1.2);
  p.B1 = rng.matrix(n, 1, 1.0);
  p.B2 = rng.matrix(n, 1, 1.0);
  p.Q = rng.spd(n);
  p.R1 = rng.spd(1);
  p.R2 = rng.spd(1);
  p.Qbar = rng.spd(n);
  p.R1bar = rng.spd(1);
  p.R2bar = rng.spd(1);
  p.P_terminal = rng.spd(n);
  p.Pbar_terminal = rng.spd(n);
  p.N = N;
  p.x0 = rng.vector(n, 2.0);
  return p;
}

/// Random gain schedule (memory[0] = 0 as the strategy class requires).
inline GainSchedule random_schedule(std::uint64_t seed, int stages, int m,
                                    int n, double scale) {
  Rng rng(seed * 0x2545f4914f6cdd1dULL + 777);
  GainSchedule s = GainSchedule::zero(stages, m, n);
  for (int k = 0; k < stages; ++k) {
    s.current[k] = rng.matrix(m, n, scale);
    if (k > 0) s.memory[k] = rng.matrix(m, n, scale);
  }
  return s;
}

/// Independent reference for the follower's best response: the one-step
/// memory game against a fixed leader schedule is an ordinary time-varying
/// LQR on the stacked state z_k = (x_k, x_{k-1}).  Solving that LQR must
/// reproduce every quantity of the follower backward pass:
///   W00 block = P_k, W01 block = S_k, gains Ku = [current | memory].
struct AugmentedLqr {
  std::vector<Matrix> W;   ///< N+2 value matrices, (2n) x (2n)
  std::vector<Matrix> Ku;  ///< N+1 gains, m1 x (2n)
};

inline AugmentedLqr augmented_follower_lqr(const GameProblem& p,
                                           const GainSchedule& leader) {
  const int n = p.n();
  const int m1 = p.m1();
  const int N = p.N;
  AugmentedLqr out;
  out.W.assign(N + 2, Matrix());
  out.Ku.assign(N + 1, Matrix());

  Matrix Wnext = Matrix::Zero(2 * n, 2 * n);
  Wnext.topLeftCorner(n, n) = p.P_terminal;
  out.W[N + 1] = Wnext;

  Matrix G = Matrix::Zero(2 * n, m1);
  G.topRows(n) = p.B1;

  for (int k = N; k >= 0; --k) {
    const Matrix& Kb = leader.current[k];
    const Matrix& Gb = leader.memory[k];
    Matrix F = Matrix::Zero(2 * n, 2 * n);
    F.topLeftCorner(n, n) = p.A + p.B2 * Kb;
    F.topRightCorner(n, n) = p.B2 * Gb;
    F.bottomLeftCorner(n, n) = Matrix::Identity(n, n);

    Matrix L(p.m2(), 2 * n);
    L << Kb, Gb;
    Matrix Qa = Matrix::Zero(2 * n, 2 * n);
    Qa.topLeftCorner(n, n) = p.Q;
    Qa += L.transpose() * p.R2 * L;

    const Matrix Gamma = p.R1 + G.transpose() * Wnext * G;
    const Matrix GWF = G.transpose() * Wnext * F;
    const Matrix Ku = -Gamma.ldlt().solve(GWF).eval();
    Matrix W = Qa + F.transpose() * Wnext * F + GWF.transpose() * Ku;
    W = 0.5 * (W + W.transpose());
    out.Ku[k] = Ku;
    out.W[k] = W;
    Wnext = W;
  }
  return out;
}

}  // namespace testutil
