#include "lqstack/oracle.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>

#include "lqstack/simulator.hpp"

namespace lqstack {

namespace {

constexpr double kDivergedValue = 1e300;
constexpr int kGridCap = 4096;  // max points per grid level before sampling

/// Deterministic 64-bit mixer; identical output on every platform, unlike
/// the distribution adapters in <random>.
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double symmetric() { return 2.0 * uniform() - 1.0; }
};

/// Radical-inverse (Halton) sequence value of index i in the given base.
double halton(std::uint64_t i, std::uint64_t base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

constexpr std::uint64_t kPrimes[] = {2,  3,  5,  7,  11, 13,
                                     17, 19, 23, 29, 31, 37};

/// Counting objective wrapper around the simulated follower cost.
class FollowerObjective {
 public:
  FollowerObjective(const GameProblem& p, const GainSchedule& leader,
                    long budget)
      : p_(p), leader_(leader), budget_(budget) {
    const int N = p.N;
    schedule_ = GainSchedule::zero(N + 1, p.m1(), p.n());
  }

  int dim() const { return (2 * p_.N + 1) * p_.m1() * p_.n(); }

  double operator()(const std::vector<double>& theta) {
    if (++evaluations_ > budget_)
      throw SearchBudgetExceeded(
          "follower search exceeded its evaluation budget");
    unpack(theta);
    try {
      return rollout(p_, schedule_, leader_).total_Jf;
    } catch (const NonFiniteValue&) {
      return kDivergedValue;
    }
  }

 private:
  void unpack(const std::vector<double>& theta) {
    const int m1 = p_.m1(), n = p_.n(), N = p_.N;
    std::size_t idx = 0;
    for (int k = 0; k <= N; ++k)
      for (int r = 0; r < m1; ++r)
        for (int c = 0; c < n; ++c) schedule_.current[k](r, c) = theta[idx++];
    for (int k = 1; k <= N; ++k)
      for (int r = 0; r < m1; ++r)
        for (int c = 0; c < n; ++c) schedule_.memory[k](r, c) = theta[idx++];
  }

  const GameProblem& p_;
  const GainSchedule& leader_;
  GainSchedule schedule_;
  long budget_;
  long evaluations_ = 0;
};

/// Tracks the best point found, breaking exact value ties toward the
/// lexicographically smallest parameter vector so the search result is a
/// deterministic function of its inputs.
struct Best {
  double value = kDivergedValue;
  std::vector<double> params;
  void offer(double v, const std::vector<double>& x) {
    if (v < value || (v == value && !params.empty() &&
                      std::lexicographical_compare(x.begin(), x.end(),
                                                   params.begin(),
                                                   params.end()))) {
      value = v;
      params = x;
    } else if (params.empty() && v <= value) {
      value = v;
      params = x;
    }
  }
};

/// One level of grid search in the box [center - w, center + w]^p: the full
/// Cartesian grid when it is small enough, otherwise a Halton sample of the
/// box. Returns the best point of the level.
template <class Obj>
void grid_level(Obj& obj, const std::vector<double>& center,
                double w, int resolution, Best& best) {
  const int p = static_cast<int>(center.size());
  double full = 1.0;
  bool cartesian = true;
  for (int j = 0; j < p; ++j) {
    full *= static_cast<double>(resolution);
    if (full > static_cast<double>(kGridCap)) {
      cartesian = false;
      break;
    }
  }
  std::vector<double> x(center);
  if (cartesian) {
    std::vector<int> digit(p, 0);
    const long total = static_cast<long>(std::llround(full));
    for (long i = 0; i < total; ++i) {
      for (int j = 0; j < p; ++j) {
        const double t = (resolution == 1)
                             ? 0.5
                             : static_cast<double>(digit[j]) /
                                   static_cast<double>(resolution - 1);
        x[j] = center[j] - w + 2.0 * w * t;
      }
      best.offer(obj(x), x);
      for (int j = 0; j < p; ++j) {
        if (++digit[j] < resolution) break;
        digit[j] = 0;
      }
    }
  } else {
    for (int i = 1; i <= kGridCap; ++i) {
      for (int j = 0; j < p; ++j)
        x[j] = center[j] - w +
               2.0 * w * halton(static_cast<std::uint64_t>(i), kPrimes[j % 12]);
      best.offer(obj(x), x);
    }
  }
}

/// Deterministic Nelder-Mead descent from `start` with initial step `step`.
/// When `directions` is non-null its columns replace the coordinate axes as
/// the initial simplex edges (they must form a p x p basis).
template <class Obj>
void nelder_mead(Obj& obj, const std::vector<double>& start,
                 double step, int max_iter, double tol, Best& best,
                 const Eigen::MatrixXd* directions = nullptr) {
  const int p = static_cast<int>(start.size());
  std::vector<std::vector<double>> v(p + 1, start);
  std::vector<double> f(p + 1);
  for (int j = 0; j < p; ++j) {
    if (directions)
      for (int i = 0; i < p; ++i) v[j + 1][i] += step * (*directions)(i, j);
    else
      v[j + 1][j] += step;
  }
  for (int i = 0; i <= p; ++i) {
    f[i] = obj(v[i]);
    best.offer(f[i], v[i]);
  }

  std::vector<int> order(p + 1);
  std::vector<double> centroid(p), xr(p), xe(p), xc(p);
  for (int iter = 0; iter < max_iter; ++iter) {
    for (int i = 0; i <= p; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return f[a] < f[b]; });
    const int lo = order[0], hi = order[p], second_hi = order[p - 1];
    if (std::abs(f[hi] - f[lo]) <= tol * (1.0 + std::abs(f[lo]))) break;

    for (int j = 0; j < p; ++j) {
      double s = 0.0;
      for (int i = 0; i <= p; ++i)
        if (i != hi) s += v[i][j];
      centroid[j] = s / static_cast<double>(p);
    }
    for (int j = 0; j < p; ++j) xr[j] = centroid[j] + (centroid[j] - v[hi][j]);
    const double fr = obj(xr);
    best.offer(fr, xr);
    if (fr < f[lo]) {
      for (int j = 0; j < p; ++j)
        xe[j] = centroid[j] + 2.0 * (centroid[j] - v[hi][j]);
      const double fe = obj(xe);
      best.offer(fe, xe);
      if (fe < fr) {
        v[hi] = xe;
        f[hi] = fe;
      } else {
        v[hi] = xr;
        f[hi] = fr;
      }
    } else if (fr < f[second_hi]) {
      v[hi] = xr;
      f[hi] = fr;
    } else {
      for (int j = 0; j < p; ++j)
        xc[j] = centroid[j] + 0.5 * (v[hi][j] - centroid[j]);
      const double fc = obj(xc);
      best.offer(fc, xc);
      if (fc < f[hi]) {
        v[hi] = xc;
        f[hi] = fc;
      } else {
        for (int i = 0; i <= p; ++i) {
          if (i == lo) continue;
          for (int j = 0; j < p; ++j)
            v[i][j] = v[lo][j] + 0.5 * (v[i][j] - v[lo][j]);
          f[i] = obj(v[i]);
          best.offer(f[i], v[i]);
        }
      }
    }
  }
}

}  // namespace

OracleReport brute_force_follower(const GameProblem& p,
                                  const GainSchedule& leader,
                                  const SearchConfig& cfg) {
  const int dim = (2 * p.N + 1) * p.m1() * p.n();
  if (dim > 12)
    throw DimensionTooLarge(
        "brute-force oracle is limited to (2N+1) m1 n <= 12 parameters, got " +
        std::to_string(dim));
  if (leader.stages() != p.N + 1)
    throw DimensionError("leader schedule must have N+1 stages");

  FollowerObjective obj(p, leader, cfg.max_evaluations);
  Best best;

  // Deterministic multi-start: the origin plus Halton offsets; the seed only
  // shifts the Halton index window.
  const std::uint64_t offset = 1 + (cfg.seed % 9973) * 64;
  for (int s = 0; s < std::max(1, cfg.multistarts); ++s) {
    std::vector<double> start(dim, 0.0);
    if (s > 0)
      for (int j = 0; j < dim; ++j)
        start[j] = cfg.box * (2.0 * halton(offset + static_cast<std::uint64_t>(s),
                                           kPrimes[j % 12]) -
                              1.0);
    Best local;
    local.offer(obj(start), start);
    double w = cfg.box;
    for (int level = 0; level < cfg.refinement_levels; ++level) {
      grid_level(obj, local.params, w, cfg.resolution, local);
      w = (cfg.resolution > 1) ? 2.0 * w / static_cast<double>(cfg.resolution - 1)
                               : 0.5 * w;
    }
    nelder_mead(obj, local.params, std::max(w, 1e-4), cfg.simplex_max_iter,
                cfg.tol, local);
    best.offer(local.value, local.params);
  }

  // Stage-block sweeps: refine each stage's gain entries (current plus
  // memory) by a low-dimensional descent holding the other stages fixed and
  // cycle until a full sweep stops improving. This follows the game's
  // stagewise structure, where full-space simplex descent crawls.
  const auto block_sweeps = [&](int max_sweeps) {
    const int bs = p.m1() * p.n();
    double sweep_start = best.value;
    std::vector<double> sweep_origin = best.params;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      for (int k = p.N; k >= 0; --k) {
        std::vector<int> idx;
        for (int i = 0; i < bs; ++i) idx.push_back(k * bs + i);
        if (k >= 1)
          for (int i = 0; i < bs; ++i)
            idx.push_back((p.N + 1) * bs + (k - 1) * bs + i);
        const std::vector<double> base = best.params;
        std::vector<double> sub(idx.size());
        std::vector<double> scratch = base;
        for (std::size_t i = 0; i < idx.size(); ++i) sub[i] = base[idx[i]];
        auto restricted = [&](const std::vector<double>& s) {
          for (std::size_t i = 0; i < idx.size(); ++i) scratch[idx[i]] = s[i];
          return obj(scratch);
        };
        Best local;
        local.offer(restricted(sub), sub);
        for (const double step : {0.3, 0.03, 0.003, 3e-4})
          nelder_mead(restricted, local.params, step, cfg.simplex_max_iter,
                      cfg.tol, local);
        if (local.value < best.value) {
          std::vector<double> full = base;
          for (std::size_t i = 0; i < idx.size(); ++i)
            full[idx[i]] = local.params[i];
          best.offer(local.value, full);
        }
      }
      // Pattern acceleration: extrapolate along the sweep's net displacement
      // to follow the valley instead of zigzagging across it.
      std::vector<double> probe(best.params.size());
      bool moved = false;
      for (std::size_t i = 0; i < probe.size(); ++i)
        moved = moved || best.params[i] != sweep_origin[i];
      if (moved) {
        std::vector<double> from = best.params;
        for (const double alpha : {1.0, 2.0, 4.0, 8.0, 16.0}) {
          for (std::size_t i = 0; i < probe.size(); ++i)
            probe[i] = from[i] + alpha * (from[i] - sweep_origin[i]);
          best.offer(obj(probe), probe);
        }
        if (best.value < sweep_start)
          nelder_mead(obj, best.params, 0.01, cfg.simplex_max_iter, cfg.tol,
                      best);
      }
      sweep_origin = best.params;
      if (sweep_start - best.value <= cfg.tol * (1.0 + std::abs(best.value)))
        break;
      sweep_start = best.value;
    }
  };
  block_sweeps(40);

  // Polish with repeated descents from the incumbent, cycling through
  // shrinking simplex steps until a full cycle stops improving. A single
  // Nelder-Mead run stagnates in higher-dimensional parameter spaces; fresh
  // simplices -- alternating axis-aligned and randomly rotated (seeded)
  // orientations -- recover from collapse along curved valleys.
  const double polish_steps[] = {0.5, 0.1, 0.02, 0.004, 8e-4};
  SplitMix64 rot_rng(cfg.seed ^ 0x5deece66dULL);
  double cycle_start = best.value;
  for (int cycle = 0; cycle < 24; ++cycle) {
    Eigen::MatrixXd rotation;
    if (cycle % 2 == 1) {
      Eigen::MatrixXd raw(dim, dim);
      for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) raw(r, c) = rot_rng.symmetric();
      rotation = Eigen::HouseholderQR<Eigen::MatrixXd>(raw).householderQ();
    }
    for (const double step : polish_steps)
      nelder_mead(obj, best.params, step, cfg.simplex_max_iter, cfg.tol, best,
                  cycle % 2 == 1 ? &rotation : nullptr);
    if (cycle % 2 == 1) {
      if (cycle_start - best.value <= cfg.tol * (1.0 + std::abs(best.value)))
        break;
      cycle_start = best.value;
    }
  }
  block_sweeps(40);

  OracleReport rep;
  rep.best = best.value;
  rep.best_params = best.params;
  rep.analytic = follower_cost(follower_backward(p, leader), p.x0);
  rep.gap = rep.best - rep.analytic;

  const double scale = 1.0 + std::abs(rep.analytic);
  OracleCheck lower{"lower_bound", rep.gap >= -1e-6 * scale, rep.gap,
                    -1e-6 * scale};
  OracleCheck match{"match", std::abs(rep.gap) <= 1e-4 * scale,
                    std::abs(rep.gap), 1e-4 * scale};
  rep.checks = {lower, match};
  rep.pass = lower.pass && match.pass;
  return rep;
}

OracleReport finite_diff_stationarity(const GameProblem& p,
                                      const ClosedLoopSolution& sol, double h,
                                      std::uint64_t seed) {
  if (!(h >= 1e-7 && h <= 1e-3))
    throw Error("finite-difference step must lie in [1e-7, 1e-3]");
  const int n = p.n(), m2 = p.m2();
  const int N = static_cast<int>(sol.leader_schedule.current.size()) - 1;
  SplitMix64 rng(seed * 0x9e3779b97f4a7c15ULL + 1);

  OracleReport rep;
  rep.checks.push_back(
      {"stage_0_skipped_no_memory_state", true, 0.0, 0.0});
  rep.best = 0.0;

  for (int k = 1; k <= N; ++k) {
    const FollowerStageData& st = sol.follower_rec.stages[k];
    const Matrix& P1 = sol.follower_rec.P[k + 1];
    const Matrix& S1 = sol.follower_rec.S[k + 1];
    Eigen::LLT<Matrix> lltF(st.GammaF);
    Matrix T_next = Matrix::Zero(n, n);
    if (k < N) {
      const Matrix& Gb1 = sol.leader_schedule.memory[k + 1];
      T_next = Gb1.transpose() * sol.follower_rec.stages[k + 1].Delta * Gb1;
    }
    const Matrix cross = S1.transpose();  // used with its transpose below

    const auto stage_value = [&](const Matrix& Kb, const Vector& x) {
      const Matrix H = st.M1 + st.MB * Kb + p.B1.transpose() * S1;
      const Matrix At = p.A + p.B2 * Kb;
      const Matrix Pk =
          symmetrize(p.Q + Kb.transpose() * p.R2 * Kb +
                     At.transpose() * P1 * At + At.transpose() * S1 +
                     cross * At + T_next - H.transpose() * lltF.solve(H));
      return x.dot(Pk * x);
    };

    const Matrix& Kb0 = sol.leader_schedule.current[k];
    double worst = 0.0;
    for (int probe = 0; probe < 3; ++probe) {
      Matrix D(m2, n);
      for (int r = 0; r < m2; ++r)
        for (int c = 0; c < n; ++c) D(r, c) = rng.symmetric();
      const double dn = D.norm();
      if (dn > 0.0) D /= dn;
      for (int xi = 0; xi < 2; ++xi) {
        Vector x(n);
        for (int c = 0; c < n; ++c) x(c) = rng.symmetric();
        const double xn = x.norm();
        if (xn > 0.0)
          x /= xn;
        else
          x(0) = 1.0;
        const double f0 = stage_value(Kb0, x);
        const double deriv =
            (stage_value(Kb0 + h * D, x) - stage_value(Kb0 - h * D, x)) /
            (2.0 * h);
        worst = std::max(worst, std::abs(deriv) / (1.0 + std::abs(f0)));
      }
    }
    rep.checks.push_back({"stage_" + std::to_string(k), worst <= 1e-5, worst,
                          1e-5});
    rep.best = std::max(rep.best, worst);
  }
  rep.analytic = 0.0;
  rep.gap = rep.best;
  rep.pass = true;
  for (const OracleCheck& c : rep.checks) rep.pass = rep.pass && c.pass;
  return rep;
}

OracleReport reduced_lqr_crosscheck(const GameProblem& p,
                                    const FollowerRecursion& frec,
                                    const LeaderRecursion& lrec) {
  const int N = static_cast<int>(frec.stages.size()) - 1;
  double dev_gain = 0.0, dev_value = 0.0;

  // Generic time-varying LQR with cross terms on the reduced system:
  //   min sum x'Qk x + 2 x'Nk u + u'Rk u,  x+ = A_red x + B_red u.
  Matrix Pc = p.Pbar_terminal;
  dev_value = (Pc - lrec.Pbar[N + 1]).cwiseAbs().maxCoeff();
  for (int k = N; k >= 0; --k) {
    const FollowerStageData& st = frec.stages[k];
    const Matrix& S1 = frec.S[k + 1];
    Eigen::LLT<Matrix> lltF(st.GammaF);
    const Matrix msf = st.M1 + p.B1.transpose() * S1;
    const Matrix Gi_msf = lltF.solve(msf);
    const Matrix Gi_MB = lltF.solve(st.MB);
    const Matrix A_red = p.A - p.B1 * Gi_msf;
    const Matrix B_red = p.B2 - p.B1 * Gi_MB;
    const Matrix Qk = symmetrize(p.Qbar + msf.transpose() *
                                              lltF.solve(p.R1bar * Gi_msf));
    const Matrix Rk = symmetrize(
        p.R2bar + st.MB.transpose() * lltF.solve(p.R1bar * Gi_MB));
    const Matrix Nk = msf.transpose() * lltF.solve(p.R1bar * Gi_MB);

    const Matrix Theta = symmetrize(Rk + B_red.transpose() * Pc * B_red);
    Eigen::LDLT<Matrix> ldlt(Theta);
    const Matrix L = -ldlt.solve(Nk.transpose() + B_red.transpose() * Pc * A_red);
    Pc = symmetrize(Qk + A_red.transpose() * Pc * A_red +
                    (Nk + A_red.transpose() * Pc * B_red) * L);

    dev_gain = std::max(
        dev_gain, (L - lrec.leader_state_feedback[k]).cwiseAbs().maxCoeff());
    dev_value =
        std::max(dev_value, (Pc - lrec.Pbar[k]).cwiseAbs().maxCoeff());
  }

  OracleReport rep;
  rep.best = std::max(dev_gain, dev_value);
  rep.analytic = 0.0;
  rep.gap = rep.best;
  const bool finite = std::isfinite(dev_gain) && std::isfinite(dev_value);
  OracleCheck gain{"gain_agreement", finite && dev_gain <= 1e-10, dev_gain,
                   1e-10};
  OracleCheck value{"value_agreement", finite && dev_value <= 1e-10, dev_value,
                    1e-10};
  rep.checks = {gain, value};
  rep.pass = gain.pass && value.pass;
  return rep;
}

}  // namespace lqstack
