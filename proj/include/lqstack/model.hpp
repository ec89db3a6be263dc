#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "lqstack/errors.hpp"

namespace lqstack {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Data of one finite-horizon linear-quadratic leader-follower game.
///
/// Dynamics  x_{k+1} = A x_k + B1 u^f_k + B2 u^l_k  for k = 0..N, with the
/// follower cost
///   J^f = sum_k [x'Q x + (u^f)'R1 u^f + (u^l)'R2 u^l] + x_{N+1}'P_terminal x_{N+1}
/// and the leader cost the analog with Qbar, R1bar, R2bar, Pbar_terminal.
struct GameProblem {
  Matrix A;              ///< state transition, n x n
  Matrix B1;             ///< follower input map, n x m1
  Matrix B2;             ///< leader input map, n x m2
  Matrix Q;              ///< follower state weight, symmetric PSD
  Matrix R1;             ///< follower weight on own control, symmetric PD
  Matrix R2;             ///< follower weight on leader control, symmetric PD
  Matrix Qbar;           ///< leader state weight, symmetric PSD
  Matrix R1bar;          ///< leader weight on follower control, symmetric PD
  Matrix R2bar;          ///< leader weight on own control, symmetric PD
  Matrix P_terminal;     ///< follower terminal weight P_{N+1}, symmetric PSD
  Matrix Pbar_terminal;  ///< leader terminal weight, symmetric PSD
  int N = 0;             ///< horizon index: stages k = 0..N, terminal x_{N+1}
  Vector x0;             ///< initial state, length n

  int n() const { return static_cast<int>(A.rows()); }
  int m1() const { return static_cast<int>(B1.cols()); }
  int m2() const { return static_cast<int>(B2.cols()); }
};

/// Per-stage gains of a linear strategy with one-step memory,
/// u_k = current[k] x_k + memory[k] x_{k-1}, with x_{-1} := 0 and
/// memory[0] = 0 by definition of the strategy class.
struct GainSchedule {
  std::vector<Matrix> current;  ///< N+1 matrices, m x n
  std::vector<Matrix> memory;   ///< N+1 matrices, m x n; memory[0] = 0

  int stages() const { return static_cast<int>(current.size()); }

  /// All-zero schedule with `stages` stages of m x n gains.
  static GainSchedule zero(int stages, int m, int n);
};

/// One validation finding; severity is "error" or "warning".
struct Finding {
  std::string severity;
  std::string code;
  std::string message;
};

/// Eigenvalue extremes of one weight matrix, recorded for diagnostics.
struct SpectrumSummary {
  std::string name;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
};

/// Result of validate(); ok is true iff no finding has severity "error".
struct ValidationReport {
  bool ok = true;
  std::vector<Finding> findings;
  std::vector<SpectrumSummary> spectra;
};

/// Parses a problem document (JSON, see README for the schema) into a
/// GameProblem. Weight matrices with asymmetry at most 1e-12 (max norm) are
/// replaced by their symmetric part; larger asymmetry is an error.
///
/// Throws ParseError, DimensionError, or DefinitenessError.
GameProblem load_problem(std::istream& source);

/// Convenience overload over an in-memory document.
GameProblem load_problem(const std::string& text);

/// Serializes a problem so that load_problem(serialize(p)) reproduces p
/// exactly (bit-for-bit on every entry).
std::string serialize(const GameProblem& p);

/// Checks dimension compatibility, symmetry, and the PSD/PD requirements of
/// every weight matrix. Always returns a report; never throws.
ValidationReport validate(const GameProblem& p);

/// Evaluates u_k = current[k] x_k + memory[k] x_prev. Pass x_prev = 0 at
/// k = 0 (the x_{-1} := 0 convention). Throws StageOutOfRange.
Vector evaluate_strategy(const GainSchedule& s, int k, const Vector& x_k,
                         const Vector& x_prev);

/// Symmetric part (M + M')/2.
inline Matrix symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

}  // namespace lqstack
