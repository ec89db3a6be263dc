#include "lqstack/model.hpp"

#include <Eigen/Eigenvalues>
#include <istream>
#include <sstream>

#include "json.hpp"

namespace lqstack {

namespace {

using nlohmann::json;

constexpr double kAsymmetryTol = 1e-12;
constexpr double kEigenRelTol = 1e-10;

Matrix parse_matrix(const json& j, const std::string& name) {
  if (j.is_number()) {
    Matrix m(1, 1);
    m(0, 0) = j.get<double>();
    return m;
  }
  if (!j.is_array() || j.empty())
    throw ParseError("field '" + name + "' must be a number or a non-empty array");
  if (j.front().is_number()) {
    // Flat array: only the 1x1 scalar convenience form is accepted here;
    // anything longer is ambiguous between a row and a column.
    if (j.size() != 1)
      throw ParseError("field '" + name +
                       "' must be a nested array of rows (flat arrays are "
                       "reserved for scalars)");
    Matrix m(1, 1);
    m(0, 0) = j.front().get<double>();
    return m;
  }
  const auto rows = j.size();
  const auto cols = j.front().is_array() ? j.front().size() : 0;
  if (cols == 0) throw ParseError("field '" + name + "' has an empty row");
  Matrix m(static_cast<int>(rows), static_cast<int>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != cols)
      throw ParseError("field '" + name + "' has ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number())
        throw ParseError("field '" + name + "' has a non-numeric entry");
      m(static_cast<int>(r), static_cast<int>(c)) = row[c].get<double>();
    }
  }
  return m;
}

Vector parse_vector(const json& j, const std::string& name) {
  if (j.is_number()) {
    Vector v(1);
    v(0) = j.get<double>();
    return v;
  }
  if (!j.is_array() || j.empty())
    throw ParseError("field '" + name + "' must be a number or a non-empty array");
  Vector v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      throw ParseError("field '" + name + "' has a non-numeric entry");
    v(static_cast<int>(i)) = j[i].get<double>();
  }
  return v;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

/// Eigenvalue extremes of a symmetric matrix.
void spectrum(const Matrix& W, double& min_eig, double& max_eig) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(W, Eigen::EigenvaluesOnly);
  min_eig = es.eigenvalues().minCoeff();
  max_eig = es.eigenvalues().maxCoeff();
}

bool is_psd(const Matrix& W, double& min_eig, double& max_eig) {
  if (W.rows() == 1) {
    min_eig = max_eig = W(0, 0);
    return W(0, 0) >= 0.0;
  }
  spectrum(W, min_eig, max_eig);
  const double scale = std::max(std::abs(min_eig), std::abs(max_eig));
  return min_eig >= -kEigenRelTol * scale;
}

bool is_pd(const Matrix& W, double& min_eig, double& max_eig) {
  if (W.rows() == 1) {
    min_eig = max_eig = W(0, 0);
    return W(0, 0) > 0.0;
  }
  spectrum(W, min_eig, max_eig);
  const double scale = std::max(std::abs(min_eig), std::abs(max_eig));
  return min_eig > kEigenRelTol * scale;
}

/// Repairs sub-tolerance asymmetry in place; returns false when the matrix is
/// asymmetric beyond tolerance.
bool repair_symmetry(Matrix& W) {
  if (W.rows() != W.cols()) return false;
  const double asym = (W - W.transpose()).cwiseAbs().maxCoeff();
  if (asym > kAsymmetryTol) return false;
  W = symmetrize(W);
  return true;
}

struct WeightSpec {
  const char* name;
  Matrix GameProblem::*field;
  bool require_pd;  // false: PSD suffices
};

constexpr int kNumWeights = 8;
const WeightSpec kWeights[kNumWeights] = {
    {"Q", &GameProblem::Q, false},
    {"R1", &GameProblem::R1, true},
    {"R2", &GameProblem::R2, true},
    {"Qbar", &GameProblem::Qbar, false},
    {"R1bar", &GameProblem::R1bar, true},
    {"R2bar", &GameProblem::R2bar, true},
    {"P_terminal", &GameProblem::P_terminal, false},
    {"Pbar_terminal", &GameProblem::Pbar_terminal, false},
};

/// Dimension requirements as (rows, cols) in terms of n, m1, m2; returns a
/// human-readable description of the first violation, or empty string.
std::string check_dimensions(const GameProblem& p) {
  const int n = p.n(), m1 = p.m1(), m2 = p.m2();
  auto bad = [](const std::string& what) { return what; };
  if (p.A.rows() != p.A.cols()) return bad("A must be square");
  if (p.B1.rows() != n) return bad("B1 must have n rows");
  if (p.B2.rows() != n) return bad("B2 must have n rows");
  if (p.Q.rows() != n || p.Q.cols() != n) return bad("Q must be n x n");
  if (p.R1.rows() != m1 || p.R1.cols() != m1) return bad("R1 must be m1 x m1");
  if (p.R2.rows() != m2 || p.R2.cols() != m2) return bad("R2 must be m2 x m2");
  if (p.Qbar.rows() != n || p.Qbar.cols() != n) return bad("Qbar must be n x n");
  if (p.R1bar.rows() != m1 || p.R1bar.cols() != m1)
    return bad("R1bar must be m1 x m1");
  if (p.R2bar.rows() != m2 || p.R2bar.cols() != m2)
    return bad("R2bar must be m2 x m2");
  if (p.P_terminal.rows() != n || p.P_terminal.cols() != n)
    return bad("P_terminal must be n x n");
  if (p.Pbar_terminal.rows() != n || p.Pbar_terminal.cols() != n)
    return bad("Pbar_terminal must be n x n");
  if (p.x0.size() != n) return bad("x0 must have length n");
  if (p.N < 0) return bad("N must be nonnegative");
  return {};
}

}  // namespace

GainSchedule GainSchedule::zero(int stages, int m, int n) {
  GainSchedule s;
  s.current.assign(stages, Matrix::Zero(m, n));
  s.memory.assign(stages, Matrix::Zero(m, n));
  return s;
}

GameProblem load_problem(std::istream& source) {
  std::ostringstream buf;
  buf << source.rdbuf();
  return load_problem(buf.str());
}

GameProblem load_problem(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("problem document must be a JSON object");

  auto field = [&](const char* name) -> const json& {
    auto it = doc.find(name);
    if (it == doc.end())
      throw ParseError(std::string("missing field '") + name + "'");
    return *it;
  };

  GameProblem p;
  p.A = parse_matrix(field("A"), "A");
  p.B1 = parse_matrix(field("B1"), "B1");
  p.B2 = parse_matrix(field("B2"), "B2");
  p.Q = parse_matrix(field("Q"), "Q");
  p.R1 = parse_matrix(field("R1"), "R1");
  p.R2 = parse_matrix(field("R2"), "R2");
  p.Qbar = parse_matrix(field("Qbar"), "Qbar");
  p.R1bar = parse_matrix(field("R1bar"), "R1bar");
  p.R2bar = parse_matrix(field("R2bar"), "R2bar");
  p.P_terminal = parse_matrix(field("P_terminal"), "P_terminal");
  p.Pbar_terminal = parse_matrix(field("Pbar_terminal"), "Pbar_terminal");
  const json& jn = field("N");
  if (!jn.is_number_integer() || jn.get<long long>() < 0)
    throw ParseError("field 'N' must be a nonnegative integer");
  p.N = jn.get<int>();
  p.x0 = parse_vector(field("x0"), "x0");

  const std::string dim_msg = check_dimensions(p);
  if (!dim_msg.empty()) throw DimensionError(dim_msg);

  for (const auto& w : kWeights) {
    Matrix& W = p.*(w.field);
    if (!repair_symmetry(W))
      throw DefinitenessError(std::string(w.name) +
                              " is asymmetric beyond tolerance 1e-12");
    double mn = 0, mx = 0;
    const bool ok = w.require_pd ? is_pd(W, mn, mx) : is_psd(W, mn, mx);
    if (!ok)
      throw DefinitenessError(std::string(w.name) + " is not " +
                              (w.require_pd ? "positive definite"
                                            : "positive semidefinite") +
                              " (min eigenvalue " + std::to_string(mn) + ")");
  }
  return p;
}

std::string serialize(const GameProblem& p) {
  json doc;
  doc["A"] = matrix_to_json(p.A);
  doc["B1"] = matrix_to_json(p.B1);
  doc["B2"] = matrix_to_json(p.B2);
  doc["Q"] = matrix_to_json(p.Q);
  doc["R1"] = matrix_to_json(p.R1);
  doc["R2"] = matrix_to_json(p.R2);
  doc["Qbar"] = matrix_to_json(p.Qbar);
  doc["R1bar"] = matrix_to_json(p.R1bar);
  doc["R2bar"] = matrix_to_json(p.R2bar);
  doc["P_terminal"] = matrix_to_json(p.P_terminal);
  doc["Pbar_terminal"] = matrix_to_json(p.Pbar_terminal);
  doc["N"] = p.N;
  json x0 = json::array();
  for (int i = 0; i < p.x0.size(); ++i) x0.push_back(p.x0(i));
  doc["x0"] = x0;
  return doc.dump(2);
}

ValidationReport validate(const GameProblem& p) {
  ValidationReport rep;
  auto error = [&](const std::string& code, const std::string& msg) {
    rep.findings.push_back({"error", code, msg});
    rep.ok = false;
  };

  const std::string dim_msg = check_dimensions(p);
  if (!dim_msg.empty()) {
    error("dimension_mismatch", dim_msg);
    return rep;  // further checks assume conformable shapes
  }

  for (const auto& w : kWeights) {
    const Matrix& W = p.*(w.field);
    const double asym = (W - W.transpose()).cwiseAbs().maxCoeff();
    if (asym > kAsymmetryTol) {
      error(std::string(w.name) + "_not_symmetric",
            std::string(w.name) + " is asymmetric beyond tolerance 1e-12");
      continue;
    }
    double mn = 0, mx = 0;
    const Matrix Ws = symmetrize(W);
    const bool ok = w.require_pd ? is_pd(Ws, mn, mx) : is_psd(Ws, mn, mx);
    rep.spectra.push_back({w.name, mn, mx});
    if (!ok) {
      const char* suffix = w.require_pd ? "_not_pd" : "_not_psd";
      error(std::string(w.name) + suffix,
            std::string(w.name) + " fails its " +
                (w.require_pd ? "positive-definite" : "positive-semidefinite") +
                " requirement (min eigenvalue " + std::to_string(mn) + ")");
    }
  }
  if (!p.x0.allFinite()) error("x0_not_finite", "x0 has a non-finite entry");
  return rep;
}

Vector evaluate_strategy(const GainSchedule& s, int k, const Vector& x_k,
                         const Vector& x_prev) {
  if (k < 0 || k >= s.stages())
    throw StageOutOfRange("stage " + std::to_string(k) +
                          " outside 0.." + std::to_string(s.stages() - 1));
  const Matrix& C = s.current[static_cast<std::size_t>(k)];
  const Matrix& M = s.memory[static_cast<std::size_t>(k)];
  if (C.cols() != x_k.size() || M.cols() != x_prev.size())
    throw DimensionError("state dimension does not match gain schedule");
  return C * x_k + M * x_prev;
}

}  // namespace lqstack
