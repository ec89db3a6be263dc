#pragma once

#include <stdexcept>
#include <string>

namespace lqstack {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed problem document (bad JSON, missing fields, wrong field types).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent matrix/vector shapes in a problem document.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A weight matrix violates its symmetry / PSD / PD requirement.
class DefinitenessError : public Error {
 public:
  using Error::Error;
};

/// Stage index outside 0..N.
class StageOutOfRange : public Error {
 public:
  using Error::Error;
};

/// Base for errors that carry the backward-recursion stage at which they
/// occurred.
class StageError : public Error {
 public:
  StageError(const std::string& what, int stage_index)
      : Error(what + " (stage k=" + std::to_string(stage_index) + ")"),
        stage(stage_index) {}
  int stage;
};

/// Gamma^f_k = R1 + B1' P_{k+1} B1 failed a positive-definite factorization.
class GammaNotPD : public StageError {
 public:
  using StageError::StageError;
};

/// Gamma^l_k failed a positive-definite factorization.
class GammaLNotPD : public StageError {
 public:
  using StageError::StageError;
};

/// Delta_k is singular or numerically near-singular (condition > 1e12).
class DeltaSingular : public StageError {
 public:
  using StageError::StageError;
};

/// The leader's stage coefficient in the feedback recursion failed a
/// positive-definite factorization.
class LeaderStagePDFailure : public StageError {
 public:
  using StageError::StageError;
};

/// Overflow/NaN guard tripped during a recursion or rollout.
class NonFiniteValue : public StageError {
 public:
  using StageError::StageError;
};

/// The derivative-free search exhausted its evaluation budget.
class SearchBudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// Problem too large for the brute-force oracle's desk-scale precondition.
class DimensionTooLarge : public Error {
 public:
  using Error::Error;
};

}  // namespace lqstack
