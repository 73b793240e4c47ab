#pragma once

#include <stdexcept>
#include <string>

namespace manifold_l1 {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class DegenerateFace : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class SizeLimitExceeded : public Error {
 public:
  using Error::Error;
};

/// Sparse factorization failed where success is guaranteed (e.g. after a
/// Gersgorin repair). Indicates a bug rather than bad input.
class SolveFailure : public Error {
 public:
  using Error::Error;
};

class NonFiniteObjective : public Error {
 public:
  using Error::Error;
};

class FactorizationRequired : public Error {
 public:
  using Error::Error;
};

/// The r x r Woodbury core I + U^T Q^{-1} U could not be factorized.
class CoreSingular : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, int iterations, double last_residual)
      : Error(what), iterations_(iterations), last_residual_(last_residual) {}

  int iterations() const noexcept { return iterations_; }
  double last_residual() const noexcept { return last_residual_; }

 private:
  int iterations_;
  double last_residual_;
};

class ShiftFailure : public Error {
 public:
  using Error::Error;
};

class OrthogonalityLoss : public Error {
 public:
  using Error::Error;
};

}  // namespace manifold_l1
