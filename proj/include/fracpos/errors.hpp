#ifndef FRACPOS_ERRORS_HPP
#define FRACPOS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fracpos {

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A pivot of a Cholesky factorization was not positive.
struct NotPositiveDefinite : Error {
  using Error::Error;
};

/// Symmetric eigensolver exceeded its iteration cap.
struct NoConvergence : Error {
  using Error::Error;
};

/// LU pivot below the singularity threshold.
struct Singular : Error {
  using Error::Error;
};

/// A generator or operator received an argument outside its domain.
struct InvalidParameter : Error {
  using Error::Error;
};

/// Malformed mesh or configuration file.
struct ParseError : Error {
  using Error::Error;
};

/// Triangle with (near) zero area.
struct DegenerateTriangle : Error {
  using Error::Error;
};

/// Argument outside the domain of a scalar function.
struct DomainError : Error {
  using Error::Error;
};

/// Evaluation point on the branch cut of z^alpha.
struct BranchCut : Error {
  using Error::Error;
};

/// Trapezoidal contour sum failed its conjugate-symmetry check.
struct ContourFailure : Error {
  using Error::Error;
};

}  // namespace fracpos

#endif  // FRACPOS_ERRORS_HPP
