#ifndef FRACPOS_LINALG_HPP
#define FRACPOS_LINALG_HPP

// Dense symmetric kernels. Storage and the factorizations themselves come
// from Eigen; this header pins the contracts (tolerances, error types,
// generalized-problem reduction) the rest of the library relies on.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

#include "fracpos/errors.hpp"

namespace fracpos {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigenpairs of S phi = lambda M phi with M-orthonormal eigenvectors.
///
/// `back` holds the eigenvectors as columns (Phi) and `forward` is its
/// inverse, Phi^T M. Any matrix function f(H) of H = M^{-1} S is then
/// back * diag(f(lambda)) * forward.
struct EigenSystem {
  Vector eigenvalues;  // ascending
  DenseMatrix back;
  DenseMatrix forward;

  [[nodiscard]] Eigen::Index size() const { return eigenvalues.size(); }

  /// back * diag(values) * forward
  [[nodiscard]] DenseMatrix apply(const Vector& values) const {
    return back * (values.asDiagonal() * forward);
  }
};

namespace detail {

inline double max_abs(const DenseMatrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline void require_square(const DenseMatrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw InvalidParameter(std::string(what) + ": matrix is not square (" +
                           std::to_string(a.rows()) + "x" +
                           std::to_string(a.cols()) + ")");
  }
}

inline void require_symmetric(const DenseMatrix& a, const char* what,
                              double rel_tol = 1e-12) {
  require_square(a, what);
  const double scale = max_abs(a);
  if (max_abs(a - a.transpose()) > rel_tol * (scale > 0 ? scale : 1.0)) {
    throw InvalidParameter(std::string(what) + ": matrix is not symmetric");
  }
}

}  // namespace detail

inline bool is_symmetric(const DenseMatrix& a, double rel_tol = 1e-12) {
  if (a.rows() != a.cols()) return false;
  const double scale = detail::max_abs(a);
  return detail::max_abs(a - a.transpose()) <=
         rel_tol * (scale > 0 ? scale : 1.0);
}

/// Lower Cholesky factor L with L L^T = A.
inline DenseMatrix cholesky(const DenseMatrix& a) {
  detail::require_symmetric(a, "cholesky");
  Eigen::LLT<DenseMatrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("cholesky: non-positive pivot");
  }
  return llt.matrixL();
}

struct SymEigenResult {
  Vector eigenvalues;  // ascending
  DenseMatrix vectors; // orthogonal, columns are eigenvectors
};

/// Householder tridiagonalization followed by implicit-shift QR.
inline SymEigenResult sym_eigen(const DenseMatrix& a) {
  detail::require_symmetric(a, "sym_eigen");
  Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(a);
  if (solver.info() != Eigen::Success) {
    throw NoConvergence("sym_eigen: iteration cap reached");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Generalized symmetric-definite eigenproblem S phi = lambda M phi.
///
/// With M = L L^T the problem is reduced to C = L^{-1} S L^{-T}, whose
/// orthogonal eigenvectors V give Phi = L^{-T} V and Phi^{-1} = V^T L^T.
inline EigenSystem gen_sym_eigen(const DenseMatrix& s, const DenseMatrix& m) {
  detail::require_symmetric(s, "gen_sym_eigen(S)");
  detail::require_symmetric(m, "gen_sym_eigen(M)");
  if (s.rows() != m.rows()) {
    throw InvalidParameter("gen_sym_eigen: S and M differ in size");
  }
  Eigen::LLT<DenseMatrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("gen_sym_eigen: mass matrix is not SPD");
  }
  const auto lower = llt.matrixL();
  DenseMatrix c = lower.solve(s);
  c = lower.solve(c.transpose()).transpose();
  c = 0.5 * (c + c.transpose());
  auto [values, vectors] = sym_eigen(c);

  EigenSystem sys;
  sys.eigenvalues = std::move(values);
  sys.back = llt.matrixU().solve(vectors);
  sys.forward = vectors.transpose() * DenseMatrix(llt.matrixU());
  return sys;
}

/// Inverse via partial-pivot LU; Singular if a pivot is below 1e-14 ||A||.
inline DenseMatrix inverse(const DenseMatrix& a) {
  detail::require_square(a, "inverse");
  if (a.rows() == 0) return a;
  Eigen::PartialPivLU<DenseMatrix> lu(a);
  const double scale = detail::max_abs(a);
  const double min_pivot =
      lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(min_pivot > 1e-14 * scale)) {
    throw Singular("inverse: pivot " + std::to_string(min_pivot) +
                   " below threshold");
  }
  return lu.inverse();
}

/// Smallest entry of a matrix.
inline double min_entry(const DenseMatrix& a) { return a.minCoeff(); }

}  // namespace fracpos

#endif  // FRACPOS_LINALG_HPP
