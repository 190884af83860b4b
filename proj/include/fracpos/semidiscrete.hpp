#ifndef FRACPOS_SEMIDISCRETE_HPP
#define FRACPOS_SEMIDISCRETE_HPP

// Spatially semidiscrete solution matrix E(t) = Q^{-1} diag(u_lambda_i(t)) Q
// and the positivity diagnostics built on it.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fracpos/fem.hpp"
#include "fracpos/kernel.hpp"
#include "fracpos/linalg.hpp"
#include "fracpos/threshold.hpp"

namespace fracpos {

struct SolutionMatrix {
  DenseMatrix matrix;
  double time = 0.0;  // t, or tau for fully discrete matrices
  int steps = 0;      // 0 for semidiscrete
  FemMethod method = FemMethod::SG;
  std::string op;
};

/// Spectral coefficients u_{lambda_i}(t) for every eigenvalue of the system.
inline Vector spectral_kernel(const FemSystem& sys, const FracOperator& op,
                              double t, const ContourSpec& spec = {}) {
  const auto& lam = sys.eigen.eigenvalues;
  const auto u = u_lambda_batch(op, std::span<const double>(lam.data(), lam.size()),
                                t, spec);
  return Eigen::Map<const Vector>(u.data(), static_cast<Eigen::Index>(u.size()));
}

inline constexpr double kIdentityTime = 1e-14;

inline SolutionMatrix solution_matrix(const FemSystem& sys, const FracOperator& op,
                                      double t, const ContourSpec& spec = {}) {
  SolutionMatrix e;
  e.time = t;
  e.method = sys.method;
  e.op = op.describe();
  if (t <= kIdentityTime) {
    e.matrix = DenseMatrix::Identity(sys.interior_count(), sys.interior_count());
  } else {
    e.matrix = sys.eigen.apply(spectral_kernel(sys, op, t, spec));
  }
  return e;
}

inline double solution_min_entry(const FemSystem& sys, const FracOperator& op,
                                 double t, const ContourSpec& spec = {}) {
  return solution_matrix(sys, op, t, spec).matrix.minCoeff();
}

inline std::vector<std::pair<double, double>> min_entry_curve(
    const FemSystem& sys, const FracOperator& op, const std::vector<double>& grid,
    const ContourSpec& spec = {}) {
  std::vector<std::pair<double, double>> curve;
  curve.reserve(grid.size());
  double prev = 0.0;
  for (double t : grid) {
    if (!(t > prev)) throw InvalidParameter("min_entry_curve: grid must ascend from > 0");
    prev = t;
    curve.emplace_back(t, solution_min_entry(sys, op, t, spec));
  }
  return curve;
}

/// Default negativity tolerance, 1e-12 N.
inline double default_tolerance(const FemSystem& sys) {
  return 1e-12 * sys.interior_count();
}

/// Time after which E(t) stays entrywise nonnegative on the scan.
inline ThresholdReport positivity_threshold(const FemSystem& sys,
                                            const FracOperator& op,
                                            const ScanSpec& scan = {},
                                            std::optional<double> tol = std::nullopt,
                                            const ContourSpec& spec = {}) {
  return find_threshold(
      [&](double t) { return solution_min_entry(sys, op, t, spec); }, scan.grid(),
      tol.value_or(default_tolerance(sys)));
}

/// H = M^{-1} S through the eigensystem.
inline DenseMatrix h_matrix(const FemSystem& sys) {
  return sys.eigen.apply(sys.eigen.eigenvalues);
}

/// max |(I - E(t))/beta0(t) - H|, which tends to 0 as t -> 0.
inline double small_time_expansion_check(const FemSystem& sys,
                                         const FracOperator& op, double t,
                                         const ContourSpec& spec = {}) {
  const int n = sys.interior_count();
  const DenseMatrix e = solution_matrix(sys, op, t, spec).matrix;
  const DenseMatrix scaled = (DenseMatrix::Identity(n, n) - e) / beta0(op, t);
  return (scaled - h_matrix(sys)).cwiseAbs().maxCoeff();
}

/// H^{-1} = S^{-1} M by Cholesky solves.
inline DenseMatrix h_inverse(const FemSystem& sys) {
  Eigen::LLT<DenseMatrix> llt(sys.stiffness);
  if (llt.info() != Eigen::Success) {
    throw Singular("h_inverse: stiffness matrix is not SPD");
  }
  return llt.solve(sys.mass);
}

struct PositivityCheck {
  bool positive = false;
  double min_entry = 0.0;
};

inline constexpr double kStrictPositivity = 1e-14;

/// Strictly positive: every entry above 1e-14 max|A|.
inline bool strictly_positive(const DenseMatrix& a) {
  const double scale = a.cwiseAbs().maxCoeff();
  return a.minCoeff() > kStrictPositivity * scale;
}

inline PositivityCheck h_inverse_positive(const FemSystem& sys) {
  const DenseMatrix inv = h_inverse(sys);
  return {strictly_positive(inv), inv.minCoeff()};
}

/// Smallest k <= max_power with H^{-k} strictly positive.
inline std::optional<int> h_eventually_positive(const FemSystem& sys, int max_power) {
  if (max_power < 1 || max_power > 8) {
    throw InvalidParameter("h_eventually_positive: max power must lie in [1, 8]");
  }
  const DenseMatrix inv = h_inverse(sys);
  DenseMatrix power = inv;
  for (int k = 1; k <= max_power; ++k) {
    if (k > 1) power = power * inv;
    if (strictly_positive(power)) return k;
  }
  return std::nullopt;
}

}  // namespace fracpos

#endif  // FRACPOS_SEMIDISCRETE_HPP
