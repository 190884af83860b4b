#ifndef FRACPOS_FULLYDISCRETE_HPP
#define FRACPOS_FULLYDISCRETE_HPP

// Backward-Euler convolution quadrature in time:
//   (omega_0 M + S) U^n = M (sum_{j<n} omega_j V - sum_{0<j<n} omega_{n-j} U^j)
// with U^0 = V. H = M^{-1} S is never formed; the stepping matrix is
// factorized once per tau.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fracpos/fem.hpp"
#include "fracpos/kernel.hpp"
#include "fracpos/linalg.hpp"
#include "fracpos/semidiscrete.hpp"
#include "fracpos/threshold.hpp"

namespace fracpos {

/// Full history of one stepping run. Columns of each U^j are independent
/// solutions, so stepping the identity yields E_{n,tau} column by column.
struct SteppingState {
  std::vector<DenseMatrix> history;  // U^0 .. U^n
  std::vector<double> weights;       // omega_0 .. omega_n
  double tau = 0.0;
  Eigen::LLT<DenseMatrix> factorization;  // of omega_0 M + S
  double max_residual = 0.0;  // max_n |(w0 M + S) U^n - M rhs^n| / |M rhs^n|

  [[nodiscard]] int steps() const { return static_cast<int>(history.size()) - 1; }
};

inline SteppingState step_solution(const FemSystem& sys, const FracOperator& op,
                                   double tau, int n, const DenseMatrix& initial) {
  if (!(tau > 0.0)) throw DomainError("step_solution: tau must be positive");
  if (n < 1) throw DomainError("step_solution: need at least one step");
  if (initial.rows() != sys.interior_count()) {
    throw InvalidParameter("step_solution: initial data has wrong size");
  }
  SteppingState state;
  state.tau = tau;
  state.weights = cq_weights(op, tau, n);
  const auto& w = state.weights;
  const DenseMatrix lhs = w[0] * sys.mass + sys.stiffness;
  state.factorization.compute(lhs);
  if (state.factorization.info() != Eigen::Success) {
    throw NotPositiveDefinite("step_solution: omega_0 M + S is not SPD");
  }
  state.history.reserve(static_cast<std::size_t>(n) + 1);
  state.history.push_back(initial);
  double partial = w[0];  // sum_{j<k} omega_j
  for (int k = 1; k <= n; ++k) {
    DenseMatrix combo = partial * initial;
    for (int j = 1; j < k; ++j) combo -= w[k - j] * state.history[j];
    const DenseMatrix rhs = sys.mass * combo;
    DenseMatrix next = state.factorization.solve(rhs);
    const double scale = rhs.norm();
    if (scale > 0.0) {
      state.max_residual =
          std::max(state.max_residual, (lhs * next - rhs).norm() / scale);
    }
    state.history.push_back(std::move(next));
    partial += w[k];
  }
  return state;
}

/// E_{n,tau} = Q^{-1} diag(r_{n,tau}(lambda_i)) Q.
inline SolutionMatrix fd_solution_matrix(const FemSystem& sys, const FracOperator& op,
                                         double tau, int n) {
  if (n < 0) throw DomainError("fd_solution_matrix: n must be >= 0");
  SolutionMatrix e;
  e.time = tau;
  e.steps = n;
  e.method = sys.method;
  e.op = op.describe();
  const auto& lam = sys.eigen.eigenvalues;
  if (n == 0) {
    e.matrix = DenseMatrix::Identity(lam.size(), lam.size());
    return e;
  }
  const auto omega = cq_weights(op, tau, n);
  Vector r(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    r(i) = r_scalar_history(omega, lam(i), n).back();
  }
  e.matrix = sys.eigen.apply(r);
  return e;
}

/// E_{1,tau} = omega_0 (omega_0 M + S)^{-1} M for a given leading weight.
inline DenseMatrix first_step_matrix(const FemSystem& sys, double omega0) {
  if (!(omega0 > 0.0)) throw DomainError("first_step_matrix: omega0 must be positive");
  Eigen::LLT<DenseMatrix> llt(omega0 * sys.mass + sys.stiffness);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("first_step_matrix: omega_0 M + S is not SPD");
  }
  return omega0 * llt.solve(sys.mass);
}

inline double first_step_min_entry(const FemSystem& sys, const FracOperator& op,
                                   double tau) {
  return first_step_matrix(sys, char_fn_real(op, 1.0 / tau)).minCoeff();
}

/// Step size after which E_{1,tau}, and hence every E_{n,tau}, is nonnegative.
inline ThresholdReport fd_positivity_threshold(const FemSystem& sys,
                                               const FracOperator& op,
                                               const ScanSpec& scan = {},
                                               std::optional<double> tol = std::nullopt) {
  return find_threshold([&](double tau) { return first_step_min_entry(sys, op, tau); },
                        scan.grid(), tol.value_or(default_tolerance(sys)));
}

struct OmegaBound {
  enum class Status {
    Bounded,    // E_1 >= 0 exactly for omega_0 in (0, omega_max]
    Unbounded,  // no negative entry up to the search cap
    Never,      // negative already as omega_0 -> 0 (H^{-1} has a negative entry)
  };
  Status status = Status::Never;
  double omega_max = 0.0;  // from bisection
  /// Largest omega_0 with omega_0 m_ij + s_ij <= 0 for every coupled pair,
  /// i.e. min over pairs of |s_ij|/m_ij (0 if some pair has s_ij >= 0 < m_ij).
  double certified_min_form = 0.0;
  /// max over pairs of |s_ij|/m_ij, the bound as literally printed.
  double printed_max_form = 0.0;
};

inline constexpr double kOmegaSearchCap = 1e20;

/// Largest omega_0 for which (omega_0 I + H)^{-1} >= -tol, by bisection.
inline OmegaBound first_step_positivity_omega(const FemSystem& sys,
                                              std::optional<double> tol = std::nullopt) {
  const double tolerance = tol.value_or(default_tolerance(sys));
  OmegaBound out;

  const int n = sys.interior_count();
  bool positive_coupling = false;
  double min_form = std::numeric_limits<double>::infinity();
  double max_form = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double m = sys.mass(i, j);
      const double s = sys.stiffness(i, j);
      if (s > kOffDiagonalTolerance) positive_coupling = true;
      if (m > 0.0) {
        const double s_neg = s < -kOffDiagonalTolerance ? -s : 0.0;
        min_form = std::min(min_form, s_neg / m);
        max_form = std::max(max_form, std::abs(s) / m);
      }
    }
  }
  out.certified_min_form = positive_coupling ? 0.0 : min_form;
  out.printed_max_form = max_form;

  // omega_0 -> 0 limit: E_1 / omega_0 -> H^{-1}
  const DenseMatrix h_inv = h_inverse(sys);
  if (h_inv.minCoeff() < -tolerance * h_inv.cwiseAbs().maxCoeff()) {
    out.status = OmegaBound::Status::Never;
    return out;
  }
  auto negative = [&](double w0) { return first_step_matrix(sys, w0).minCoeff() < -tolerance; };
  double lo = 1.0;
  while (negative(lo) && lo > 1e-20) lo *= 0.5;
  if (negative(lo)) {
    out.status = OmegaBound::Status::Never;
    return out;
  }
  double hi = lo * 2.0;
  while (!negative(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > kOmegaSearchCap) {
      out.status = OmegaBound::Status::Unbounded;
      out.omega_max = std::numeric_limits<double>::infinity();
      return out;
    }
  }
  while (hi / lo - 1.0 > 1e-8) {
    const double mid = std::sqrt(lo * hi);
    if (negative(mid)) hi = mid; else lo = mid;
  }
  out.status = OmegaBound::Status::Bounded;
  out.omega_max = lo;
  return out;
}

/// Least-squares slope of log y against log x.
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidParameter("log_log_slope: need at least two matching points");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0 && y[k] > 0.0)) {
      throw DomainError("log_log_slope: values must be positive");
    }
    const double lx = std::log(x[k]), ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct ScaleLawPoint {
  double h = 0.0;
  double tau_threshold = 0.0;
};

struct ScaleLawResult {
  std::vector<ScaleLawPoint> points;
  double slope = 0.0;
};

/// Fully discrete threshold tau_0 = P^{-1}(omega_max) on a mesh family and
/// its fitted power of h. `make_mesh_at(level)` builds one refinement level.
template <typename MeshFactory>
ScaleLawResult weight_scale_law(MeshFactory&& make_mesh_at, const std::vector<int>& levels,
                                FemMethod method, const FracOperator& op) {
  if (levels.size() < 3) throw InvalidParameter("weight_scale_law: need >= 3 levels");
  ScaleLawResult result;
  std::vector<double> hs, taus;
  for (int level : levels) {
    const TriMesh mesh = make_mesh_at(level);
    const FemSystem sys = build_fem_system(mesh, method);
    const OmegaBound bound = first_step_positivity_omega(sys);
    if (bound.status != OmegaBound::Status::Bounded) {
      throw DomainError("weight_scale_law: no finite threshold at level " +
                        std::to_string(level));
    }
    const double h = mesh_size(mesh);
    const double tau = tau_for_omega0(op, bound.omega_max);
    result.points.push_back({h, tau});
    hs.push_back(h);
    taus.push_back(tau);
  }
  result.slope = log_log_slope(hs, taus);
  return result;
}

struct ConvergenceResult {
  std::vector<int> steps;
  std::vector<double> errors;  // max_j |u_{lambda_j}(t) - r_{n,t/n}(lambda_j)|
  double rate = 0.0;           // fitted p in error ~ C n^{-p}
};

/// Spectral error of E_{n,t/n} against E(t) in the M-weighted norm.
inline ConvergenceResult convergence_rate(const FemSystem& sys, const FracOperator& op,
                                          double t, const std::vector<int>& steps,
                                          const ContourSpec& spec = {}) {
  if (steps.size() < 2) throw InvalidParameter("convergence_rate: need >= 2 step counts");
  for (std::size_t k = 0; k < steps.size(); ++k) {
    if (steps[k] < 1 || (k > 0 && steps[k] <= steps[k - 1])) {
      throw InvalidParameter("convergence_rate: step counts must ascend from 1");
    }
  }
  const Vector u = spectral_kernel(sys, op, t, spec);
  const auto& lam = sys.eigen.eigenvalues;
  ConvergenceResult out;
  out.steps = steps;
  std::vector<double> ns;
  for (int n : steps) {
    const auto omega = cq_weights(op, t / n, n);
    double err = 0.0;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      err = std::max(err, std::abs(u(i) - r_scalar_history(omega, lam(i), n).back()));
    }
    out.errors.push_back(err);
    ns.push_back(static_cast<double>(n));
  }
  out.rate = -log_log_slope(ns, out.errors);
  return out;
}

struct ContractivityRow {
  double tau = 0.0;
  double max_norm = 0.0;  // max over 0 <= n <= n_max of |E_{n,tau}|_inf
  int worst_step = 0;
};

struct ContractivityReport {
  bool diagonally_dominant = false;
  std::vector<ContractivityRow> rows;
  /// diagonally dominant implies every norm <= 1 + 1e-10
  bool implication_holds = true;
};

inline constexpr double kContractivityTolerance = 1e-10;

inline double max_row_sum(const DenseMatrix& a) {
  return a.cwiseAbs().rowwise().sum().maxCoeff();
}

inline ContractivityReport max_norm_contractivity_check(const FemSystem& sys,
                                                        const FracOperator& op,
                                                        const std::vector<double>& taus,
                                                        int n_max) {
  if (n_max < 0) throw InvalidParameter("contractivity: n_max must be >= 0");
  ContractivityReport report;
  report.diagonally_dominant = is_diagonally_dominant(sys.stiffness);
  const int n = sys.interior_count();
  for (double tau : taus) {
    ContractivityRow row;
    row.tau = tau;
    row.max_norm = 1.0;  // E_{0,tau} = I
    if (n_max >= 1) {
      const auto state = step_solution(sys, op, tau, n_max, DenseMatrix::Identity(n, n));
      for (int k = 1; k <= n_max; ++k) {
        const double norm = max_row_sum(state.history[k]);
        if (norm > row.max_norm) {
          row.max_norm = norm;
          row.worst_step = k;
        }
      }
    }
    if (report.diagonally_dominant && row.max_norm > 1.0 + kContractivityTolerance) {
      report.implication_holds = false;
    }
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace fracpos

#endif  // FRACPOS_FULLYDISCRETE_HPP
