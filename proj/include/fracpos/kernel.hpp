#ifndef FRACPOS_KERNEL_HPP
#define FRACPOS_KERNEL_HPP

// Scalar side of the subdiffusion model P(d_t) u + lambda u = 0, u(0) = 1:
// the symbol P(z), the relaxation kernel u_lambda(t) by Laplace inversion on
// a hyperbolic contour, Mittag-Leffler reference values, the small/large
// time scales, backward-Euler convolution quadrature weights and the scalar
// time-stepping recursion.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "fracpos/errors.hpp"
#include "fracpos/quadrature.hpp"

namespace fracpos {

using Complex = std::complex<double>;

/// One point mass b * d^alpha/dt^alpha of the operator.
struct FracTerm {
  double weight = 1.0;
  double exponent = 0.5;
};

/// The measure nu defining P(d_t) = int_0^1 d^alpha/dt^alpha dnu(alpha).
///
/// Discrete operators are a finite sum of point masses with exponents
/// strictly decreasing and leading weight 1. Distributed operators carry a
/// density mu on [0, 1], which is expanded once into a Gauss-Legendre point
/// mass list; every evaluation then runs through the same term list.
class FracOperator {
 public:
  enum class Kind { Discrete, Distributed };

  static constexpr int kDefaultQuadratureOrder = 64;

  /// d^alpha/dt^alpha; alpha = 1 gives the heat equation limit.
  static FracOperator single(double alpha) { return multi({{1.0, alpha}}); }

  static FracOperator multi(std::vector<FracTerm> terms) {
    if (terms.empty()) throw InvalidParameter("FracOperator: no terms");
    if (terms.front().weight != 1.0) {
      throw InvalidParameter("FracOperator: leading weight must be 1");
    }
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const auto& t = terms[i];
      const bool unit_ok = terms.size() == 1 && t.exponent == 1.0;
      if (!(t.exponent > 0.0 && (t.exponent < 1.0 || unit_ok))) {
        throw InvalidParameter("FracOperator: exponent " +
                               std::to_string(t.exponent) +
                               " outside (0, 1)");
      }
      if (!(t.weight > 0.0)) {
        throw InvalidParameter("FracOperator: weights must be positive");
      }
      if (i > 0 && !(t.exponent < terms[i - 1].exponent)) {
        throw InvalidParameter("FracOperator: exponents must decrease");
      }
    }
    FracOperator op;
    op.kind_ = Kind::Discrete;
    op.terms_ = std::move(terms);
    return op;
  }

  static FracOperator distributed(std::function<double(double)> mu,
                                  std::string name = "mu",
                                  int quadrature_order = kDefaultQuadratureOrder) {
    if (!mu) throw InvalidParameter("FracOperator: empty weight function");
    if (quadrature_order < 16) {
      throw InvalidParameter("FracOperator: quadrature order must be >= 16");
    }
    if (!(mu(0.0) > 0.0 && mu(1.0) > 0.0)) {
      throw InvalidParameter("FracOperator: need mu(0) > 0 and mu(1) > 0");
    }
    FracOperator op;
    op.kind_ = Kind::Distributed;
    op.mu_ = std::move(mu);
    op.name_ = std::move(name);
    op.order_ = quadrature_order;
    const auto rule = gauss_legendre(quadrature_order, 0.0, 1.0);
    // descending exponents, matching the discrete convention
    for (int k = quadrature_order - 1; k >= 0; --k) {
      const double w = rule.weights[k] * op.mu_(rule.nodes[k]);
      if (w < 0.0) throw InvalidParameter("FracOperator: mu must be >= 0");
      op.terms_.push_back({w, rule.nodes[k]});
    }
    return op;
  }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] bool is_distributed() const { return kind_ == Kind::Distributed; }

  /// Point masses: the operator itself (discrete) or its quadrature (distributed).
  [[nodiscard]] std::span<const FracTerm> terms() const { return terms_; }

  [[nodiscard]] double mu(double alpha) const {
    if (!mu_) throw InvalidParameter("FracOperator: not a distributed operator");
    return mu_(alpha);
  }

  [[nodiscard]] int quadrature_order() const { return order_; }

  /// Human-readable label, e.g. "single(0.5)", "multi(1*0.5+1*0.2)", "dist(exp,64)".
  [[nodiscard]] std::string describe() const {
    std::ostringstream os;
    if (kind_ == Kind::Distributed) {
      os << "dist(" << name_ << "," << order_ << ")";
    } else if (terms_.size() == 1) {
      os << "single(" << terms_[0].exponent << ")";
    } else {
      os << "multi(";
      for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (i) os << "+";
        os << terms_[i].weight << "*" << terms_[i].exponent;
      }
      os << ")";
    }
    return os.str();
  }

 private:
  Kind kind_ = Kind::Discrete;
  std::vector<FracTerm> terms_;
  std::function<double(double)> mu_;
  std::string name_;
  int order_ = 0;
};

/// P(z) = int_0^1 z^alpha dnu(alpha) on the principal branch.
inline Complex char_fn(const FracOperator& op, Complex z) {
  if (z.imag() == 0.0 && z.real() <= 0.0) {
    throw BranchCut("char_fn: z on the branch cut (-inf, 0]");
  }
  const Complex log_z = std::log(z);
  Complex sum = 0.0;
  for (const auto& t : op.terms()) sum += t.weight * std::exp(t.exponent * log_z);
  return sum;
}

/// P(s) for real s > 0.
inline double char_fn_real(const FracOperator& op, double s) {
  if (!(s > 0.0)) throw BranchCut("char_fn_real: s must be positive");
  const double log_s = std::log(s);
  double sum = 0.0;
  for (const auto& t : op.terms()) sum += t.weight * std::exp(t.exponent * log_s);
  return sum;
}

/// Truncated trapezoidal rule on the hyperbola
/// z(xi) = scale (1 + sin(i xi - angle)), xi in R.
///
/// Nodes sit at xi_k = (k + 1/2) step for k = -n/2 .. n/2 - 1, so they come
/// in conjugate pairs. For time t the scale is scale_factor * n / t and the
/// step is step_factor / n.
struct ContourSpec {
  int node_count = 32;
  double angle = 1.1721;
  double scale_factor = 4.4921 / 2.0;
  double step_factor = 1.0818 * 2.0;

  void validate() const {
    if (node_count < 16 || node_count % 2 != 0) {
      throw InvalidParameter("ContourSpec: node count must be even and >= 16");
    }
    if (!(angle > 0.0 && angle < std::numbers::pi / 2)) {
      throw InvalidParameter("ContourSpec: angle must lie in (0, pi/2)");
    }
    if (!(scale_factor > 0.0 && step_factor > 0.0)) {
      throw InvalidParameter("ContourSpec: scale and step must be positive");
    }
  }
};

/// Contour nodes and pre-multiplied weights for one time t:
/// u(t) ~ sum_k Re/Im-free part of weight_k * J(node_k).
struct ContourRule {
  std::vector<Complex> nodes;
  std::vector<Complex> weights;  // h/(2 pi i) * exp(z t) * z'(xi)
};

inline ContourRule contour_rule(const ContourSpec& spec, double t) {
  spec.validate();
  if (!(t > 0.0)) throw DomainError("contour_rule: t must be positive");
  const int n = spec.node_count;
  const double scale = spec.scale_factor * n / t;
  const double step = spec.step_factor / n;
  ContourRule rule;
  rule.nodes.reserve(n);
  rule.weights.reserve(n);
  const Complex i_unit(0.0, 1.0);
  for (int k = -n / 2; k < n / 2; ++k) {
    const double xi = (k + 0.5) * step;
    const Complex arg(-spec.angle, xi);  // i xi - angle
    const Complex z = scale * (1.0 + std::sin(arg));
    const Complex dz = i_unit * scale * std::cos(arg);
    rule.nodes.push_back(z);
    rule.weights.push_back(step / (2.0 * std::numbers::pi) / i_unit *
                           std::exp(z * t) * dz);
  }
  return rule;
}

inline constexpr double kContourSymmetryTolerance = 1e-6;

/// u_lambda(t) for several eigenvalues at one time.
///
/// P(z) is evaluated once per contour node and shared by all lambda. Values
/// are returned raw (not clamped). t <= 0 yields 1.
inline std::vector<double> u_lambda_batch(const FracOperator& op,
                                          std::span<const double> lambdas,
                                          double t,
                                          const ContourSpec& spec = {}) {
  std::vector<double> out(lambdas.size(), 1.0);
  if (t <= 0.0) return out;
  const auto rule = contour_rule(spec, t);
  const std::size_t n = rule.nodes.size();
  std::vector<Complex> p(n);
  std::vector<Complex> pw(n);
  for (std::size_t k = 0; k < n; ++k) {
    p[k] = char_fn(op, rule.nodes[k]);
    pw[k] = rule.weights[k] * p[k] / rule.nodes[k];
  }
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    const double lambda = lambdas[j];
    Complex sum = 0.0;
    double magnitude = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const Complex term = pw[k] / (p[k] + lambda);
      sum += term;
      magnitude += std::abs(term);
    }
    if (!std::isfinite(sum.real()) ||
        std::abs(sum.imag()) > kContourSymmetryTolerance * std::max(1.0, magnitude)) {
      throw ContourFailure("u_lambda: conjugate symmetry residual " +
                           std::to_string(std::abs(sum.imag())) +
                           " at t=" + std::to_string(t) +
                           ", lambda=" + std::to_string(lambda));
    }
    out[j] = sum.real();
  }
  return out;
}

/// Solution of P(d_t) u + lambda u = 0, u(0) = 1, at time t.
inline double u_lambda(const FracOperator& op, double lambda, double t,
                       const ContourSpec& spec = {}) {
  if (!(lambda > 0.0)) throw DomainError("u_lambda: lambda must be positive");
  const double lam[1] = {lambda};
  return u_lambda_batch(op, lam, t, spec)[0];
}

namespace detail {

/// E_alpha(x) by its power series in extended precision.
inline double mittag_leffler_series(double alpha, double x) {
  long double sum = 0.0L;
  long double largest = 0.0L;
  for (int k = 0; k < 400; ++k) {
    const long double log_mag =
        k * std::log(std::abs(static_cast<long double>(x))) -
        std::lgamma(static_cast<long double>(k) * alpha + 1.0L);
    long double term = x == 0.0 ? (k == 0 ? 1.0L : 0.0L) : std::exp(log_mag);
    if (x < 0.0 && (k % 2 == 1)) term = -term;
    if (x == 0.0 && k == 0) term = 1.0L;
    sum += term;
    largest = std::max(largest, std::abs(term));
    if (k > 2 && std::abs(term) < 1e-20L * std::max(std::abs(sum), 1e-300L) &&
        std::abs(term) < 1e-20L * largest) {
      break;
    }
    if (x == 0.0) break;
  }
  return static_cast<double>(sum);
}

/// E_alpha(-y), y > 0, 0 < alpha < 1, from the spectral representation
///   E_alpha(-y) = sin(a pi)/(a pi) int_0^inf exp(-y^{1/a} s^{1/a})
///                 / (s^2 + 2 s cos(a pi) + 1) ds.
inline double mittag_leffler_integral(double alpha, double y) {
  const double theta = alpha * std::numbers::pi;
  const double c = std::cos(theta);
  const double big_t = std::pow(y, 1.0 / alpha);
  // s = v / y concentrates the exponential factor near v = O(1)
  auto f = [&](double v) {
    const double s = v / y;
    const double e = std::exp(-big_t * std::pow(s, 1.0 / alpha));
    return e / (y * (s * s + 2.0 * s * c + 1.0));
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  const double value = integrator.integrate(f, 1e-15);
  return std::sin(theta) / theta * value;
}

}  // namespace detail

/// E_alpha(x) for alpha in (0, 1] and x <= 0.
///
/// Power series (extended precision) while |x|^{1/alpha} <= 15; beyond that
/// the real-line spectral integral, which is free of cancellation.
inline double mittag_leffler(double alpha, double x) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw DomainError("mittag_leffler: alpha must lie in (0, 1]");
  }
  if (!(x <= 0.0)) throw DomainError("mittag_leffler: x must be <= 0");
  if (x == 0.0) return 1.0;
  if (alpha == 1.0) return std::exp(x);
  if (std::pow(-x, 1.0 / alpha) <= 15.0) {
    return detail::mittag_leffler_series(alpha, x);
  }
  return detail::mittag_leffler_integral(alpha, -x);
}

/// Small-time scale: u_lambda(t) = 1 - lambda beta0(t) (1 + o(1)) as t -> 0.
///
/// Distributed case: 1/P(s) ~ log(s)/(mu(1) s), so beta0(t) = t log(1/t)/mu(1),
/// the same form as the first-step scale.
inline double beta0(const FracOperator& op, double t) {
  if (!(t > 0.0)) throw DomainError("beta0: t must be positive");
  if (op.is_distributed()) {
    if (!(t < 1.0)) throw DomainError("beta0: distributed case needs t < 1");
    return t * std::log(1.0 / t) / op.mu(1.0);
  }
  const double a = op.terms().front().exponent;
  return std::pow(t, a) / std::tgamma(1.0 + a);
}

/// Large-time scale: u_lambda(t) = beta_inf(t) / lambda (1 + o(1)) as t -> inf.
inline double beta_inf(const FracOperator& op, double t) {
  if (!(t > 0.0)) throw DomainError("beta_inf: t must be positive");
  if (op.is_distributed()) {
    if (!(t > 1.0)) throw DomainError("beta_inf: distributed case needs t > 1");
    return op.mu(0.0) / std::log(t);
  }
  const auto& last = op.terms().back();
  if (last.exponent >= 1.0) {
    throw DomainError("beta_inf: undefined for the heat equation limit");
  }
  return last.weight * std::pow(t, -last.exponent) / std::tgamma(1.0 - last.exponent);
}

/// First-step scale: 1/omega_0 = beta0_tilde(tau)(1 + o(1)) as tau -> 0.
inline double beta0_step(const FracOperator& op, double tau) {
  if (!(tau > 0.0)) throw DomainError("beta0_step: tau must be positive");
  if (op.is_distributed()) {
    if (!(tau < 1.0)) throw DomainError("beta0_step: distributed case needs tau < 1");
    return tau * std::log(1.0 / tau) / op.mu(1.0);
  }
  return std::pow(tau, op.terms().front().exponent);
}

/// Backward-Euler convolution quadrature weights omega_0..omega_n, the
/// coefficients of P((1 - xi)/tau) = sum_j omega_j xi^j.
///
/// Per term, (-1)^j binom(alpha, j) follows g_j = g_{j-1} (j - 1 - alpha)/j.
inline std::vector<double> cq_weights(const FracOperator& op, double tau, int n) {
  if (!(tau > 0.0)) throw DomainError("cq_weights: tau must be positive");
  if (n < 0) throw DomainError("cq_weights: n must be >= 0");
  std::vector<double> omega(static_cast<std::size_t>(n) + 1, 0.0);
  for (const auto& t : op.terms()) {
    double g = t.weight * std::pow(tau, -t.exponent);
    omega[0] += g;
    for (int j = 1; j <= n; ++j) {
      g *= (j - 1 - t.exponent) / j;
      omega[j] += g;
    }
  }
  return omega;
}

/// r_{n,tau}(lambda) for all n in [0, steps] from precomputed weights:
/// sum_{j<=n} omega_{n-j} u^j + lambda u^n = sum_{j<=n} omega_j, u^0 = 1.
inline std::vector<double> r_scalar_history(std::span<const double> omega,
                                            double lambda, int steps) {
  if (steps < 0 || (steps > 0 && omega.size() < static_cast<std::size_t>(steps) + 1)) {
    throw DomainError("r_scalar: need omega_0..omega_n");
  }
  std::vector<double> u(static_cast<std::size_t>(steps) + 1);
  u[0] = 1.0;
  double partial = omega.empty() ? 0.0 : omega[0];  // sum_{j<n} omega_j
  for (int n = 1; n <= steps; ++n) {
    double rhs = partial;
    for (int j = 1; j < n; ++j) rhs -= omega[n - j] * u[j];
    u[n] = rhs / (omega[0] + lambda);
    partial += omega[n];
  }
  return u;
}

/// Fully discrete scalar solution u^n = r_{n,tau}(lambda).
inline double r_scalar(const FracOperator& op, double lambda, double tau, int n) {
  if (!(lambda > 0.0)) throw DomainError("r_scalar: lambda must be positive");
  if (n < 0) throw DomainError("r_scalar: n must be >= 0");
  if (n == 0) return 1.0;
  const auto omega = cq_weights(op, tau, n);
  return r_scalar_history(omega, lambda, n).back();
}

/// Generalized inverse of the increasing map tau -> P(1/tau): the step
/// whose leading CQ weight equals omega0.
inline double tau_for_omega0(const FracOperator& op, double omega0) {
  if (!(omega0 > 0.0)) throw DomainError("tau_for_omega0: omega0 must be positive");
  const auto& terms = op.terms();
  if (!op.is_distributed() && terms.size() == 1) {
    return std::pow(omega0 / terms[0].weight, -1.0 / terms[0].exponent);
  }
  // P(1/tau) is decreasing in tau; bisect on log tau
  double lo = -200.0, hi = 200.0;
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (char_fn_real(op, std::exp(-mid)) > omega0) lo = mid; else hi = mid;
    if (hi - lo < 1e-15) break;
  }
  return std::exp(0.5 * (lo + hi));
}

}  // namespace fracpos

#endif  // FRACPOS_KERNEL_HPP
