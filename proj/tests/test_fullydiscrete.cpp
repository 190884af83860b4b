#include <cmath>

#include <gtest/gtest.h>

#include "fracpos/fullydiscrete.hpp"

using namespace fracpos;

namespace {

const FracOperator kHalf = FracOperator::single(0.5);

std::vector<FracOperator> all_cases() {
  return {FracOperator::single(0.5), FracOperator::multi({{1.0, 0.5}, {1.0, 0.2}}),
          FracOperator::distributed([](double a) { return std::exp(a); }, "exp")};
}

FemSystem scalar_system() { return build_fem_system(uniform_square(2), FemMethod::LM); }

}  // namespace

TEST(StepSolution, ScalarStep) {
  const auto sys = scalar_system();
  const auto st = step_solution(sys, kHalf, 1.0, 1, DenseMatrix::Ones(1, 1));
  ASSERT_EQ(st.steps(), 1);
  EXPECT_NEAR(st.history[1](0, 0), 1.0 / 17.0, 1e-15);
  EXPECT_EQ(st.history[0](0, 0), 1.0);
}

TEST(StepSolution, ZeroDataStaysZero) {
  const auto sys = build_fem_system(uniform_square(5), FemMethod::SG);
  const auto st = step_solution(sys, kHalf, 0.01, 10, DenseMatrix::Zero(16, 1));
  for (const auto& u : st.history) EXPECT_EQ(u.cwiseAbs().maxCoeff(), 0.0);
}

TEST(StepSolution, ResidualAndValidation) {
  const auto sys = build_fem_system(uniform_square(6), FemMethod::FVE);
  const int n = sys.interior_count();
  const auto st = step_solution(sys, kHalf, 0.05, 20, DenseMatrix::Identity(n, n));
  EXPECT_LE(st.max_residual, 1e-10);
  EXPECT_EQ(st.weights.size(), 21u);
  EXPECT_THROW(step_solution(sys, kHalf, 0.0, 2, DenseMatrix::Identity(n, n)), DomainError);
  EXPECT_THROW(step_solution(sys, kHalf, 0.1, 0, DenseMatrix::Identity(n, n)), DomainError);
  EXPECT_THROW(step_solution(sys, kHalf, 0.1, 2, DenseMatrix::Identity(n + 1, n + 1)),
               InvalidParameter);
}

TEST(FirstStep, MatchesResolvent) {
  for (auto m : {FemMethod::SG, FemMethod::LM, FemMethod::FVE}) {
    const auto sys = build_fem_system(uniform_square(6), m);
    const int n = sys.interior_count();
    const double tau = 0.01;
    const double w0 = char_fn_real(kHalf, 1.0 / tau);
    const DenseMatrix h = sys.mass.llt().solve(sys.stiffness);
    const DenseMatrix ref = w0 * (w0 * DenseMatrix::Identity(n, n) + h).inverse();
    EXPECT_LE((first_step_matrix(sys, w0) - ref).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((fd_solution_matrix(sys, kHalf, tau, 1).matrix - ref).cwiseAbs().maxCoeff(),
              1e-12);
    const auto st = step_solution(sys, kHalf, tau, 1, DenseMatrix::Identity(n, n));
    EXPECT_LE((st.history[1] - ref).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_THROW(first_step_matrix(scalar_system(), 0.0), DomainError);
}

TEST(FdSolutionMatrixTest, ScalarAndIdentity) {
  const auto sys = scalar_system();
  EXPECT_NEAR(fd_solution_matrix(sys, kHalf, 1.0, 1).matrix(0, 0), 1.0 / 17.0, 1e-14);
  const auto e0 = fd_solution_matrix(sys, kHalf, 1.0, 0);
  EXPECT_EQ(e0.matrix(0, 0), 1.0);
  EXPECT_EQ(e0.steps, 0);
}

TEST(FdSolutionMatrixTest, PathEquivalence) {
  for (const auto& mesh : {uniform_square(6), nondelaunay_b(3), nondelaunay_e(6, 1e-3)}) {
    for (auto m : {FemMethod::SG, FemMethod::LM, FemMethod::FVE}) {
      const auto sys = build_fem_system(mesh, m);
      const int n = sys.interior_count();
      for (const auto& op : all_cases()) {
        const auto st = step_solution(sys, op, 0.003, 64, DenseMatrix::Identity(n, n));
        for (int k : {1, 7, 64}) {
          const DenseMatrix spectral = fd_solution_matrix(sys, op, 0.003, k).matrix;
          const double scale = std::max(1.0, spectral.cwiseAbs().maxCoeff());
          EXPECT_LE((spectral - st.history[k]).cwiseAbs().maxCoeff(), 1e-9 * scale)
              << to_string(m) << " " << op.describe() << " n=" << k;
        }
      }
    }
  }
}

TEST(FdThreshold, UniformMesh) {
  const auto sg = build_fem_system(uniform_square(10), FemMethod::SG);
  const auto r = fd_positivity_threshold(sg, kHalf);
  ASSERT_TRUE(r.found());
  EXPECT_NEAR(r.value, 2.85e-5, 0.1 * 2.85e-5);
  const auto lm = build_fem_system(uniform_square(10), FemMethod::LM);
  EXPECT_EQ(fd_positivity_threshold(lm, kHalf).status, ThresholdReport::Status::HoldsEverywhere);
}

TEST(FdThreshold, AgreesWithOmegaBisection) {
  const auto sys = build_fem_system(uniform_square(10), FemMethod::FVE);
  const auto bound = first_step_positivity_omega(sys);
  ASSERT_EQ(bound.status, OmegaBound::Status::Bounded);
  for (const auto& op : all_cases()) {
    const auto r = fd_positivity_threshold(sys, op);
    ASSERT_TRUE(r.found());
    EXPECT_NEAR(r.value / tau_for_omega0(op, bound.omega_max), 1.0, 2e-4) << op.describe();
  }
}

TEST(OmegaBoundTest, EquilateralCertified) {
  const auto sys = build_fem_system(equilateral(6), FemMethod::SG);
  const auto b = first_step_positivity_omega(sys);
  EXPECT_GT(b.certified_min_form, 0.0);
  EXPECT_GE(b.printed_max_form, b.certified_min_form);
  ASSERT_EQ(b.status, OmegaBound::Status::Bounded);
  EXPECT_GE(b.omega_max, b.certified_min_form * (1.0 - 1e-7));
  // certified: omega_0 M + S is Stieltjes right at the bound
  EXPECT_TRUE(is_stieltjes(b.certified_min_form * sys.mass + sys.stiffness));
}

TEST(OmegaBoundTest, UniformAndLumped) {
  const auto sg = first_step_positivity_omega(build_fem_system(uniform_square(10), FemMethod::SG));
  EXPECT_EQ(sg.certified_min_form, 0.0);
  EXPECT_EQ(sg.status, OmegaBound::Status::Bounded);
  const auto lm = first_step_positivity_omega(build_fem_system(uniform_square(10), FemMethod::LM));
  EXPECT_EQ(lm.status, OmegaBound::Status::Unbounded);
  const auto e = first_step_positivity_omega(build_fem_system(nondelaunay_e(10, 1e-3), FemMethod::LM));
  EXPECT_EQ(e.status, OmegaBound::Status::Never);
}

TEST(Propagation, FirstStepNonnegativityCarriesOver) {
  const auto sys = build_fem_system(uniform_square(6), FemMethod::SG);
  const int n = sys.interior_count();
  for (const auto& op : all_cases()) {
    const auto r = fd_positivity_threshold(sys, op);
    ASSERT_TRUE(r.found());
    for (double factor : {1.0, 3.0, 100.0}) {
      const double tau = r.value * factor;
      ASSERT_GE(first_step_min_entry(sys, op, tau), -1e-13);
      const auto st = step_solution(sys, op, tau, 200, DenseMatrix::Identity(n, n));
      for (const auto& e : st.history) EXPECT_GE(e.minCoeff(), -1e-10 * n);
    }
  }
}

TEST(Propagation, MonotoneInStep) {
  const auto sys = build_fem_system(nondelaunay_b(5), FemMethod::LM);
  const auto r = fd_positivity_threshold(sys, kHalf);
  ASSERT_TRUE(r.found());
  for (double tau : log_grid(r.value, 1e2, 10)) {
    EXPECT_GE(first_step_min_entry(sys, kHalf, tau), -default_tolerance(sys)) << tau;
  }
  EXPECT_LT(first_step_min_entry(sys, kHalf, 1e-8), 0.0);
}

TEST(FirstStepExpansion, ShrinksAsStepDecreases) {
  const auto sys = build_fem_system(uniform_square(4), FemMethod::SG);
  const int n = sys.interior_count();
  const DenseMatrix h = sys.mass.llt().solve(sys.stiffness);
  for (const auto& op : all_cases()) {
    double prev = std::numeric_limits<double>::infinity();
    for (double tau : {1e-6, 1e-9, 1e-12}) {
      const DenseMatrix e1 = first_step_matrix(sys, char_fn_real(op, 1.0 / tau));
      const double dev = ((DenseMatrix::Identity(n, n) - e1) / beta0_step(op, tau) - h)
                             .cwiseAbs()
                             .maxCoeff();
      EXPECT_LT(dev, prev) << op.describe();
      prev = dev;
    }
    EXPECT_LT(prev, 0.1 * h.cwiseAbs().maxCoeff()) << op.describe();
  }
}

TEST(LogLogSlope, ExactPowerLaw) {
  EXPECT_NEAR(log_log_slope({1, 2, 4, 8}, {3, 12, 48, 192}), 2.0, 1e-12);
  EXPECT_THROW(log_log_slope({1}, {1}), InvalidParameter);
  EXPECT_THROW(log_log_slope({1, 2}, {1, -1}), DomainError);
}

TEST(ScaleLaw, HeatLimitIsQuadratic) {
  const auto r = weight_scale_law([](int m) { return uniform_square(m); }, {6, 8, 12},
                                  FemMethod::SG, FracOperator::single(1.0));
  EXPECT_NEAR(r.slope, 2.0, 0.5);
  EXPECT_EQ(r.points.size(), 3u);
  EXPECT_THROW(weight_scale_law([](int m) { return uniform_square(m); }, {6, 8},
                                FemMethod::SG, kHalf),
               InvalidParameter);
}

TEST(Convergence, FirstOrder) {
  const auto sys = build_fem_system(uniform_square(4), FemMethod::LM);
  std::vector<int> ns;
  for (int n = 16; n <= 1024; n *= 2) ns.push_back(n);
  for (const auto& op : all_cases()) {
    const auto r = convergence_rate(sys, op, 0.1, ns);
    EXPECT_GE(r.rate, 0.85) << op.describe();
    EXPECT_LE(r.rate, 1.3) << op.describe();
    for (std::size_t k = 1; k < r.errors.size(); ++k) EXPECT_LT(r.errors[k], r.errors[k - 1]);
  }
  EXPECT_THROW(convergence_rate(sys, kHalf, 0.1, {4}), InvalidParameter);
  EXPECT_THROW(convergence_rate(sys, kHalf, 0.1, {8, 4}), InvalidParameter);
}

TEST(Convergence, ScalarSystemMatchesRecursion) {
  const auto sys = scalar_system();
  const auto r = convergence_rate(sys, kHalf, 1.0, {16, 32});
  const double u = u_lambda(kHalf, 16.0, 1.0);
  EXPECT_NEAR(r.errors[0], std::abs(u - r_scalar(kHalf, 16.0, 1.0 / 16, 16)), 1e-15);
}

TEST(Contractivity, LumpedUniform) {
  const auto sys = build_fem_system(uniform_square(6), FemMethod::LM);
  for (const auto& op : all_cases()) {
    const auto rep = max_norm_contractivity_check(sys, op, {1e-4, 1e-2, 1.0}, 50);
    EXPECT_TRUE(rep.diagonally_dominant);
    EXPECT_TRUE(rep.implication_holds);
    for (const auto& row : rep.rows) EXPECT_LE(row.max_norm, 1.0 + 1e-10);
  }
  const auto zero = max_norm_contractivity_check(sys, kHalf, {0.1}, 0);
  EXPECT_EQ(zero.rows[0].max_norm, 1.0);
}

TEST(Contractivity, NonDominantExceedsOne) {
  DenseMatrix s(2, 2);
  s << 1.0, 1.5, 1.5, 4.0;  // SPD, first row not dominant
  const auto sys = make_fem_system(s, DenseMatrix::Identity(2, 2));
  const auto rep = max_norm_contractivity_check(sys, kHalf, {1e-6}, 1);
  EXPECT_FALSE(rep.diagonally_dominant);
  EXPECT_GT(rep.rows[0].max_norm, 1.0);
}
