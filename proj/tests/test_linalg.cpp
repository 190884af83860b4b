#include <random>

#include <gtest/gtest.h>

#include "fracpos/linalg.hpp"

using namespace fracpos;

namespace {

DenseMatrix random_spd(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DenseMatrix b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = u(rng);
  return b.transpose() * b + DenseMatrix::Identity(n, n);
}

DenseMatrix mat2(double a, double b, double c, double d) {
  DenseMatrix m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST(Cholesky, Identity) {
  const DenseMatrix l = cholesky(DenseMatrix::Identity(3, 3));
  EXPECT_TRUE(l.isApprox(DenseMatrix::Identity(3, 3)));
}

TEST(Cholesky, HandElimination) {
  const DenseMatrix l = cholesky(mat2(4, 2, 2, 5));
  EXPECT_NEAR(l(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(l(1, 0), 1.0, 1e-15);
  EXPECT_NEAR(l(1, 1), 2.0, 1e-15);
  EXPECT_EQ(l(0, 1), 0.0);
}

TEST(Cholesky, IndefiniteThrows) {
  EXPECT_THROW(cholesky(mat2(1, 2, 2, 1)), NotPositiveDefinite);
}

TEST(Cholesky, NonSymmetricRejected) {
  EXPECT_THROW(cholesky(mat2(1, 0.5, 0, 1)), Error);
}

TEST(Cholesky, RoundTripRandomSpd) {
  for (int n = 2; n <= 50; n += 6) {
    const DenseMatrix a = random_spd(n, 17u + n);
    const DenseMatrix l = cholesky(a);
    EXPECT_LE((l * l.transpose() - a).norm(), 1e-10 * a.norm()) << "n=" << n;
  }
}

TEST(SymEigen, DiagonalInput) {
  DenseMatrix a = DenseMatrix::Zero(3, 3);
  a.diagonal() << 3, 1, 2;
  const auto r = sym_eigen(a);
  EXPECT_NEAR(r.eigenvalues(0), 1.0, 1e-14);
  EXPECT_NEAR(r.eigenvalues(1), 2.0, 1e-14);
  EXPECT_NEAR(r.eigenvalues(2), 3.0, 1e-14);
  EXPECT_NEAR(std::abs(r.vectors(1, 0)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(r.vectors(2, 1)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(r.vectors(0, 2)), 1.0, 1e-14);
}

TEST(SymEigen, TwoByTwoClosedForm) {
  const auto r = sym_eigen(mat2(2, 1, 1, 2));
  EXPECT_NEAR(r.eigenvalues(0), 1.0, 1e-14);
  EXPECT_NEAR(r.eigenvalues(1), 3.0, 1e-14);
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(r.vectors(0, 0)), s, 1e-14);
  EXPECT_NEAR(r.vectors(0, 0), -r.vectors(1, 0), 1e-14);
  EXPECT_NEAR(r.vectors(0, 1), r.vectors(1, 1), 1e-14);
}

TEST(SymEigen, IdentityAndOrthogonality) {
  const auto r = sym_eigen(DenseMatrix::Identity(5, 5));
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(r.eigenvalues(i), 1.0, 1e-14);
  const DenseMatrix a = random_spd(20, 3);
  const auto q = sym_eigen(a);
  EXPECT_LE((a * q.vectors - q.vectors * q.eigenvalues.asDiagonal()).norm(),
            1e-10 * a.norm());
  EXPECT_LE((q.vectors.transpose() * q.vectors - DenseMatrix::Identity(20, 20)).norm(),
            1e-10);
  for (int i = 1; i < 20; ++i) EXPECT_LE(q.eigenvalues(i - 1), q.eigenvalues(i));
}

TEST(GenSymEigen, DecoupledDiagonal) {
  DenseMatrix s = DenseMatrix::Zero(2, 2), m = DenseMatrix::Zero(2, 2);
  s.diagonal() << 2, 8;
  m.diagonal() << 1, 2;
  const auto e = gen_sym_eigen(s, m);
  EXPECT_NEAR(e.eigenvalues(0), 2.0, 1e-14);
  EXPECT_NEAR(e.eigenvalues(1), 4.0, 1e-14);
}

TEST(GenSymEigen, OneByOne) {
  const auto e = gen_sym_eigen(DenseMatrix::Constant(1, 1, 4.0),
                               DenseMatrix::Constant(1, 1, 0.25));
  EXPECT_NEAR(e.eigenvalues(0), 16.0, 1e-13);
}

TEST(GenSymEigen, IdentityPair) {
  const auto e = gen_sym_eigen(DenseMatrix::Identity(4, 4), DenseMatrix::Identity(4, 4));
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(e.eigenvalues(i), 1.0, 1e-14);
  EXPECT_LE((e.back.transpose() * e.back - DenseMatrix::Identity(4, 4)).norm(), 1e-12);
}

TEST(GenSymEigen, TransformsAndResiduals) {
  const int n = 30;
  const DenseMatrix s = random_spd(n, 5), m = random_spd(n, 6);
  const auto e = gen_sym_eigen(s, m);
  ASSERT_EQ(e.size(), n);
  EXPECT_LE((e.back * e.forward - DenseMatrix::Identity(n, n)).cwiseAbs().maxCoeff(),
            1e-10 * n);
  const DenseMatrix h = m.llt().solve(s);
  EXPECT_LE((e.apply(e.eigenvalues) - h).norm(), 1e-9 * h.norm());
  for (int i = 0; i < n; ++i) {
    EXPECT_GT(e.eigenvalues(i), 0.0);
    const Vector phi = e.back.col(i);
    const double lam = e.eigenvalues(i);
    EXPECT_LE((s * phi - lam * (m * phi)).norm(),
              1e-9 * (s.norm() + lam * m.norm()) * phi.norm());
  }
}

TEST(GenSymEigen, ReducesToStandardWhenMassIsIdentity) {
  const DenseMatrix s = random_spd(12, 9);
  const auto e = gen_sym_eigen(s, DenseMatrix::Identity(12, 12));
  const auto r = sym_eigen(s);
  EXPECT_LE((e.eigenvalues - r.eigenvalues).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(GenSymEigen, IndefiniteMassThrows) {
  EXPECT_THROW(gen_sym_eigen(DenseMatrix::Identity(2, 2), mat2(1, 2, 2, 1)),
               NotPositiveDefinite);
}

TEST(Inverse, Examples) {
  EXPECT_TRUE(inverse(DenseMatrix::Identity(4, 4)).isApprox(DenseMatrix::Identity(4, 4)));
  const DenseMatrix d = inverse(mat2(2, 0, 0, 4));
  EXPECT_NEAR(d(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(d(1, 1), 0.25, 1e-15);
  EXPECT_EQ(d(0, 1), 0.0);
  const DenseMatrix u = inverse(mat2(1, 1, 0, 1));
  EXPECT_TRUE(u.isApprox(mat2(1, -1, 0, 1)));
  const DenseMatrix a = random_spd(25, 11);
  EXPECT_LE((a * inverse(a) - DenseMatrix::Identity(25, 25)).cwiseAbs().maxCoeff(),
            1e-9 * 25);
}

TEST(Inverse, SingularThrows) {
  EXPECT_THROW(inverse(mat2(1, 2, 2, 4)), Singular);
  EXPECT_THROW(inverse(DenseMatrix::Zero(3, 3)), Singular);
}
