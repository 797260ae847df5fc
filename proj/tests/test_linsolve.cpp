#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "igamg/linsolve.hpp"

using namespace igamg;

namespace {

SparseMatrix random_spd(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = nd(rng);
  const Eigen::MatrixXd a = g.transpose() * g + Eigen::MatrixXd::Identity(n, n);
  return a.sparseView();
}

SparseMatrix laplace_1d(int n) {
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, 2.0);
    if (i > 0) t.emplace_back(i, i - 1, -1.0);
    if (i + 1 < n) t.emplace_back(i, i + 1, -1.0);
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

}  // namespace

TEST(Factorization, IdentityAndTwoByTwo) {
  SparseMatrix id(3, 3);
  id.setIdentity();
  const Vector b(Eigen::Vector3d(1, 2, 3));
  EXPECT_LT((Factorization(id).solve(b) - b).norm(), 1e-15);
  const Vector x = Factorization(laplace_1d(2)).solve(Vector::Ones(2));
  EXPECT_NEAR(x[0], 1.0, 1e-14);
  EXPECT_NEAR(x[1], 1.0, 1e-14);
}

TEST(Factorization, RandomSpdResidual) {
  const SparseMatrix a = random_spd(50, 42);
  const Vector b = Vector::LinSpaced(50, -1, 1);
  for (auto kind : {Factorization::Kind::spd, Factorization::Kind::general}) {
    const Vector x = Factorization(a, kind).solve(b);
    EXPECT_LE((a * x - b).norm() / b.norm(), 1e-10);
  }
}

TEST(Factorization, RejectsIndefiniteAndSingular) {
  SparseMatrix a = laplace_1d(3);
  a.coeffRef(0, 0) = -5.0;
  EXPECT_THROW(Factorization(a, Factorization::Kind::spd), std::runtime_error);
  SparseMatrix z(2, 2);
  z.insert(0, 0) = 1.0;
  z.insert(0, 1) = 1.0;
  z.insert(1, 0) = 1.0;
  z.insert(1, 1) = 1.0;
  EXPECT_THROW(Factorization(z, Factorization::Kind::general), std::runtime_error);
}

TEST(ConjugateGradient, TrivialCases) {
  const SparseMatrix a = laplace_1d(10);
  auto r0 = cg(a, Vector::Zero(10));
  EXPECT_EQ(r0.iterations, 0);
  EXPECT_TRUE(r0.converged);
  EXPECT_EQ(r0.x.norm(), 0.0);

  SparseMatrix id(5, 5);
  id.setIdentity();
  auto r1 = cg(id, Vector::Ones(5));
  EXPECT_EQ(r1.iterations, 1);

  const Factorization f(a);
  auto apply = [&](const Vector& x, Vector& y) { y = a * x; };
  auto exact = [&](const Vector& x, Vector& y) { y = f.solve(x); };
  auto r2 = cg(apply, Vector::LinSpaced(10, 1, 2), exact);
  EXPECT_LE(r2.iterations, 2);
  EXPECT_TRUE(r2.converged);
}

TEST(ConjugateGradient, ConvergesWithinNIterations) {
  for (int n : {20, 60, 100}) {
    const SparseMatrix a = laplace_1d(n);
    const Vector b = Vector::Ones(n);
    const auto r = cg(a, b, 1e-12, 10 * n);
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.iterations, n);
    EXPECT_LE((a * r.x - b).norm() / b.norm(), 1e-12);
    EXPECT_EQ(static_cast<int>(r.residuals.size()), r.iterations + 1);
  }
}

TEST(ConjugateGradient, ReportsNonConvergence) {
  const auto r = cg(laplace_1d(200), Vector::Ones(200), 1e-12, 5);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 5);
}

TEST(DenseGeneralizedEig, Examples) {
  const Eigen::MatrixXd b = Eigen::MatrixXd(random_spd(6, 1));
  auto ev = dense_generalized_eig(b, b);
  EXPECT_LT((ev.array() - 1.0).abs().maxCoeff(), 1e-10);
  ev = dense_generalized_eig(2.0 * b, b);
  EXPECT_LT((ev.array() - 2.0).abs().maxCoeff(), 1e-10);
  ev = dense_generalized_eig(Eigen::Vector2d(2, 1).asDiagonal().toDenseMatrix(),
                             Eigen::MatrixXd::Identity(2, 2));
  EXPECT_NEAR(ev[0], 1.0, 1e-14);
  EXPECT_NEAR(ev[1], 2.0, 1e-14);
  EXPECT_THROW(dense_generalized_eig(b, -b), std::invalid_argument);
  EXPECT_THROW(dense_generalized_eig(b, Eigen::MatrixXd::Identity(3, 3)), std::invalid_argument);
}

TEST(SparseUtilities, CoordinateRoundTripAndSubmatrix) {
  const SparseMatrix a = laplace_1d(5);
  std::stringstream ss;
  write_coordinate(ss, a);
  const SparseMatrix b = read_coordinate(ss);
  EXPECT_EQ(max_abs_difference(a, b), 0.0);
  const std::vector<int> idx{4, 0, 1};
  const SparseMatrix s = principal_submatrix(a, idx);
  EXPECT_EQ(s.rows(), 3);
  EXPECT_EQ(s.coeff(0, 0), 2.0);
  EXPECT_EQ(s.coeff(1, 2), -1.0);
  EXPECT_EQ(s.coeff(0, 1), 0.0);
}
