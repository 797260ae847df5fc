#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "igamg/bspline.hpp"

using namespace igamg;

namespace {

// Textbook Cox-de Boor recursion for a single basis function, used as an
// independent oracle for the production evaluation.
double naive_basis(const std::vector<double>& U, int i, int p, double x) {
  if (p == 0) {
    const bool last = (x == U.back()) && U[i] < U[i + 1] && U[i + 1] == U.back();
    return ((U[i] <= x && x < U[i + 1]) || last) ? 1.0 : 0.0;
  }
  double v = 0.0;
  if (U[i + p] > U[i]) v += (x - U[i]) / (U[i + p] - U[i]) * naive_basis(U, i, p - 1, x);
  if (U[i + p + 1] > U[i + 1])
    v += (U[i + p + 1] - x) / (U[i + p + 1] - U[i + 1]) * naive_basis(U, i + 1, p - 1, x);
  return v;
}

double basis_at(const SplineSpace1D& s, int i, double x, int deriv = 0) {
  const BasisValues b = s.eval(x, deriv);
  const int j = i - b.first;
  return (j >= 0 && j <= s.degree()) ? b.values(deriv, j) : 0.0;
}

Eigen::MatrixXd oracle_gram(const SplineSpace1D& s, bool derivative) {
  // Composite 12-point Gauss rule on each element, computed from scratch.
  const int n = s.size();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  const auto& br = s.breakpoints();
  const int nq = 12;
  Eigen::MatrixXd jm = Eigen::MatrixXd::Zero(nq, nq);
  for (int k = 1; k < nq; ++k) jm(k, k - 1) = jm(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jm);
  for (std::size_t e = 0; e + 1 < br.size(); ++e) {
    const double a = br[e], b = br[e + 1];
    for (int q = 0; q < nq; ++q) {
      const double x = a + (b - a) * 0.5 * (es.eigenvalues()[q] + 1.0);
      const double w = (b - a) * es.eigenvectors()(0, q) * es.eigenvectors()(0, q);
      std::vector<double> v(n);
      if (derivative) {
        const double eps = 1e-6;
        for (int i = 0; i < n; ++i)
          v[i] = (naive_basis(s.knots(), i, s.degree(), std::min(x + eps, b)) -
                  naive_basis(s.knots(), i, s.degree(), std::max(x - eps, a))) /
                 (std::min(x + eps, b) - std::max(x - eps, a));
      } else {
        for (int i = 0; i < n; ++i) v[i] = naive_basis(s.knots(), i, s.degree(), x);
      }
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) += w * v[i] * v[j];
    }
  }
  return g;
}

}  // namespace

TEST(SplineSpace, UniformKnotVectors) {
  const auto s0 = SplineSpace1D::uniform(2, 1, 0);
  EXPECT_EQ(s0.knots(), (std::vector<double>{0, 0, 0, 1, 1, 1}));
  EXPECT_EQ(s0.size(), 3);
  const auto s1 = SplineSpace1D::uniform(1, 1, 1);
  EXPECT_EQ(s1.knots(), (std::vector<double>{0, 0, 0.5, 1, 1}));
  EXPECT_EQ(s1.size(), 3);
  EXPECT_EQ(SplineSpace1D::uniform(3, 1, 2).size(), 7);
  EXPECT_DOUBLE_EQ(SplineSpace1D::uniform(3, 3, 2).element_size(), 1.0 / 12.0);
}

TEST(SplineSpace, RejectsInvalidInput) {
  EXPECT_THROW(SplineSpace1D::uniform(0, 1, 0), std::invalid_argument);
  EXPECT_THROW(SplineSpace1D::uniform(2, 0, 0), std::invalid_argument);
  EXPECT_THROW(SplineSpace1D(2, {0.0, 0.7, 0.5, 1.0}), std::invalid_argument);
  const auto s = SplineSpace1D::uniform(2, 1, 1);
  EXPECT_THROW(s.eval(1.5, 0), std::out_of_range);
  EXPECT_THROW(s.eval(-0.1, 0), std::out_of_range);
}

TEST(SplineSpace, FromKnotsRoundTrip) {
  const std::vector<double> kv{0, 0, 0, 0.25, 0.5, 1, 1, 1};
  const auto s = SplineSpace1D::from_knots(kv);
  EXPECT_EQ(s.degree(), 2);
  EXPECT_EQ(s.knots(), kv);
  const std::vector<double> repeated{0, 0, 0, 0.5, 0.5, 1, 1, 1};
  EXPECT_THROW(SplineSpace1D::from_knots(repeated), std::invalid_argument);
}

TEST(SplineSpace, HatFunctionValues) {
  const auto s = SplineSpace1D::uniform(1, 1, 0);
  const auto b = s.eval(0.25, 0);
  EXPECT_EQ(b.first, 0);
  EXPECT_NEAR(b.values(0, 0), 0.75, 1e-15);
  EXPECT_NEAR(b.values(0, 1), 0.25, 1e-15);
}

TEST(SplineSpace, BernsteinDerivativeAtZero) {
  const auto s = SplineSpace1D::uniform(2, 1, 0);
  EXPECT_NEAR(s.eval(0.0, 1).values(1, 0), -2.0, 1e-14);
}

TEST(SplineSpace, MatchesNaiveRecursionAndPartitionOfUnity) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int p = 1; p <= 6; ++p) {
    const auto s = SplineSpace1D::uniform(p, 3, 2);
    for (int k = 0; k < 1000; ++k) {
      const double x = u(rng);
      const auto b = s.eval(x, 0);
      EXPECT_NEAR(b.values.row(0).sum(), 1.0, 1e-12);
      if (k % 50 == 0)
        for (int j = 0; j <= p; ++j)
          EXPECT_NEAR(b.values(0, j), naive_basis(s.knots(), b.first + j, p, x), 1e-12);
    }
  }
}

TEST(SplineSpace, DerivativesMatchFiniteDifferences) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int p = 1; p <= 5; ++p) {
    const auto s = SplineSpace1D::uniform(p, 1, 2);
    for (int k = 0; k < 50; ++k) {
      const double x = u(rng);
      const double h = 1e-6;
      for (int i = 0; i < s.size(); ++i) {
        const double fd = (basis_at(s, i, x + h) - basis_at(s, i, x - h)) / (2 * h);
        const double an = basis_at(s, i, x, 1);
        EXPECT_NEAR(an, fd, 1e-6 * std::max(1.0, std::abs(an)));
      }
    }
  }
}

TEST(SplineSpace, GrevillePoints) {
  auto g = SplineSpace1D::uniform(2, 1, 0).greville();
  EXPECT_EQ(g, (std::vector<double>{0, 0.5, 1}));
  g = SplineSpace1D::uniform(1, 1, 1).greville();
  EXPECT_EQ(g, (std::vector<double>{0, 0.5, 1}));
  g = SplineSpace1D::uniform(3, 1, 0).greville();
  ASSERT_EQ(g.size(), 4u);
  EXPECT_NEAR(g[1], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(g[2], 2.0 / 3.0, 1e-15);
  for (int p = 1; p <= 6; ++p) {
    g = SplineSpace1D::uniform(p, 3, 2).greville();
    EXPECT_EQ(g.front(), 0.0);
    EXPECT_EQ(g.back(), 1.0);
    for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LE(g[i - 1], g[i]);
  }
}

TEST(UnivariateMatrices, LinearSingleElement) {
  const auto s = SplineSpace1D::uniform(1, 1, 0);
  const auto m = univariate_mass(s);
  const auto k = univariate_stiffness(s);
  Eigen::Matrix2d me, ke;
  me << 1.0 / 3, 1.0 / 6, 1.0 / 6, 1.0 / 3;
  ke << 1, -1, -1, 1;
  EXPECT_LT((m - me).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((k - ke).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(UnivariateMatrices, BernsteinMass) {
  const auto m = univariate_mass(SplineSpace1D::uniform(2, 1, 0));
  Eigen::Matrix3d me;
  me << 1.0 / 5, 1.0 / 10, 1.0 / 30, 1.0 / 10, 2.0 / 15, 1.0 / 10, 1.0 / 30, 1.0 / 10, 1.0 / 5;
  EXPECT_LT((m - me).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(UnivariateMatrices, AgreeWithQuadratureOracle) {
  for (int p = 1; p <= 5; ++p) {
    const auto s = SplineSpace1D::uniform(p, 1, 2);
    const auto m = univariate_mass(s);
    EXPECT_LT((m - oracle_gram(s, false)).cwiseAbs().maxCoeff(), 1e-13) << "p=" << p;
    const auto k = univariate_stiffness(s);
    EXPECT_LT((k - oracle_gram(s, true)).cwiseAbs().maxCoeff(), 1e-4 * k.cwiseAbs().maxCoeff());
    EXPECT_LT((k * Eigen::VectorXd::Ones(s.size())).cwiseAbs().maxCoeff(), 1e-11);
    EXPECT_LT((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff(), 0.0);
    for (int i = 0; i < s.size(); ++i)
      for (int j = 0; j < s.size(); ++j)
        if (std::abs(i - j) > p) {
          EXPECT_EQ(m(i, j), 0.0);
          EXPECT_EQ(k(i, j), 0.0);
        }
  }
}

TEST(TwoScale, LinearExample) {
  const auto r = two_scale_refine(SplineSpace1D::uniform(1, 1, 0));
  EXPECT_EQ(r.fine.knots(), (std::vector<double>{0, 0, 0.5, 1, 1}));
  Eigen::MatrixXd pe(3, 2);
  pe << 1, 0, 0.5, 0.5, 0, 1;
  EXPECT_LT((r.prolongation - pe).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(TwoScale, QuadraticFirstColumn) {
  const auto r = two_scale_refine(SplineSpace1D::uniform(2, 1, 0));
  ASSERT_EQ(r.prolongation.rows(), 4);
  const Eigen::Vector4d col(1, 0.5, 0, 0);
  EXPECT_LT((r.prolongation.col(0) - col).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(TwoScale, ReproducesCoarseFunctionsAndNesting) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int p = 1; p <= 6; ++p) {
    const auto coarse = SplineSpace1D::uniform(p, 2, 1);
    const auto r = two_scale_refine(coarse);
    EXPECT_TRUE(r.fine == SplineSpace1D::uniform(p, 2, 2));
    const Eigen::VectorXd ones = r.prolongation * Eigen::VectorXd::Ones(coarse.size());
    EXPECT_LT((ones.array() - 1.0).abs().maxCoeff(), 1e-13);
    // Collocation oracle: coarse function j equals sum_i P(i,j) fine_i pointwise.
    for (int k = 0; k < 40; ++k) {
      const double x = u(rng);
      for (int j = 0; j < coarse.size(); ++j) {
        double v = 0.0;
        for (int i = 0; i < r.fine.size(); ++i)
          v += r.prolongation(i, j) * naive_basis(r.fine.knots(), i, p, x);
        EXPECT_NEAR(v, naive_basis(coarse.knots(), j, p, x), 1e-12);
      }
    }
    const auto& pm = r.prolongation;
    const Eigen::MatrixXd mg = pm.transpose() * univariate_mass(r.fine) * pm;
    const Eigen::MatrixXd kg = pm.transpose() * univariate_stiffness(r.fine) * pm;
    EXPECT_LT((mg - univariate_mass(coarse)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((kg - univariate_stiffness(coarse)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(ReducedSplit, ConstraintCounts) {
  EXPECT_EQ(reduced_constraint_count(1), 0);
  EXPECT_EQ(reduced_constraint_count(2), 0);
  EXPECT_EQ(reduced_constraint_count(3), 2);
  EXPECT_EQ(reduced_constraint_count(4), 2);
  EXPECT_EQ(reduced_constraint_count(5), 4);
  EXPECT_EQ(reduced_split(SplineSpace1D::uniform(1, 1, 3)).n_comp, 0);
  EXPECT_EQ(reduced_split(SplineSpace1D::uniform(2, 1, 3)).n_comp, 0);
  EXPECT_EQ(reduced_split(SplineSpace1D::uniform(5, 1, 3)).n_comp, 4);
}

TEST(ReducedSplit, SingleElementHasOnlyComplement) {
  const auto rs = reduced_split(SplineSpace1D::uniform(5, 1, 0));
  EXPECT_EQ(rs.n_large, 0);
  EXPECT_EQ(rs.n_comp, 4);
}

TEST(ReducedSplit, LargeSubspaceSatisfiesConstraintsAndComplementIsOrthogonal) {
  for (int p = 1; p <= 8; ++p) {
    const auto s = SplineSpace1D::uniform(p, 1, 4);
    const auto rs = reduced_split(s);
    const int n_int = s.size() - 2;
    EXPECT_EQ(rs.n_large + rs.n_comp, n_int);
    EXPECT_EQ(rs.n_comp, reduced_constraint_count(p));
    const Eigen::MatrixXd mi = interior_block(univariate_mass(s));
    const Eigen::MatrixXd& t = rs.transform;
    const double h = s.element_size();
    // Even derivatives at both endpoints of every large-subspace function vanish.
    for (int c = 0; c < rs.n_large; ++c)
      for (double x : {0.0, 1.0}) {
        const auto b = s.eval(x, p);
        for (int k = 2; k <= 2 * ((p - 1) / 2); k += 2) {
          double v = 0.0;
          for (int j = 0; j <= p; ++j) {
            const int idx = b.first + j - 1;
            if (idx >= 0 && idx < n_int) v += t(idx, c) * b.values(k, j);
          }
          EXPECT_NEAR(v * std::pow(h, k), 0.0, 1e-9) << "p=" << p << " k=" << k;
        }
      }
    if (rs.n_comp > 0 && rs.n_large > 0) {
      const Eigen::MatrixXd cross = t.leftCols(rs.n_large).transpose() * mi * t.rightCols(rs.n_comp);
      EXPECT_LT(cross.cwiseAbs().maxCoeff(), 1e-12) << "p=" << p;
    }
    EXPECT_EQ(Eigen::FullPivLU<Eigen::MatrixXd>(t).rank(), n_int);
  }
}

TEST(ReducedSplit, RobustInverseInequalityOnLargeSubspace) {
  // C_p = h^2 lambda_max(K, M) restricted to the large subspace, for e = 16 elements.
  std::vector<double> c;
  for (int p = 1; p <= 6; ++p) {
    const auto s = SplineSpace1D::uniform(p, 16, 0);
    const auto rs = reduced_split(s);
    const Eigen::MatrixXd z = rs.transform.leftCols(rs.n_large);
    const Eigen::MatrixXd k = z.transpose() * interior_block(univariate_stiffness(s)) * z;
    const Eigen::MatrixXd m = z.transpose() * interior_block(univariate_mass(s)) * z;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(k, m);
    const double h = s.element_size();
    c.push_back(es.eigenvalues().maxCoeff() * h * h);
  }
  const double lo = *std::min_element(c.begin(), c.end());
  const double hi = *std::max_element(c.begin(), c.end());
  EXPECT_LT(hi / lo, 2.0);
}
