#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>
#include <unsupported/Eigen/KroneckerProduct>

#include "igamg/assembly.hpp"

using namespace igamg;

namespace {

constexpr double kPi = std::numbers::pi;

MultiPatchDomain single_box(std::vector<double> origin, std::vector<double> extent) {
  return MultiPatchDomain({GeometryMap::box(origin, extent)}, {});
}

Eigen::MatrixXd dense(const SparseMatrix& a) { return Eigen::MatrixXd(a); }

double min_eig(const SparseMatrix& a) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dense(a)).eigenvalues().minCoeff();
}

double max_asym(const SparseMatrix& a) {
  const Eigen::MatrixXd d = dense(a);
  return (d - d.transpose()).cwiseAbs().maxCoeff();
}

// Embeds a conforming full vector into the dG numbering of a matched hierarchy.
Vector embed_conforming(const DiscreteHierarchy& conf, const DiscreteHierarchy& dg, int l, const Vector& u) {
  const LevelSpaces& lc = conf.level(l);
  const LevelSpaces& ld = dg.level(l);
  Vector out(ld.num_full);
  for (int k = 0; k < dg.domain().num_patches(); ++k)
    for (int i = 0; i < ld.patch_spaces[k].size(); ++i) out[ld.full_index(k, i)] = u[lc.full_index(k, i)];
  return out;
}

Vector free_part(const LevelSpaces& lv, const Vector& full) {
  Vector f(lv.num_free());
  for (int i = 0; i < lv.num_free(); ++i) f[i] = full[lv.free_to_full[i]];
  return f;
}

}  // namespace

TEST(Bulk, UnitSquareLinearEntries) {
  DiscreteHierarchy h(unit_square(), 1, 0, Coupling::conforming, SpaceRule::matching);
  const BulkMatrices b = assemble_bulk_full(h, 0);
  EXPECT_NEAR(b.stiffness.coeff(0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(b.mass.coeff(0, 0), 1.0 / 9.0, 1e-15);
  EXPECT_LT((b.stiffness * Vector::Ones(4)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Bulk, BoxMatchesKroneckerOracle) {
  for (int p = 1; p <= 4; ++p) {
    DiscreteHierarchy h(single_box({0.5, -1.0}, {2.0, 0.5}), p, 2, Coupling::conforming, SpaceRule::matching);
    const auto s = SplineSpace1D::uniform(p, 1, 2);
    const Eigen::MatrixXd m1 = univariate_mass(s), k1 = univariate_stiffness(s);
    // x = 0.5 + 2 xi0, y = -1 + 0.5 xi1.
    const Eigen::MatrixXd ke = Eigen::kroneckerProduct(m1, k1).eval() * (0.5 / 2.0) +
                               Eigen::kroneckerProduct(k1, m1).eval() * (2.0 / 0.5);
    const Eigen::MatrixXd me = Eigen::kroneckerProduct(m1, m1).eval() * 1.0;
    const BulkMatrices b = assemble_bulk_full(h, 2);
    EXPECT_LT((dense(b.stiffness) - ke).cwiseAbs().maxCoeff(), 1e-12) << p;
    EXPECT_LT((dense(b.mass) - me).cwiseAbs().maxCoeff(), 1e-14) << p;
  }
}

TEST(Bulk, ThreeDimensionalBoxMatchesKroneckerOracle) {
  DiscreteHierarchy h(single_box({0, 0, 0}, {1, 1, 2}), 2, 1, Coupling::conforming, SpaceRule::matching);
  const auto s = SplineSpace1D::uniform(2, 1, 1);
  const Eigen::MatrixXd m = univariate_mass(s), k = univariate_stiffness(s);
  using Eigen::kroneckerProduct;
  const Eigen::MatrixXd ke = 2.0 * kroneckerProduct(m, kroneckerProduct(m, k).eval()).eval() +
                             2.0 * kroneckerProduct(m, kroneckerProduct(k, m).eval()).eval() +
                             0.5 * kroneckerProduct(k, kroneckerProduct(m, m).eval()).eval();
  const BulkMatrices b = assemble_bulk_full(h, 1);
  EXPECT_LT((dense(b.stiffness) - ke).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Bulk, DistortedPatchIntegralIdentities) {
  // The geometry space equals the level-0 cubic space, so the control
  // points are the coefficients of the coordinate functions.
  const auto dom = distorted_grid(1, 1, 0.2, 5);
  DiscreteHierarchy h(dom, 3, 0, Coupling::conforming, SpaceRule::matching);
  const BulkMatrices b = assemble_bulk_full(h, 0);
  const Vector ones = Vector::Ones(b.mass.rows());
  const double area = ones.dot(b.mass * ones);
  for (int c = 0; c < 2; ++c) {
    const Vector x = dom.patch(0).control_points().col(c);
    EXPECT_NEAR(x.dot(b.stiffness * x), area, 1e-6);
  }
  EXPECT_LT((b.stiffness * ones).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(max_asym(b.stiffness), 1e-12);
}

TEST(Interface, MatchedEdgeJumpBlockIsEdgeMass) {
  DiscreteHierarchy h(square_grid(1, 2), 1, 0, Coupling::dg, SpaceRule::matching);
  const InterfaceMatrices im = assemble_interface_full(h, 0, 5.0);
  const LevelSpaces& lv = h.level(0);
  // Left patch trace functions on x = 1 are local (1,0), (1,1); right patch (0,0), (0,1).
  const std::array<int, 2> left{lv.full_index(0, 1), lv.full_index(0, 3)};
  const std::array<int, 2> right{lv.full_index(1, 0), lv.full_index(1, 2)};
  const double m[2][2] = {{1.0 / 3, 1.0 / 6}, {1.0 / 6, 1.0 / 3}};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      EXPECT_NEAR(im.jump.coeff(left[i], left[j]), m[i][j], 1e-15);
      EXPECT_NEAR(im.jump.coeff(right[i], right[j]), m[i][j], 1e-15);
      EXPECT_NEAR(im.jump.coeff(left[i], right[j]), -m[i][j], 1e-15);
    }
  EXPECT_NEAR(penalty_coefficient(h, h.domain().interfaces()[0], 5.0), 5.0, 1e-15);
}

TEST(Interface, ConstantsAndContinuousFunctionsHaveNoJump) {
  for (const auto& dom : {l_shape(), distorted_grid(2, 2, 0.2, 1), fichera()}) {
    const int p = dom.dim() == 2 ? 3 : 2;
    DiscreteHierarchy dg(dom, p, 1, Coupling::dg, SpaceRule::matching);
    DiscreteHierarchy conf(dom, p, 1, Coupling::conforming, SpaceRule::matching);
    const InterfaceMatrices im = assemble_interface_full(dg, 1, 5.0);
    const Vector ones = Vector::Ones(dg.level(1).num_full);
    EXPECT_LT((im.consistency * ones).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((im.consistency.transpose() * ones).cwiseAbs().maxCoeff(), 1e-10);
    std::mt19937 rng(3);
    std::normal_distribution<double> nd;
    Vector uc(conf.level(1).num_full);
    for (auto& v : uc) v = nd(rng);
    for (int i = 0; i < conf.level(1).num_full; ++i)
      if (conf.level(1).full_to_free[i] < 0) uc[i] = 0.0;
    const Vector u = embed_conforming(conf, dg, 1, uc);
    EXPECT_LT((im.jump * u).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(std::abs(u.dot(im.penalized_jump * u)), 1e-9);
    EXPECT_LT((im.consistency * u).cwiseAbs().maxCoeff(), 1e-11);

    // Conforming-subspace consistency on the free DOFs.
    const AssembledLevel al = assemble_sipg(dg, 1, 5.0, false);
    const Vector uf = free_part(dg.level(1), u);
    EXPECT_LT(std::abs(uf.dot(al.jump * uf)), 1e-11);
    EXPECT_NEAR(uf.dot(al.a * uf), uf.dot(al.stiffness * uf), 1e-8 * uf.dot(al.stiffness * uf));
  }
}

TEST(Sipg, ConformingModeIsStiffness) {
  DiscreteHierarchy h(l_shape(), 2, 2, Coupling::conforming, SpaceRule::matching);
  const AssembledLevel al = assemble_sipg(h, 2, 5.0);
  EXPECT_EQ(max_abs_difference(al.a, al.stiffness), 0.0);
  EXPECT_EQ(al.jump.nonZeros(), 0);
  EXPECT_EQ(al.consistency.nonZeros(), 0);
}

TEST(Sipg, StructuralInvariants) {
  for (SpaceRule rule : {SpaceRule::matching, SpaceRule::nonmatching})
    for (int p = 1; p <= 4; ++p) {
      DiscreteHierarchy h(l_shape(), p, 2, Coupling::dg, rule);
      const AssembledLevel al = assemble_sipg(h, 2, 5.0);
      for (const SparseMatrix* m : {&al.a, &al.q, &al.stiffness, &al.mass, &al.jump})
        EXPECT_LE(max_asym(*m), 1e-12);
      EXPECT_GT(min_eig(al.mass), 0.0);
      EXPECT_GT(min_eig(al.jump), -1e-12);
      EXPECT_GT(min_eig(al.a), 0.0) << "p=" << p;
    }
}

TEST(Sipg, CoercivityAtDefaultPenaltyOnLevelThree) {
  for (int p = 1; p <= 4; ++p) {
    DiscreteHierarchy h(l_shape(), p, 3, Coupling::dg, SpaceRule::matching);
    EXPECT_GT(min_eig(assemble_system(h, {}, 5.0).a), 0.0) << p;
  }
}

TEST(Sipg, SmallPenaltyIsRejected) {
  DiscreteHierarchy h(l_shape(), 3, 2, Coupling::dg, SpaceRule::matching);
  EXPECT_THROW(assemble_sipg(h, 2, 1e-3), ValidationError);
}

TEST(Sipg, PenaltyUsesFinestGridOnEveryLevel) {
  const int big_l = 3;
  DiscreteHierarchy h(l_shape(), 2, big_l, Coupling::dg, SpaceRule::matching);
  const auto& f = h.domain().interfaces()[0];
  const double h_l = 1.0 / (1 << big_l);
  EXPECT_NEAR(penalty_coefficient(h, f, 5.0), 5.0 * 4 / h_l, 1e-12);
  for (int l = 0; l <= big_l; ++l) {
    const double h_level = 1.0 / (1 << l);
    EXPECT_NEAR(penalty_coefficient(h, f, 5.0), std::pow(2.0, big_l - l) * 5.0 * 4 / h_level, 1e-9);
    // Q - K = c J on every level.
    const AssembledLevel al = assemble_sipg(h, l, 5.0, false);
    const SparseMatrix diff = al.q - al.stiffness;
    const SparseMatrix scaled = penalty_coefficient(h, f, 5.0) * al.jump;
    EXPECT_LT(max_abs_difference(diff, scaled), 1e-9);
  }
  // Nonmatching: the larger degree and the smaller grid size of the two sides.
  DiscreteHierarchy n(l_shape(), 2, 2, Coupling::dg, SpaceRule::nonmatching);
  // Patch 0 has degree 2 and h = 1/8, patch 1 degree 3 and h = 1/4, patch 2 degree 2 and h = 1/4.
  ASSERT_EQ(n.domain().interfaces().size(), 2u);
  EXPECT_NEAR(penalty_coefficient(n, n.domain().interfaces()[0], 5.0), 5.0 * 9 * 8, 1e-12);
  EXPECT_NEAR(penalty_coefficient(n, n.domain().interfaces()[1], 5.0), 5.0 * 4 * 8, 1e-12);
}

TEST(Sipg, GalerkinIdentityAllLevelsAndModes) {
  struct Case {
    MultiPatchDomain dom;
    int p;
    int levels;
    Coupling c;
    SpaceRule r;
  };
  const std::vector<Case> cases{{l_shape(), 2, 3, Coupling::conforming, SpaceRule::matching},
                                {l_shape(), 3, 3, Coupling::dg, SpaceRule::matching},
                                {l_shape(), 2, 3, Coupling::dg, SpaceRule::nonmatching},
                                {fichera(), 2, 2, Coupling::conforming, SpaceRule::matching},
                                {fichera(), 2, 2, Coupling::dg, SpaceRule::nonmatching}};
  for (const auto& cs : cases) {
    DiscreteHierarchy h(cs.dom, cs.p, cs.levels, cs.c, cs.r);
    std::vector<SparseMatrix> a;
    for (int l = 0; l <= cs.levels; ++l) a.push_back(assemble_sipg(h, l, 5.0, false).a);
    for (int l = 1; l <= cs.levels; ++l) {
      const SparseMatrix& pm = h.prolongation(l);
      const SparseMatrix coarse = SparseMatrix(pm.transpose()) * a[l] * pm;
      EXPECT_LE(max_abs_difference(coarse, a[l - 1]), 1e-10) << to_string(cs.c) << " " << l;
    }
  }
}

TEST(Sipg, LargePenaltyApproachesConformingSolution) {
  const auto dom = l_shape();
  DiscreteHierarchy conf(dom, 2, 2, Coupling::conforming, SpaceRule::matching);
  DiscreteHierarchy dg(dom, 2, 2, Coupling::dg, SpaceRule::matching);
  const LinearSystem sc = assemble_system(conf, {}, 5.0);
  const Vector uc = expand_to_full(conf.level(2), Factorization(sc.a).solve(sc.f), sc.lift);
  const Vector target = free_part(dg.level(2), embed_conforming(conf, dg, 2, uc));
  double prev = std::numeric_limits<double>::max();
  for (double sigma : {5.0, 10.0, 20.0, 40.0, 80.0, 160.0}) {
    const LinearSystem sd = assemble_system(dg, {}, sigma);
    const double diff = (Factorization(sd.a).solve(sd.f) - target).norm();
    EXPECT_LT(diff, prev) << sigma;
    prev = diff;
  }
}

TEST(Rhs, SourceAndLift) {
  const ManufacturedProblem prob{.dim = 2};
  EXPECT_NEAR(prob.source(Eigen::Vector3d(0.5, 0.5, 0)), 2 * kPi * kPi, 1e-12);
  const ManufacturedProblem p3{.dim = 3};
  // Laplacian identity by central differences.
  const Eigen::Vector3d x(0.3, 0.7, 0.45);
  const double e = 1e-4;
  double lap = 0.0;
  for (int d = 0; d < 3; ++d) {
    Eigen::Vector3d xp = x, xm = x;
    xp[d] += e;
    xm[d] -= e;
    lap += (p3.exact(xp) - 2 * p3.exact(x) + p3.exact(xm)) / (e * e);
  }
  EXPECT_NEAR(-lap, p3.source(x), 1e-5 * p3.source(x));

  DiscreteHierarchy h(l_shape(), 3, 3, Coupling::conforming, SpaceRule::matching);
  EXPECT_LT(dirichlet_lift(h, 3, prob).cwiseAbs().maxCoeff(), 1e-14);
  const Vector load = assemble_load_full(h, 3, prob);
  // Partition of unity: the load entries sum to the integral of f over the domain.
  EXPECT_NEAR(load.sum(), -8.0, 1e-6);
  const Vector f = assemble_rhs(h, prob, 5.0);
  EXPECT_LT((f - free_part(h.level(3), load)).cwiseAbs().maxCoeff(), 1e-13);

  const ManufacturedProblem zero{.dim = 2, .source_scale = 0.0, .dirichlet_scale = 0.0};
  DiscreteHierarchy sq(single_box({0.25, 0.25}, {1.0, 1.0}), 2, 2, Coupling::conforming, SpaceRule::matching);
  EXPECT_EQ(assemble_rhs(sq, zero, 5.0).norm(), 0.0);
  // A shifted square has a nonzero lift that enters the right-hand side.
  const ManufacturedProblem lift_only{.dim = 2, .source_scale = 0.0};
  EXPECT_GT(dirichlet_lift(sq, 2, lift_only).norm(), 0.0);
  EXPECT_GT(assemble_rhs(sq, lift_only, 5.0).norm(), 0.0);
}

TEST(Rhs, DiscreteSolutionConverges) {
  double prev = 1.0;
  for (int l = 1; l <= 3; ++l) {
    DiscreteHierarchy h(l_shape(), 2, l, Coupling::conforming, SpaceRule::matching);
    const LinearSystem s = assemble_system(h, {}, 5.0);
    const Vector u = expand_to_full(h.level(l), Factorization(s.a).solve(s.f), s.lift);
    const double err = l2_error(h, l, u, {});
    EXPECT_LT(err, prev / 4.0);
    prev = err;
  }
}

TEST(Rhs, GrevilleInterpolationReproducesLinearFunctions) {
  DiscreteHierarchy h(l_shape(), 3, 2, Coupling::conforming, SpaceRule::matching);
  const Vector u = interpolate_greville(h, 2, [](const Eigen::Vector3d& x) { return 2 * x[0] - x[1] + 1; });
  const BulkMatrices b = assemble_bulk_full(h, 2);
  // Energy of a linear function equals |grad|^2 times the area 3.
  EXPECT_NEAR(u.dot(b.stiffness * u), 5.0 * 3.0, 1e-10);
}

TEST(Diagnostic, IdentityGeometryAndDistortedGrid) {
  DiscreteHierarchy h(l_shape(), 2, 2, Coupling::conforming, SpaceRule::matching);
  const auto [a, ah] = physical_and_parametric_stiffness(h, 2);
  const ConditionDiagnostic cd = geometry_condition_diagnostic(a, ah);
  EXPECT_NEAR(cd.kappa, 1.0, 1e-10);
  DiscreteHierarchy d(distorted_grid(2, 2, 0.2, 1), 2, 1, Coupling::conforming, SpaceRule::matching);
  const auto [ad, adh] = physical_and_parametric_stiffness(d, 1);
  EXPECT_GT(geometry_condition_diagnostic(ad, adh).kappa, 1.0 + 1e-3);
  EXPECT_THROW(geometry_condition_diagnostic(a, adh), std::invalid_argument);
}
