#pragma once

#include <Eigen/Dense>

#include "igamg/hierarchy.hpp"
#include "igamg/linsolve.hpp"

namespace igamg {

/// g(x) = prod_d sin(pi x_d) with source f = -Laplace g = d pi^2 g.
struct ManufacturedProblem {
  int dim = 2;
  /// Scales the source; 0 gives a zero right-hand side with the same lift.
  double source_scale = 1.0;
  /// Scales the Dirichlet datum.
  double dirichlet_scale = 1.0;

  double exact(const Eigen::Vector3d& x) const;
  double source(const Eigen::Vector3d& x) const;
};

/// Matrices on the full numbering of one level (Dirichlet functions included).
struct BulkMatrices {
  SparseMatrix stiffness;
  SparseMatrix mass;
};

struct BulkOptions {
  bool mass = true;
  /// Neglect the geometry (identity Jacobian) to obtain the parametric stiffness.
  bool parametric = false;
};

BulkMatrices assemble_bulk_full(const DiscreteHierarchy& h, int level, BulkOptions opt = {});

struct InterfaceMatrices {
  /// Unweighted jump form.
  SparseMatrix jump;
  /// Jump form with each interface weighted by its penalty coefficient.
  SparseMatrix penalized_jump;
  /// Consistency form: entry (i, j) = ([phi_j], {grad phi_i} . n).
  SparseMatrix consistency;
};

/// Interface forms on the full numbering; requires dG coupling.
InterfaceMatrices assemble_interface_full(const DiscreteHierarchy& h, int level, double sigma);

/// sigma * p^2 / h_L for one interface: p is the larger patch degree and h_L
/// the smaller finest-level element size of the two patches.
double penalty_coefficient(const DiscreteHierarchy& h, const Interface& iface, double sigma);

/// a(free, free).
SparseMatrix restrict_to_free(const SparseMatrix& full, const LevelSpaces& lv);

/// All forms of one level on its free DOFs.
struct AssembledLevel {
  SparseMatrix stiffness;  // K
  SparseMatrix mass;       // M (empty unless requested)
  SparseMatrix jump;       // J
  SparseMatrix consistency;  // B
  SparseMatrix q;          // K + penalized J
  SparseMatrix a;          // Q - B - B^T
  double sigma = 0.0;
};

/// Throws ValidationError if a definiteness check fails on small systems
/// (a too small penalty parameter).
AssembledLevel assemble_sipg(const DiscreteHierarchy& h, int level, double sigma, bool with_mass = true);

/// System matrix and right-hand side on the finest level, built from one
/// full-numbering assembly.
struct LinearSystem {
  SparseMatrix a;
  Vector f;
  /// Full-numbering Dirichlet lift (zero at free DOFs).
  Vector lift;
};

LinearSystem assemble_system(const DiscreteHierarchy& h, const ManufacturedProblem& problem, double sigma);

/// Load vector of the source on the full numbering.
Vector assemble_load_full(const DiscreteHierarchy& h, int level, const ManufacturedProblem& problem);

/// Greville interpolation of g at Dirichlet DOFs on the full numbering.
Vector dirichlet_lift(const DiscreteHierarchy& h, int level, const ManufacturedProblem& problem);

/// Finest-level right-hand side after elimination.
Vector assemble_rhs(const DiscreteHierarchy& h, const ManufacturedProblem& problem, double sigma);

/// Full coefficient vector from free values plus lift.
Vector expand_to_full(const LevelSpaces& lv, const Vector& u_free, const Vector& lift);

/// L2(Omega) error of the discrete function against g.
double l2_error(const DiscreteHierarchy& h, int level, const Vector& u_full,
                const ManufacturedProblem& problem);

/// Full-numbering coefficients of a function given by its values at the
/// physical Greville points (exact for globally linear functions on affine patches).
Vector interpolate_greville(const DiscreteHierarchy& h, int level,
                            const std::function<double(const Eigen::Vector3d&)>& fn);

struct ConditionDiagnostic {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double kappa = 0.0;
};

/// Extreme generalized eigenvalues of (A, A_hat) and their ratio.
ConditionDiagnostic geometry_condition_diagnostic(const SparseMatrix& a, const SparseMatrix& a_hat);

/// Stiffness with and without geometry on the free DOFs of a conforming level.
std::pair<SparseMatrix, SparseMatrix> physical_and_parametric_stiffness(const DiscreteHierarchy& h, int level);

}  // namespace igamg
