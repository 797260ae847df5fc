#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace igamg {

/// Values and derivatives of the p+1 basis functions active at one point.
/// `values(k, j)` is the k-th derivative of basis function `first + j`.
struct BasisValues {
  int first = 0;
  Eigen::MatrixXd values;
};

/// Univariate B-spline space on [0,1] with an open knot vector and simple
/// interior knots (maximal smoothness C^{p-1}).
class SplineSpace1D {
 public:
  SplineSpace1D() = default;

  /// Builds the space from strictly increasing breakpoints 0 = b_0 < ... < b_m = 1.
  SplineSpace1D(int degree, std::vector<double> breakpoints);

  /// Uniform space with `coarse_elements * 2^level` elements.
  static SplineSpace1D uniform(int degree, int coarse_elements, int level);

  /// Accepts a full open knot vector; interior knots must be simple.
  static SplineSpace1D from_knots(std::span<const double> knots);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(knots_.size()) - degree_ - 1; }
  int num_elements() const { return static_cast<int>(breaks_.size()) - 1; }
  /// Largest knot span.
  double element_size() const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& breakpoints() const { return breaks_; }

  /// Index of the element containing x; x == 1 belongs to the last element.
  int find_element(double x) const;

  /// Cox-de Boor evaluation of the active functions and their derivatives
  /// up to `max_deriv` at x in [0,1].
  BasisValues eval(double x, int max_deriv) const;

  /// Same, but restricted to element `element` (x may sit on its boundary).
  BasisValues eval_in_element(int element, double x, int max_deriv) const;

  std::vector<double> greville() const;

  friend bool operator==(const SplineSpace1D& a, const SplineSpace1D& b) {
    return a.degree_ == b.degree_ && a.knots_ == b.knots_;
  }

 private:
  int degree_ = 0;
  std::vector<double> breaks_;
  std::vector<double> knots_;
};

/// Galerkin mass matrix (dense storage, bandwidth p).
Eigen::MatrixXd univariate_mass(const SplineSpace1D& space);
/// Galerkin stiffness matrix (dense storage, bandwidth p).
Eigen::MatrixXd univariate_stiffness(const SplineSpace1D& space);

struct TwoScaleRefinement {
  SplineSpace1D fine;
  /// n_fine x n_coarse; column j holds the fine coefficients of coarse basis function j.
  Eigen::MatrixXd prolongation;
};

/// Inserts every element midpoint once (dyadic refinement).
TwoScaleRefinement two_scale_refine(const SplineSpace1D& space);

/// Splitting of the interior space (first and last basis function removed)
/// into a large subspace with a degree-robust inverse inequality and its
/// mass-orthogonal complement.
///
/// The large subspace is the set of interior splines whose even derivatives of
/// orders 2, 4, ..., 2*floor((p-1)/2) vanish at both endpoints.
struct ReducedSplit {
  int n_large = 0;
  int n_comp = 0;
  /// Columns [0, n_large) span the large subspace, columns [n_large, n) its
  /// complement, both expressed in interior B-spline coefficients.
  Eigen::MatrixXd transform;
};

/// Number of endpoint constraints defining the large subspace.
int reduced_constraint_count(int degree);

ReducedSplit reduced_split(const SplineSpace1D& space);

/// Removes the first and last row/column.
Eigen::MatrixXd interior_block(const Eigen::MatrixXd& m);

}  // namespace igamg
