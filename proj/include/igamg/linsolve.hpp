#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace igamg {

/// Compressed row storage with sorted column indices.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Vector = Eigen::VectorXd;

/// Linear operator y = Op(x).
using LinearOperator = std::function<void(const Vector& x, Vector& y)>;

/// Sparse direct solver. The SPD path uses a Cholesky factorization with
/// approximate minimum degree ordering; the general path uses LU with
/// partial pivoting.
class Factorization {
 public:
  enum class Kind { spd, general };

  Factorization();
  explicit Factorization(const SparseMatrix& a, Kind kind = Kind::spd);
  Factorization(Factorization&&) noexcept;
  Factorization& operator=(Factorization&&) noexcept;
  ~Factorization();

  Vector solve(const Vector& b) const;
  int size() const { return n_; }
  Kind kind() const { return kind_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int n_ = 0;
  Kind kind_ = Kind::spd;
};

struct CgResult {
  Vector x;
  int iterations = 0;
  bool converged = false;
  /// Relative residual ||b - A x|| / ||b|| after each iteration, starting with the initial guess.
  std::vector<double> residuals;
};

/// Preconditioned conjugate gradients from a zero initial guess. Stops once
/// the relative Euclidean residual drops to `tolerance`.
CgResult cg(const LinearOperator& apply_a, const Vector& b, const LinearOperator& precond,
            double tolerance = 1e-8, int max_iterations = 1000);

/// Convenience overload with the identity preconditioner.
CgResult cg(const SparseMatrix& a, const Vector& b, double tolerance = 1e-8,
            int max_iterations = 1000);

/// Full spectrum of B^{-1} A in ascending order for symmetric A and SPD B.
Eigen::VectorXd dense_generalized_eig(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Largest absolute entry of a - b.
double max_abs_difference(const SparseMatrix& a, const SparseMatrix& b);

/// Coordinate text format: header "rows cols nnz", then one "i j value" line per entry.
void write_coordinate(std::ostream& out, const SparseMatrix& a);
SparseMatrix read_coordinate(std::istream& in);

/// Principal submatrix a(idx, idx).
SparseMatrix principal_submatrix(const SparseMatrix& a, std::span<const int> idx);

}  // namespace igamg
