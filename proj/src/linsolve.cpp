#include "igamg/linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace igamg {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

struct Factorization::Impl {
  Eigen::SimplicialLLT<ColMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
  Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu;
};

Factorization::Factorization(const SparseMatrix& a, Kind kind)
    : impl_(std::make_unique<Impl>()), n_(static_cast<int>(a.rows())), kind_(kind) {
  if (a.rows() != a.cols()) throw std::invalid_argument("factorize: matrix is not square");
  ColMatrix col = a;
  if (kind == Kind::spd) {
    impl_->llt.compute(col);
    if (impl_->llt.info() != Eigen::Success)
      throw std::runtime_error("factorize: matrix is not numerically symmetric positive definite");
  } else {
    impl_->lu.analyzePattern(col);
    impl_->lu.factorize(col);
    if (impl_->lu.info() != Eigen::Success)
      throw std::runtime_error("factorize: matrix is numerically singular");
  }
}

Factorization::Factorization(Factorization&&) noexcept = default;
Factorization& Factorization::operator=(Factorization&&) noexcept = default;
Factorization::Factorization() = default;
Factorization::~Factorization() = default;

Vector Factorization::solve(const Vector& b) const {
  if (!impl_) throw std::logic_error("solve on empty factorization");
  if (b.size() != n_) throw std::invalid_argument("solve: right-hand side has wrong size");
  if (kind_ == Kind::spd) return impl_->llt.solve(b);
  return impl_->lu.solve(b);
}

CgResult cg(const LinearOperator& apply_a, const Vector& b, const LinearOperator& precond,
            double tolerance, int max_iterations) {
  CgResult res;
  const Eigen::Index n = b.size();
  res.x = Vector::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.converged = true;
    res.residuals.push_back(0.0);
    return res;
  }
  Vector r = b;
  Vector z(n), p(n), q(n);
  precond(r, z);
  p = z;
  double rz = r.dot(z);
  res.residuals.push_back(1.0);
  while (res.iterations < max_iterations) {
    apply_a(p, q);
    const double alpha = rz / p.dot(q);
    res.x.noalias() += alpha * p;
    r.noalias() -= alpha * q;
    ++res.iterations;
    const double rel = r.norm() / bnorm;
    res.residuals.push_back(rel);
    if (rel <= tolerance) {
      res.converged = true;
      break;
    }
    precond(r, z);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  return res;
}

CgResult cg(const SparseMatrix& a, const Vector& b, double tolerance, int max_iterations) {
  return cg([&a](const Vector& x, Vector& y) { y.noalias() = a * x; }, b,
            [](const Vector& x, Vector& y) { y = x; }, tolerance, max_iterations);
}

Eigen::VectorXd dense_generalized_eig(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw std::invalid_argument("dense_generalized_eig: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(b);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("dense_generalized_eig: B is not symmetric positive definite");
  // L^{-1} A L^{-T} has the same spectrum as B^{-1} A.
  Eigen::MatrixXd c = llt.matrixL().solve(a);
  c = llt.matrixL().solve(c.transpose()).transpose();
  c = 0.5 * (c + c.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double max_abs_difference(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("max_abs_difference: dimension mismatch");
  const SparseMatrix d = a - b;
  double m = 0.0;
  for (int k = 0; k < d.nonZeros(); ++k) m = std::max(m, std::abs(d.valuePtr()[k]));
  return m;
}

void write_coordinate(std::ostream& out, const SparseMatrix& a) {
  out << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
  out << std::setprecision(17);
  for (int i = 0; i < a.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(a, i); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

SparseMatrix read_coordinate(std::istream& in) {
  long rows = 0, cols = 0, nnz = 0;
  if (!(in >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
    throw std::runtime_error("coordinate matrix: malformed header");
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(nnz);
  for (long k = 0; k < nnz; ++k) {
    long i = 0, j = 0;
    double v = 0.0;
    if (!(in >> i >> j >> v)) throw std::runtime_error("coordinate matrix: truncated entry list");
    if (i < 0 || i >= rows || j < 0 || j >= cols)
      throw std::runtime_error("coordinate matrix: index out of range");
    trips.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
  }
  SparseMatrix a(rows, cols);
  a.setFromTriplets(trips.begin(), trips.end());
  return a;
}

SparseMatrix principal_submatrix(const SparseMatrix& a, std::span<const int> idx) {
  std::vector<int> pos(a.cols(), -1);
  for (std::size_t k = 0; k < idx.size(); ++k) pos[idx[k]] = static_cast<int>(k);
  const int n = static_cast<int>(idx.size());
  std::vector<int> outer(n + 1, 0);
  std::vector<int> inner;
  std::vector<double> values;
  std::vector<std::pair<int, double>> row;
  for (int k = 0; k < n; ++k) {
    row.clear();
    for (SparseMatrix::InnerIterator it(a, idx[k]); it; ++it)
      if (pos[it.col()] >= 0) row.emplace_back(pos[it.col()], it.value());
    std::sort(row.begin(), row.end());
    for (const auto& [c, v] : row) {
      inner.push_back(c);
      values.push_back(v);
    }
    outer[k + 1] = static_cast<int>(inner.size());
  }
  return Eigen::Map<const SparseMatrix>(n, n, static_cast<Eigen::Index>(inner.size()), outer.data(),
                                        inner.data(), values.data());
}

}  // namespace igamg
