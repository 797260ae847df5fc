#include "igamg/tensor.hpp"

#include <algorithm>
#include <stdexcept>

namespace igamg {

TensorSpace::TensorSpace(std::vector<SplineSpace1D> spaces) : spaces_(std::move(spaces)) {
  if (spaces_.empty() || spaces_.size() > 3)
    throw std::invalid_argument("tensor space dimension must be 1, 2 or 3");
  size_ = 1;
  for (const auto& s : spaces_) size_ *= s.size();
}

int TensorSpace::max_degree() const {
  int p = 0;
  for (const auto& s : spaces_) p = std::max(p, s.degree());
  return p;
}

double TensorSpace::element_size() const {
  double h = 0.0;
  for (const auto& s : spaces_) h = std::max(h, s.element_size());
  return h;
}

MultiIndex TensorSpace::unflatten(int index) const {
  MultiIndex mi{0, 0, 0};
  for (int d = 0; d < dim(); ++d) {
    mi[d] = index % spaces_[d].size();
    index /= spaces_[d].size();
  }
  return mi;
}

int TensorSpace::flatten(const MultiIndex& mi) const {
  int idx = 0;
  for (int d = dim() - 1; d >= 0; --d) idx = idx * spaces_[d].size() + mi[d];
  return idx;
}

std::vector<double> apply_along_axis(const Eigen::MatrixXd& op, int axis,
                                     std::span<const int> dims, std::span<const double> in) {
  int inner = 1, outer = 1;
  for (int d = 0; d < axis; ++d) inner *= dims[d];
  for (int d = axis + 1; d < static_cast<int>(dims.size()); ++d) outer *= dims[d];
  const int n_in = dims[axis];
  const int n_out = static_cast<int>(op.rows());
  if (op.cols() != n_in) throw std::invalid_argument("apply_along_axis: extent mismatch");
  std::vector<double> out(static_cast<std::size_t>(inner) * n_out * outer, 0.0);
  for (int o = 0; o < outer; ++o) {
    // Slab viewed as an inner x n_in column-major matrix.
    Eigen::Map<const Eigen::MatrixXd> x(in.data() + static_cast<std::size_t>(o) * inner * n_in,
                                        inner, n_in);
    Eigen::Map<Eigen::MatrixXd> y(out.data() + static_cast<std::size_t>(o) * inner * n_out, inner,
                                  n_out);
    y.noalias() = x * op.transpose();
  }
  return out;
}

std::vector<double> apply_kronecker(std::span<const Eigen::MatrixXd> factors,
                                    std::span<const double> in) {
  std::vector<int> dims(factors.size());
  for (std::size_t d = 0; d < factors.size(); ++d) dims[d] = static_cast<int>(factors[d].cols());
  std::vector<double> cur(in.begin(), in.end());
  for (std::size_t d = 0; d < factors.size(); ++d) {
    cur = apply_along_axis(factors[d], static_cast<int>(d), dims, cur);
    dims[d] = static_cast<int>(factors[d].rows());
  }
  return cur;
}

}  // namespace igamg
