#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "igamg/bspline.hpp"

namespace igamg {

/// Multi-index over at most three directions.
using MultiIndex = std::array<int, 3>;

/// Tensor-product spline space on the parameter cube. Global (patch-local)
/// indices run with direction 0 fastest: i = i0 + n0 * (i1 + n1 * i2).
class TensorSpace {
 public:
  TensorSpace() = default;
  explicit TensorSpace(std::vector<SplineSpace1D> spaces);

  int dim() const { return static_cast<int>(spaces_.size()); }
  const SplineSpace1D& operator[](int d) const { return spaces_[d]; }
  const std::vector<SplineSpace1D>& spaces() const { return spaces_; }
  int size() const { return size_; }
  int size(int d) const { return spaces_[d].size(); }
  /// Largest degree over directions.
  int max_degree() const;
  /// Largest element size over directions.
  double element_size() const;

  MultiIndex unflatten(int index) const;
  int flatten(const MultiIndex& mi) const;

  friend bool operator==(const TensorSpace& a, const TensorSpace& b) {
    return a.spaces_ == b.spaces_;
  }

 private:
  std::vector<SplineSpace1D> spaces_;
  int size_ = 0;
};

/// Applies `op` along `axis` of a tensor with the given extents (direction 0
/// fastest). The extent of `axis` changes from op.cols() to op.rows().
std::vector<double> apply_along_axis(const Eigen::MatrixXd& op, int axis,
                                     std::span<const int> dims, std::span<const double> in);

/// Applies (A_{d-1} ⊗ ... ⊗ A_0) x, i.e. factor d acts on direction d.
std::vector<double> apply_kronecker(std::span<const Eigen::MatrixXd> factors,
                                    std::span<const double> in);

}  // namespace igamg
