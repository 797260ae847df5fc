#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "igamg/tensor.hpp"

namespace igamg {

/// Raised when a multi-patch configuration violates the admissibility rules
/// (non-bijective maps, overlaps, hanging interfaces, non-matching spaces in
/// conforming mode). The message names the offending patches.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Point and Jacobian of a geometry map; only the leading d x d block is used.
struct MapValue {
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  Eigen::Matrix3d jacobian = Eigen::Matrix3d::Identity();
};

/// Spline or rational spline map G : [0,1]^d -> R^d.
class GeometryMap {
 public:
  GeometryMap() = default;
  /// `control_points` is n x d with rows ordered like TensorSpace indices.
  GeometryMap(TensorSpace space, Eigen::MatrixXd control_points, std::vector<double> weights = {});

  /// Degree-1 map of the box origin + [0,extent_0] x ... (a translation when extents are 1).
  static GeometryMap box(std::span<const double> origin, std::span<const double> extent);

  int dim() const { return space_.dim(); }
  const TensorSpace& space() const { return space_; }
  const Eigen::MatrixXd& control_points() const { return cps_; }
  const std::vector<double>& weights() const { return weights_; }
  bool rational() const { return !weights_.empty(); }

  MapValue eval(std::span<const double> xi) const;
  Eigen::Vector3d point(std::span<const double> xi) const { return eval(xi).x; }

 private:
  TensorSpace space_;
  Eigen::MatrixXd cps_;
  std::vector<double> weights_;
};

/// Sides are numbered 2*direction + (0 for xi_dir = 0, 1 for xi_dir = 1).
constexpr int side_direction(int side) { return side / 2; }
constexpr int side_value(int side) { return side % 2; }

/// Parameter directions tangential to `side`, in increasing order.
std::vector<int> tangential_directions(int dim, int side);
/// Parameter point on `side` for tangential coordinates t.
std::array<double, 3> side_point(int dim, int side, std::span<const double> t);

/// Maps tangential coordinates of side a to those of side b:
/// u[j] = flip[j] ? 1 - t[perm[j]] : t[perm[j]].
struct Orientation {
  std::array<int, 2> perm{0, 1};
  std::array<bool, 2> flip{false, false};

  std::array<double, 2> map(std::span<const double> t, int tdim) const;
  std::array<int, 2> map_index(std::span<const int> ia, std::span<const int> nb, int tdim) const;
  friend bool operator==(const Orientation&, const Orientation&) = default;
};

struct Interface {
  int patch_a = 0;
  int side_a = 0;
  int patch_b = 0;
  int side_b = 0;
  Orientation orientation;
  friend bool operator==(const Interface&, const Interface&) = default;
};

struct BoundarySide {
  int patch = 0;
  int side = 0;
  friend bool operator==(const BoundarySide&, const BoundarySide&) = default;
};

/// Non-overlapping patches with their interface topology.
class MultiPatchDomain {
 public:
  MultiPatchDomain() = default;
  MultiPatchDomain(std::vector<GeometryMap> patches, std::vector<Interface> interfaces);

  int dim() const { return patches_.empty() ? 0 : patches_.front().dim(); }
  int num_patches() const { return static_cast<int>(patches_.size()); }
  const GeometryMap& patch(int k) const { return patches_[k]; }
  const std::vector<GeometryMap>& patches() const { return patches_; }
  const std::vector<Interface>& interfaces() const { return interfaces_; }
  const std::vector<BoundarySide>& boundary() const { return boundary_; }
  bool is_boundary(int patch, int side) const;
  /// Interface index touching (patch, side), or -1.
  int interface_at(int patch, int side) const;

 private:
  std::vector<GeometryMap> patches_;
  std::vector<Interface> interfaces_;
  std::vector<BoundarySide> boundary_;
  std::vector<int> side_interface_;
};

/// Checks each map for a constant-sign Jacobian on a sample grid.
void check_bijective(const GeometryMap& map, int patch_index = 0, int samples = 9);

/// Finds all pairs of coinciding sides and builds the domain. Rejects
/// overlapping patches and partially matching sides.
MultiPatchDomain detect_interfaces(std::vector<GeometryMap> patches);

/// Checks that both side parameterizations of `iface` agree on a
/// samples^(d-1) grid; returns the largest distance found.
double interface_mismatch(const MultiPatchDomain& domain, const Interface& iface, int samples = 33);

MultiPatchDomain unit_square();
/// [0,2]^2 minus (1,2)^2: patches [0,1]^2, [1,2]x[0,1], [0,1]x[1,2].
MultiPatchDomain l_shape();
/// [0,2]^3 minus (1,2)^3 as seven unit cubes.
MultiPatchDomain fichera();
/// rows x cols unit squares covering [0,cols] x [0,rows]; patch index c + cols*r.
MultiPatchDomain square_grid(int rows, int cols);
/// square_grid with cubic patches whose interior grid vertices and interior
/// control points are perturbed by `amplitude` (relative to the patch size).
MultiPatchDomain distorted_grid(int rows, int cols, double amplitude, std::uint64_t seed);
/// fichera with quadratic cubes whose central control points are perturbed.
MultiPatchDomain distorted_fichera(double amplitude, std::uint64_t seed);

}  // namespace igamg
