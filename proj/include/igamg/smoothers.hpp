#pragma once

#include <array>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "igamg/hierarchy.hpp"
#include "igamg/linsolve.hpp"

namespace igamg {

/// x = L^{-1} r with L the lower triangle of A (diagonal included), ascending order.
Vector gs_apply_forward(const SparseMatrix& a, const Vector& r);
/// x = L^{-T} r, i.e. the upper triangle of symmetric A, descending order.
Vector gs_apply_backward(const SparseMatrix& a, const Vector& r);

/// In-place residual-correction steps u += L^{-1} (f - A u) and u += L^{-T} (f - A u).
void gs_sweep_forward(const SparseMatrix& a, const Vector& f, Vector& u);
void gs_sweep_backward(const SparseMatrix& a, const Vector& f, Vector& u);

enum class PieceKind { interior, face, edge, vertex };
const char* to_string(PieceKind k);

struct Piece {
  PieceKind kind = PieceKind::interior;
  /// Free DOF indices; for interior pieces in the patch's interior tensor order.
  std::vector<int> dofs;
  /// Patches contributing DOFs, ascending.
  std::vector<int> patches;
};

struct PieceDecomposition {
  std::vector<Piece> pieces;
  int count(PieceKind k) const;
};

/// Groups free DOFs by the geometric entity their basis function is attached
/// to: patch interiors, interface faces/edges and vertices. DOFs at the same
/// physical entity form one piece even if they belong to different patches.
PieceDecomposition build_piece_decomposition(const DiscreteHierarchy& h, int level);

/// Geometry-free solver for the interior piece of one patch. On each
/// combination alpha of per-direction subspaces,
///   L_alpha = sum_d X_d (x) M_rest,  X_d = sigma M_large or K_comp,
/// i.e. the parameter-domain Laplacian with the stiffness replaced by
/// sigma = 1/(delta h^2) times the mass in large-subspace directions.
/// Applied by fast diagonalization.
class ScmsInteriorSolver {
 public:
  ScmsInteriorSolver(const TensorSpace& space, double delta);

  int size() const { return size_; }
  int dim() const { return static_cast<int>(factors_.size()); }
  double sigma() const { return sigma_; }
  /// (n_large, n_comp) per direction.
  const std::vector<std::array<int, 2>>& split_sizes() const { return split_; }
  /// Dimensions of the 2^d subspaces; bit d of the index selects the complement in direction d.
  std::vector<int> subspace_dimensions() const;

  /// out = L_T^{-1} r on interior coefficients (direction 0 fastest).
  std::vector<double> apply(std::span<const double> r) const;

 private:
  int size_ = 0;
  double sigma_ = 0.0;
  std::vector<std::array<int, 2>> split_;
  std::vector<Eigen::MatrixXd> factors_;
  std::vector<Eigen::MatrixXd> factors_t_;
  std::vector<double> inv_diag_;
};

/// Returns a shared solver for (space, delta); equal spaces reuse one instance.
std::shared_ptr<const ScmsInteriorSolver> scms_interior_solver(const TensorSpace& space, double delta);

struct ScmsOptions {
  double tau = 1.0;
  double delta = 0.12;
};

/// Additive piecewise smoother tau * sum_T P_T L_T^{-1} P_T^T. Interior
/// pieces use ScmsInteriorSolver; interface pieces use P_T^T A P_T directly.
class ScmsSmoother {
 public:
  ScmsSmoother(const DiscreteHierarchy& h, int level, const SparseMatrix& a, ScmsOptions opt);

  Vector apply(const Vector& r) const;
  const PieceDecomposition& decomposition() const { return pieces_; }
  double tau() const { return tau_; }

 private:
  struct InterfaceSolver {
    int piece = 0;
    Eigen::LLT<Eigen::MatrixXd> dense;
    Factorization sparse;
    bool use_dense = true;
  };
  PieceDecomposition pieces_;
  std::vector<std::pair<int, std::shared_ptr<const ScmsInteriorSolver>>> interior_;
  std::vector<InterfaceSolver> interface_;
  double tau_;
  int n_;
};

enum class SmootherKind { gauss_seidel, scms, hybrid };
const char* to_string(SmootherKind k);

/// Pre- and post-smoothing on one level. Gauss-Seidel pre-smooths forward and
/// post-smooths backward; hybrid wraps the scms steps in one forward (pre) and
/// one backward (post) Gauss-Seidel sweep.
class LevelSmoother {
 public:
  LevelSmoother(SmootherKind kind, const SparseMatrix& a, std::unique_ptr<ScmsSmoother> scms);

  void pre_smooth(const Vector& f, Vector& u, int steps) const;
  void post_smooth(const Vector& f, Vector& u, int steps) const;
  SmootherKind kind() const { return kind_; }
  const ScmsSmoother* scms() const { return scms_.get(); }

 private:
  void scms_step(const Vector& f, Vector& u) const;

  SmootherKind kind_;
  const SparseMatrix* a_;
  std::unique_ptr<ScmsSmoother> scms_;
};

}  // namespace igamg
