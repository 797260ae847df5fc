#include "igamg/smoothers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <tuple>

#include <Eigen/Eigenvalues>

namespace igamg {

namespace {

double diagonal_of_row(const SparseMatrix& a, int i) {
  for (SparseMatrix::InnerIterator it(a, i); it; ++it)
    if (it.col() == i) {
      if (it.value() == 0.0) break;
      return it.value();
    }
  throw std::invalid_argument("Gauss-Seidel: zero diagonal entry in row " + std::to_string(i));
}

void check_square(const SparseMatrix& a, Eigen::Index n) {
  if (a.rows() != a.cols() || a.rows() != n)
    throw std::invalid_argument("Gauss-Seidel: dimension mismatch");
}

}  // namespace

void gs_sweep_forward(const SparseMatrix& a, const Vector& f, Vector& u) {
  check_square(a, f.size());
  if (u.size() != f.size()) throw std::invalid_argument("Gauss-Seidel: dimension mismatch");
  for (int i = 0; i < a.rows(); ++i) {
    double s = f[i], diag = 0.0;
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) {
      if (it.col() == i)
        diag = it.value();
      else
        s -= it.value() * u[it.col()];
    }
    if (diag == 0.0) diag = diagonal_of_row(a, i);
    u[i] = s / diag;
  }
}

void gs_sweep_backward(const SparseMatrix& a, const Vector& f, Vector& u) {
  check_square(a, f.size());
  if (u.size() != f.size()) throw std::invalid_argument("Gauss-Seidel: dimension mismatch");
  for (int i = static_cast<int>(a.rows()) - 1; i >= 0; --i) {
    double s = f[i], diag = 0.0;
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) {
      if (it.col() == i)
        diag = it.value();
      else
        s -= it.value() * u[it.col()];
    }
    if (diag == 0.0) diag = diagonal_of_row(a, i);
    u[i] = s / diag;
  }
}

Vector gs_apply_forward(const SparseMatrix& a, const Vector& r) {
  check_square(a, r.size());
  Vector x = Vector::Zero(r.size());
  for (int i = 0; i < a.rows(); ++i) {
    double s = r[i], diag = 0.0;
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) {
      if (it.col() < i)
        s -= it.value() * x[it.col()];
      else if (it.col() == i)
        diag = it.value();
    }
    if (diag == 0.0) diag = diagonal_of_row(a, i);
    x[i] = s / diag;
  }
  return x;
}

Vector gs_apply_backward(const SparseMatrix& a, const Vector& r) {
  check_square(a, r.size());
  // Column j of L^T is row j of L, so scatter from row i of A's lower part.
  Vector x = r;
  for (int i = static_cast<int>(a.rows()) - 1; i >= 0; --i) {
    x[i] /= diagonal_of_row(a, i);
    for (SparseMatrix::InnerIterator it(a, i); it; ++it)
      if (it.col() < i) x[it.col()] -= it.value() * x[i];
  }
  return x;
}

const char* to_string(PieceKind k) {
  switch (k) {
    case PieceKind::interior: return "interior";
    case PieceKind::face: return "face";
    case PieceKind::edge: return "edge";
    case PieceKind::vertex: return "vertex";
  }
  return "?";
}

int PieceDecomposition::count(PieceKind k) const {
  return static_cast<int>(std::count_if(pieces.begin(), pieces.end(),
                                        [k](const Piece& p) { return p.kind == k; }));
}

PieceDecomposition build_piece_decomposition(const DiscreteHierarchy& h, int level) {
  const LevelSpaces& lv = h.level(level);
  const MultiPatchDomain& dom = h.domain();
  const int dim = dom.dim();

  PieceDecomposition out;
  std::vector<char> assigned(lv.num_free(), 0);
  // Entity key: dimension of the entity plus its rounded physical centroid.
  using Key = std::tuple<int, long, long, long>;
  std::map<Key, int> entity_piece;

  for (int k = 0; k < dom.num_patches(); ++k) {
    const TensorSpace& ts = lv.patch_spaces[k];
    int interior_piece = -1;
    for (int i = 0; i < ts.size(); ++i) {
      const int free = lv.full_to_free[lv.full_index(k, i)];
      if (free < 0) continue;
      const MultiIndex mi = ts.unflatten(i);
      std::array<double, 3> xi{0.5, 0.5, 0.5};
      int extremal = 0;
      for (int d = 0; d < dim; ++d) {
        if (mi[d] == 0) {
          xi[d] = 0.0;
          ++extremal;
        } else if (mi[d] == ts.size(d) - 1) {
          xi[d] = 1.0;
          ++extremal;
        }
      }
      int piece;
      if (extremal == 0) {
        if (interior_piece < 0) {
          interior_piece = static_cast<int>(out.pieces.size());
          out.pieces.push_back({PieceKind::interior, {}, {k}});
        }
        piece = interior_piece;
      } else {
        const Eigen::Vector3d c = dom.patch(k).point(std::span<const double>(xi.data(), dim));
        const Key key{dim - extremal, std::lround(c[0] * 1e8), std::lround(c[1] * 1e8),
                      std::lround(c[2] * 1e8)};
        auto [it, inserted] = entity_piece.try_emplace(key, static_cast<int>(out.pieces.size()));
        if (inserted) {
          const int edim = dim - extremal;
          const PieceKind kind = edim == 0 ? PieceKind::vertex
                                 : edim == 1 ? PieceKind::edge
                                             : PieceKind::face;
          out.pieces.push_back({kind, {}, {}});
        }
        piece = it->second;
      }
      Piece& pc = out.pieces[piece];
      if (pc.patches.empty() || pc.patches.back() != k) pc.patches.push_back(k);
      if (assigned[free]) continue;  // shared conforming DOF seen from another patch
      assigned[free] = 1;
      pc.dofs.push_back(free);
    }
  }
  for (Piece& pc : out.pieces) {
    std::sort(pc.patches.begin(), pc.patches.end());
    pc.patches.erase(std::unique(pc.patches.begin(), pc.patches.end()), pc.patches.end());
  }
  if (std::find(assigned.begin(), assigned.end(), 0) != assigned.end())
    throw std::logic_error("piece decomposition does not cover every free DOF");
  return out;
}

ScmsInteriorSolver::ScmsInteriorSolver(const TensorSpace& space, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("scms scaling delta must be positive");
  const int dim = space.dim();
  sigma_ = 1.0 / (delta * space.element_size() * space.element_size());
  size_ = 1;
  std::vector<Eigen::VectorXd> eig(dim);
  for (int d = 0; d < dim; ++d) {
    const SplineSpace1D& s = space[d];
    if (s.size() < 3) throw std::invalid_argument("patch has no interior basis functions");
    const ReducedSplit split = reduced_split(s);
    const Eigen::MatrixXd m = interior_block(univariate_mass(s));
    const Eigen::MatrixXd k = interior_block(univariate_stiffness(s));
    const int nl = split.n_large, nc = split.n_comp, n = nl + nc;
    split_.push_back({nl, nc});
    size_ *= n;

    // Diagonalize each block in its own mass inner product: in the large
    // block the stiffness is replaced by sigma M, the complement keeps K.
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(n);
    if (nl > 0) {
      const Eigen::MatrixXd z = split.transform.leftCols(nl);
      const Eigen::MatrixXd ml = z.transpose() * m * z;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ml);
      const Eigen::MatrixXd u = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
      v.leftCols(nl) = z * u;
    }
    if (nc > 0) {
      const Eigen::MatrixXd w = split.transform.rightCols(nc);
      const Eigen::MatrixXd mc = w.transpose() * m * w;
      const Eigen::MatrixXd kc = w.transpose() * k * w;
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(kc, mc);
      v.rightCols(nc) = w * es.eigenvectors();
      lambda.tail(nc) = es.eigenvalues();
    }
    factors_.push_back(v);
    factors_t_.push_back(v.transpose());
    eig[d] = lambda;
  }

  inv_diag_.resize(size_);
  for (int i = 0; i < size_; ++i) {
    int rest = i;
    double value = 0.0;
    for (int d = 0; d < dim; ++d) {
      const int n = split_[d][0] + split_[d][1];
      const int j = rest % n;
      value += j < split_[d][0] ? sigma_ : eig[d][j];
      rest /= n;
    }
    inv_diag_[i] = 1.0 / value;
  }
}

std::vector<int> ScmsInteriorSolver::subspace_dimensions() const {
  std::vector<int> out(std::size_t(1) << dim());
  for (std::size_t alpha = 0; alpha < out.size(); ++alpha) {
    int n = 1;
    for (int d = 0; d < dim(); ++d) n *= split_[d][(alpha >> d) & 1];
    out[alpha] = n;
  }
  return out;
}

std::vector<double> ScmsInteriorSolver::apply(std::span<const double> r) const {
  if (static_cast<int>(r.size()) != size_) throw std::invalid_argument("scms interior: wrong size");
  std::vector<double> y = apply_kronecker(factors_t_, r);
  for (int i = 0; i < size_; ++i) y[i] *= inv_diag_[i];
  return apply_kronecker(factors_, y);
}

std::shared_ptr<const ScmsInteriorSolver> scms_interior_solver(const TensorSpace& space, double delta) {
  static std::mutex mutex;
  static std::vector<std::tuple<TensorSpace, double, std::weak_ptr<const ScmsInteriorSolver>>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  for (auto& [s, d, w] : cache)
    if (d == delta && s == space)
      if (auto sp = w.lock()) return sp;
  auto sp = std::make_shared<const ScmsInteriorSolver>(space, delta);
  std::erase_if(cache, [](const auto& e) { return std::get<2>(e).expired(); });
  cache.emplace_back(space, delta, sp);
  return sp;
}

ScmsSmoother::ScmsSmoother(const DiscreteHierarchy& h, int level, const SparseMatrix& a, ScmsOptions opt)
    : pieces_(build_piece_decomposition(h, level)), tau_(opt.tau), n_(static_cast<int>(a.rows())) {
  if (!(opt.tau > 0.0)) throw std::invalid_argument("scms damping tau must be positive");
  if (!(opt.delta > 0.0)) throw std::invalid_argument("scms scaling delta must be positive");
  if (a.rows() != h.level(level).num_free()) throw std::invalid_argument("scms: matrix size mismatch");
  for (int t = 0; t < static_cast<int>(pieces_.pieces.size()); ++t) {
    const Piece& pc = pieces_.pieces[t];
    if (pc.kind == PieceKind::interior) {
      interior_.emplace_back(t, scms_interior_solver(h.space(level, pc.patches[0]), opt.delta));
      continue;
    }
    const SparseMatrix sub = principal_submatrix(a, pc.dofs);
    InterfaceSolver s;
    s.piece = t;
    s.use_dense = pc.dofs.size() <= 400;
    if (s.use_dense) {
      s.dense.compute(Eigen::MatrixXd(sub));
      if (s.dense.info() != Eigen::Success)
        throw ValidationError("interface piece matrix is not positive definite; increase the penalty parameter sigma");
    } else {
      try {
        s.sparse = Factorization(sub, Factorization::Kind::spd);
      } catch (const std::runtime_error&) {
        throw ValidationError("interface piece matrix is not positive definite; increase the penalty parameter sigma");
      }
    }
    interface_.push_back(std::move(s));
  }
}

Vector ScmsSmoother::apply(const Vector& r) const {
  if (r.size() != n_) throw std::invalid_argument("scms: wrong vector size");
  Vector out = Vector::Zero(n_);
  std::vector<double> local;
  for (const auto& [t, solver] : interior_) {
    const auto& dofs = pieces_.pieces[t].dofs;
    local.resize(dofs.size());
    for (std::size_t i = 0; i < dofs.size(); ++i) local[i] = r[dofs[i]];
    const std::vector<double> x = solver->apply(local);
    for (std::size_t i = 0; i < dofs.size(); ++i) out[dofs[i]] += x[i];
  }
  for (const InterfaceSolver& s : interface_) {
    const auto& dofs = pieces_.pieces[s.piece].dofs;
    Vector rl(dofs.size());
    for (std::size_t i = 0; i < dofs.size(); ++i) rl[i] = r[dofs[i]];
    const Vector x = s.use_dense ? Vector(s.dense.solve(rl)) : s.sparse.solve(rl);
    for (std::size_t i = 0; i < dofs.size(); ++i) out[dofs[i]] += x[i];
  }
  out *= tau_;
  return out;
}

const char* to_string(SmootherKind k) {
  switch (k) {
    case SmootherKind::gauss_seidel: return "gs";
    case SmootherKind::scms: return "scms";
    case SmootherKind::hybrid: return "hyb";
  }
  return "?";
}

LevelSmoother::LevelSmoother(SmootherKind kind, const SparseMatrix& a, std::unique_ptr<ScmsSmoother> scms)
    : kind_(kind), a_(&a), scms_(std::move(scms)) {
  if (kind != SmootherKind::gauss_seidel && !scms_)
    throw std::invalid_argument("scms and hybrid smoothing need an scms instance");
}

void LevelSmoother::scms_step(const Vector& f, Vector& u) const {
  const Vector r = f - *a_ * u;
  u += scms_->apply(r);
}

void LevelSmoother::pre_smooth(const Vector& f, Vector& u, int steps) const {
  switch (kind_) {
    case SmootherKind::gauss_seidel:
      for (int s = 0; s < steps; ++s) gs_sweep_forward(*a_, f, u);
      break;
    case SmootherKind::scms:
      for (int s = 0; s < steps; ++s) scms_step(f, u);
      break;
    case SmootherKind::hybrid:
      gs_sweep_forward(*a_, f, u);
      for (int s = 0; s < steps; ++s) scms_step(f, u);
      break;
  }
}

void LevelSmoother::post_smooth(const Vector& f, Vector& u, int steps) const {
  switch (kind_) {
    case SmootherKind::gauss_seidel:
      for (int s = 0; s < steps; ++s) gs_sweep_backward(*a_, f, u);
      break;
    case SmootherKind::scms:
      for (int s = 0; s < steps; ++s) scms_step(f, u);
      break;
    case SmootherKind::hybrid:
      for (int s = 0; s < steps; ++s) scms_step(f, u);
      gs_sweep_backward(*a_, f, u);
      break;
  }
}

}  // namespace igamg
