#include "igamg/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "igamg/quadrature.hpp"

namespace igamg {

namespace {

using Triplet = Eigen::Triplet<double, int>;
constexpr double kPi = std::numbers::pi;

/// Collects the column sets of each row, then compresses them.
class PatternBuilder {
 public:
  explicit PatternBuilder(int n) : cols_(n) {}
  void add(int row, int col) { cols_[row].push_back(col); }

  SparseMatrix finalize() {
    const int n = static_cast<int>(cols_.size());
    std::vector<int> outer(n + 1, 0);
    std::vector<int> inner;
    for (int r = 0; r < n; ++r) {
      auto& c = cols_[r];
      std::sort(c.begin(), c.end());
      c.erase(std::unique(c.begin(), c.end()), c.end());
      inner.insert(inner.end(), c.begin(), c.end());
      outer[r + 1] = static_cast<int>(inner.size());
      std::vector<int>().swap(c);
    }
    std::vector<double> values(inner.size(), 0.0);
    return Eigen::Map<const SparseMatrix>(n, n, static_cast<Eigen::Index>(inner.size()),
                                          outer.data(), inner.data(), values.data());
  }

 private:
  std::vector<std::vector<int>> cols_;
};

void add_entry(SparseMatrix& m, int row, int col, double v) {
  const int* begin = m.innerIndexPtr() + m.outerIndexPtr()[row];
  const int* end = m.innerIndexPtr() + m.outerIndexPtr()[row + 1];
  const int* it = std::lower_bound(begin, end, col);
  m.valuePtr()[it - m.innerIndexPtr()] += v;
}

SparseMatrix symmetrized(const SparseMatrix& m) {
  SparseMatrix t = m.transpose();
  SparseMatrix s = 0.5 * (m + t);
  return s;
}

/// Univariate basis tables of one element.
struct ElementBasis {
  int first = 0;
  std::vector<double> points;
  std::vector<double> weights;
  // (p+1) x nq
  Eigen::MatrixXd value;
  Eigen::MatrixXd deriv;
};

ElementBasis element_basis(const SplineSpace1D& s, int e, int nq) {
  const auto rule = gauss_legendre(nq, s.breakpoints()[e], s.breakpoints()[e + 1]);
  ElementBasis eb;
  eb.points = rule.points;
  eb.weights = rule.weights;
  const int n = s.degree() + 1;
  eb.value.resize(n, nq);
  eb.deriv.resize(n, nq);
  for (int q = 0; q < nq; ++q) {
    const BasisValues bv = s.eval_in_element(e, rule.points[q], 1);
    eb.first = bv.first;
    eb.value.col(q) = bv.values.row(0).transpose();
    eb.deriv.col(q) = bv.values.row(1).transpose();
  }
  return eb;
}

struct PointGeometry {
  Eigen::Matrix3d jinv;
  double det = 1.0;
  Eigen::Vector3d x;
};

PointGeometry map_point(const GeometryMap& g, const std::array<double, 3>& xi, bool parametric,
                        int patch) {
  const MapValue mv = g.eval(std::span<const double>(xi.data(), g.dim()));
  PointGeometry pg;
  pg.x = mv.x;
  if (parametric) {
    pg.jinv.setIdentity();
    pg.det = 1.0;
    return pg;
  }
  pg.det = mv.jacobian.determinant();
  if (!(std::abs(pg.det) > 1e-13))
    throw ValidationError("singular Jacobian in patch " + std::to_string(patch));
  pg.jinv = mv.jacobian.inverse();
  pg.det = std::abs(pg.det);
  return pg;
}

/// Sum-factorized contraction of a coefficient array on the quadrature grid
/// (direction 0 fastest) with per-direction tables (pairs x nq). The result is
/// indexed by pair_0 + n_0 * (pair_1 + n_1 * pair_2).
void contract(int d, std::span<const Eigen::MatrixXd* const> tables, const std::vector<double>& coef,
              std::vector<double>& cur, std::vector<double>& next) {
  cur = coef;
  int npre = static_cast<int>(coef.size());
  int r_size = 1;
  for (int dir = d - 1; dir >= 0; --dir) {
    const Eigen::MatrixXd& x = *tables[dir];
    const int q = static_cast<int>(x.cols());
    const int np = static_cast<int>(x.rows());
    npre /= q;
    next.resize(static_cast<std::size_t>(npre) * np * r_size);
    for (int r = 0; r < r_size; ++r) {
      Eigen::Map<const Eigen::MatrixXd> v(cur.data() + static_cast<std::size_t>(r) * npre * q, npre, q);
      Eigen::Map<Eigen::MatrixXd> o(next.data() + static_cast<std::size_t>(r) * npre * np, npre, np);
      o.noalias() = v * x.transpose();
    }
    r_size *= np;
    std::swap(cur, next);
  }
}

/// Enumerates multi-indices of a box with the given extents, direction 0 fastest.
std::vector<MultiIndex> box_indices(int d, const std::array<int, 3>& n) {
  std::vector<MultiIndex> out;
  const int n2 = d > 2 ? n[2] : 1;
  const int n1 = d > 1 ? n[1] : 1;
  for (int i2 = 0; i2 < n2; ++i2)
    for (int i1 = 0; i1 < n1; ++i1)
      for (int i0 = 0; i0 < n[0]; ++i0) out.push_back({i0, i1, i2});
  return out;
}

/// Per-direction element tables plus the product tables X(i + P j, q).
struct DirectionTables {
  std::vector<ElementBasis> elements;
  // [element][si * 2 + sj]
  std::vector<std::array<Eigen::MatrixXd, 4>> products;
};

DirectionTables direction_tables(const SplineSpace1D& s, int nq, bool with_products) {
  DirectionTables t;
  const int n = s.degree() + 1;
  for (int e = 0; e < s.num_elements(); ++e) {
    t.elements.push_back(element_basis(s, e, nq));
    if (!with_products) continue;
    const ElementBasis& eb = t.elements.back();
    std::array<Eigen::MatrixXd, 4> prod;
    for (int si = 0; si < 2; ++si)
      for (int sj = 0; sj < 2; ++sj) {
        const Eigen::MatrixXd& bi = si ? eb.deriv : eb.value;
        const Eigen::MatrixXd& bj = sj ? eb.deriv : eb.value;
        Eigen::MatrixXd x(n * n, nq);
        for (int j = 0; j < n; ++j)
          for (int i = 0; i < n; ++i) x.row(i + n * j) = bi.row(i).cwiseProduct(bj.row(j));
        prod[si * 2 + sj] = std::move(x);
      }
    t.products.push_back(std::move(prod));
  }
  return t;
}

std::array<int, 3> element_counts(const TensorSpace& ts) {
  std::array<int, 3> n{1, 1, 1};
  for (int d = 0; d < ts.dim(); ++d) n[d] = ts[d].num_elements();
  return n;
}

/// Element stiffness/mass contributions of one patch in banded tensor storage:
/// entry (i, s) couples local row i with the neighbor at stencil offset s.
struct PatchStencil {
  int size = 0;
  std::array<int, 3> stride{1, 1, 1};
  std::vector<double> stiffness;
  std::vector<double> mass;
};

PatchStencil patch_stencil(const GeometryMap& g, const TensorSpace& ts, int patch, BulkOptions opt) {
  const int d = ts.dim();
  PatchStencil st;
  st.size = 1;
  for (int dir = 0; dir < d; ++dir) {
    st.stride[dir] = st.size;
    st.size *= 2 * ts[dir].degree() + 1;
  }
  st.stiffness.assign(static_cast<std::size_t>(ts.size()) * st.size, 0.0);
  if (opt.mass) st.mass.assign(st.stiffness.size(), 0.0);

  std::vector<DirectionTables> tab;
  std::array<int, 3> nb{1, 1, 1};
  std::array<int, 3> nq{1, 1, 1};
  for (int dir = 0; dir < d; ++dir) {
    nb[dir] = ts[dir].degree() + 1;
    nq[dir] = ts[dir].degree() + 1;
    tab.push_back(direction_tables(ts[dir], nq[dir], true));
  }
  const auto local = box_indices(d, nb);
  const auto qgrid = box_indices(d, nq);
  const int nqt = static_cast<int>(qgrid.size());
  const int nl = static_cast<int>(local.size());

  std::vector<std::vector<double>> ck(d * d, std::vector<double>(nqt));
  std::vector<double> cm(nqt);
  std::vector<double> emat(static_cast<std::size_t>(nl) * nl);
  std::vector<double> buf1, buf2;
  std::array<const Eigen::MatrixXd*, 3> x{};

  // Local row and stencil offset of each (test, trial) pair inside an element.
  std::vector<int> pair_pos(static_cast<std::size_t>(nl) * nl);
  std::vector<int> pair_off(pair_pos.size());
  for (int ti = 0; ti < nl; ++ti)
    for (int tj = 0; tj < nl; ++tj) {
      int pos = 0, pstride = 1, off = 0;
      for (int dir = 0; dir < d; ++dir) {
        pos += (local[ti][dir] + nb[dir] * local[tj][dir]) * pstride;
        pstride *= nb[dir] * nb[dir];
        off += (local[tj][dir] - local[ti][dir] + ts[dir].degree()) * st.stride[dir];
      }
      pair_pos[ti * nl + tj] = pos;
      pair_off[ti * nl + tj] = off;
    }

  for (const MultiIndex& e : box_indices(d, element_counts(ts))) {
    for (int q = 0; q < nqt; ++q) {
      std::array<double, 3> xi{0.0, 0.0, 0.0};
      double w = 1.0;
      for (int dir = 0; dir < d; ++dir) {
        const ElementBasis& eb = tab[dir].elements[e[dir]];
        xi[dir] = eb.points[qgrid[q][dir]];
        w *= eb.weights[qgrid[q][dir]];
      }
      const PointGeometry pg = map_point(g, xi, opt.parametric, patch);
      const Eigen::Matrix3d gm = pg.jinv * pg.jinv.transpose();
      const double wd = w * pg.det;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) ck[a * d + b][q] = wd * gm(a, b);
      cm[q] = wd;
    }
    std::array<int, 3> first{0, 0, 0};
    for (int dir = 0; dir < d; ++dir) first[dir] = tab[dir].elements[e[dir]].first;

    auto scatter = [&](std::vector<double>& target) {
      for (int ti = 0; ti < nl; ++ti) {
        MultiIndex mi{0, 0, 0};
        for (int dir = 0; dir < d; ++dir) mi[dir] = first[dir] + local[ti][dir];
        double* row = target.data() + static_cast<std::size_t>(ts.flatten(mi)) * st.size;
        for (int tj = 0; tj < nl; ++tj) row[pair_off[ti * nl + tj]] += emat[pair_pos[ti * nl + tj]];
      }
    };

    std::fill(emat.begin(), emat.end(), 0.0);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        const auto& c = ck[a * d + b];
        if (std::all_of(c.begin(), c.end(), [](double v) { return v == 0.0; })) continue;
        for (int dir = 0; dir < d; ++dir)
          x[dir] = &tab[dir].products[e[dir]][(dir == a ? 2 : 0) + (dir == b ? 1 : 0)];
        contract(d, std::span<const Eigen::MatrixXd* const>(x.data(), d), c, buf1, buf2);
        for (std::size_t k = 0; k < emat.size(); ++k) emat[k] += buf1[k];
      }
    scatter(st.stiffness);
    if (opt.mass) {
      for (int dir = 0; dir < d; ++dir) x[dir] = &tab[dir].products[e[dir]][0];
      contract(d, std::span<const Eigen::MatrixXd* const>(x.data(), d), cm, buf1, buf2);
      std::copy(buf1.begin(), buf1.end(), emat.begin());
      scatter(st.mass);
    }
  }
  return st;
}

/// Stencil offsets as multi-indices in [-p, p]^d, matching PatchStencil layout.
std::vector<MultiIndex> stencil_offsets(const TensorSpace& ts) {
  std::array<int, 3> n{1, 1, 1};
  for (int dir = 0; dir < ts.dim(); ++dir) n[dir] = 2 * ts[dir].degree() + 1;
  auto offs = box_indices(ts.dim(), n);
  for (auto& o : offs)
    for (int dir = 0; dir < ts.dim(); ++dir) o[dir] -= ts[dir].degree();
  return offs;
}

bool shifted(const TensorSpace& ts, const MultiIndex& mi, const MultiIndex& off, MultiIndex& out) {
  for (int dir = 0; dir < ts.dim(); ++dir) {
    out[dir] = mi[dir] + off[dir];
    if (out[dir] < 0 || out[dir] >= ts.size(dir)) return false;
  }
  return true;
}

/// Values and parametric gradients of the active tensor functions at xi in a given element.
struct LocalBasis {
  std::vector<int> local;
  std::vector<double> value;
  std::vector<Eigen::Vector3d> grad;
};

LocalBasis tensor_basis(const TensorSpace& ts, const std::array<double, 3>& xi,
                        const std::array<int, 3>& elem) {
  const int d = ts.dim();
  std::array<BasisValues, 3> b;
  std::array<int, 3> nb{1, 1, 1};
  for (int dir = 0; dir < d; ++dir) {
    b[dir] = ts[dir].eval_in_element(elem[dir], xi[dir], 1);
    nb[dir] = ts[dir].degree() + 1;
  }
  LocalBasis lb;
  for (const MultiIndex& k : box_indices(d, nb)) {
    MultiIndex mi{0, 0, 0};
    double v = 1.0;
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    g.head(d).setOnes();
    for (int dir = 0; dir < d; ++dir) {
      mi[dir] = b[dir].first + k[dir];
      v *= b[dir].values(0, k[dir]);
      for (int c = 0; c < d; ++c) g[c] *= b[dir].values(c == dir ? 1 : 0, k[dir]);
    }
    lb.local.push_back(ts.flatten(mi));
    lb.value.push_back(v);
    lb.grad.push_back(g);
  }
  return lb;
}

std::vector<double> merged_breakpoints(std::vector<double> a) {
  std::sort(a.begin(), a.end());
  std::vector<double> out;
  for (double v : a)
    if (out.empty() || v - out.back() > 1e-12) out.push_back(v);
  out.front() = 0.0;
  out.back() = 1.0;
  return out;
}

void assemble_one_interface(const DiscreteHierarchy& h, int level, const Interface& f, double coef,
                            std::vector<Triplet>& jt, std::vector<Triplet>& jpt,
                            std::vector<Triplet>& bt) {
  const MultiPatchDomain& dom = h.domain();
  const LevelSpaces& lv = h.level(level);
  const int d = dom.dim();
  const int tdim = d - 1;
  const GeometryMap& ga = dom.patch(f.patch_a);
  const GeometryMap& gb = dom.patch(f.patch_b);
  const TensorSpace& sa = lv.patch_spaces[f.patch_a];
  const TensorSpace& sb = lv.patch_spaces[f.patch_b];
  const auto ta = tangential_directions(d, f.side_a);
  const auto tb = tangential_directions(d, f.side_b);
  const int dir_a = side_direction(f.side_a);
  const int dir_b = side_direction(f.side_b);
  const Orientation& o = f.orientation;

  std::array<std::vector<double>, 2> br;
  for (int j = 0; j < tdim; ++j) br[j] = sa[ta[j]].breakpoints();
  for (int jb = 0; jb < tdim; ++jb)
    for (double u : sb[tb[jb]].breakpoints()) br[o.perm[jb]].push_back(o.flip[jb] ? 1.0 - u : u);
  for (int j = 0; j < tdim; ++j) br[j] = merged_breakpoints(br[j]);

  const int nq = std::max(sa.max_degree(), sb.max_degree()) + 1;
  const int nc1 = tdim > 1 ? static_cast<int>(br[1].size()) - 1 : 1;
  const int nc0 = static_cast<int>(br[0].size()) - 1;
  const double sign = side_value(f.side_a) ? 1.0 : -1.0;

  for (int c1 = 0; c1 < nc1; ++c1)
    for (int c0 = 0; c0 < nc0; ++c0) {
      const std::array<int, 2> cell{c0, c1};
      std::array<QuadratureRule, 2> rule;
      std::array<double, 2> mid{0.5, 0.5};
      for (int j = 0; j < tdim; ++j) {
        rule[j] = gauss_legendre(nq, br[j][cell[j]], br[j][cell[j] + 1]);
        mid[j] = 0.5 * (br[j][cell[j]] + br[j][cell[j] + 1]);
      }
      std::array<int, 3> ea{0, 0, 0}, eb{0, 0, 0};
      ea[dir_a] = side_value(f.side_a) ? sa[dir_a].num_elements() - 1 : 0;
      eb[dir_b] = side_value(f.side_b) ? sb[dir_b].num_elements() - 1 : 0;
      const auto umid = o.map(mid, tdim);
      for (int j = 0; j < tdim; ++j) {
        ea[ta[j]] = sa[ta[j]].find_element(mid[j]);
        eb[tb[j]] = sb[tb[j]].find_element(umid[j]);
      }

      std::vector<int> trace_ids, all_ids;
      Eigen::MatrixXd jloc, bloc;
      const int nq1 = tdim > 1 ? nq : 1;
      for (int q1 = 0; q1 < nq1; ++q1)
        for (int q0 = 0; q0 < nq; ++q0) {
          std::array<double, 2> t{rule[0].points[q0], tdim > 1 ? rule[1].points[q1] : 0.0};
          double wt = rule[0].weights[q0] * (tdim > 1 ? rule[1].weights[q1] : 1.0);
          const auto u = o.map(t, tdim);
          const auto xa = side_point(d, f.side_a, t);
          const auto xb = side_point(d, f.side_b, u);
          const LocalBasis ba = tensor_basis(sa, xa, ea);
          const LocalBasis bb = tensor_basis(sb, xb, eb);
          const PointGeometry pa = map_point(ga, xa, false, f.patch_a);
          const PointGeometry pb = map_point(gb, xb, false, f.patch_b);
          const Eigen::Vector3d nraw = pa.jinv.transpose().col(dir_a);
          const double nn = nraw.norm();
          const Eigen::Vector3d n = sign * nraw / nn;
          const double w = wt * pa.det * nn;

          if (trace_ids.empty()) {
            for (std::size_t i = 0; i < ba.local.size(); ++i) {
              const int full = lv.full_index(f.patch_a, ba.local[i]);
              all_ids.push_back(full);
              if (DiscreteHierarchy::on_side(sa, ba.local[i], f.side_a)) trace_ids.push_back(full);
            }
            for (std::size_t i = 0; i < bb.local.size(); ++i) {
              const int full = lv.full_index(f.patch_b, bb.local[i]);
              all_ids.push_back(full);
              if (DiscreteHierarchy::on_side(sb, bb.local[i], f.side_b)) trace_ids.push_back(full);
            }
            jloc = Eigen::MatrixXd::Zero(trace_ids.size(), trace_ids.size());
            bloc = Eigen::MatrixXd::Zero(all_ids.size(), trace_ids.size());
          }
          Eigen::VectorXd jump(trace_ids.size());
          Eigen::VectorXd avg(all_ids.size());
          int it = 0;
          for (std::size_t i = 0; i < ba.local.size(); ++i) {
            if (DiscreteHierarchy::on_side(sa, ba.local[i], f.side_a)) jump[it++] = ba.value[i];
            avg[i] = 0.5 * (pa.jinv.transpose() * ba.grad[i]).dot(n);
          }
          const std::size_t off = ba.local.size();
          for (std::size_t i = 0; i < bb.local.size(); ++i) {
            if (DiscreteHierarchy::on_side(sb, bb.local[i], f.side_b)) jump[it++] = -bb.value[i];
            avg[off + i] = 0.5 * (pb.jinv.transpose() * bb.grad[i]).dot(n);
          }
          jloc.noalias() += w * jump * jump.transpose();
          bloc.noalias() += w * avg * jump.transpose();
        }
      for (std::size_t i = 0; i < trace_ids.size(); ++i)
        for (std::size_t j = 0; j < trace_ids.size(); ++j) {
          jt.emplace_back(trace_ids[i], trace_ids[j], jloc(i, j));
          jpt.emplace_back(trace_ids[i], trace_ids[j], coef * jloc(i, j));
        }
      for (std::size_t i = 0; i < all_ids.size(); ++i)
        for (std::size_t j = 0; j < trace_ids.size(); ++j)
          if (bloc(i, j) != 0.0) bt.emplace_back(all_ids[i], trace_ids[j], bloc(i, j));
    }
}

SparseMatrix from_triplets(int n, const std::vector<Triplet>& t) {
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

/// Full-numbering system matrix K + penalized J - B - B^T (K alone when conforming).
SparseMatrix full_system_matrix(const DiscreteHierarchy& h, int level, double sigma) {
  BulkMatrices bulk = assemble_bulk_full(h, level, {.mass = false});
  if (h.coupling() == Coupling::conforming) return std::move(bulk.stiffness);
  const InterfaceMatrices im = assemble_interface_full(h, level, sigma);
  SparseMatrix bt = im.consistency.transpose();
  SparseMatrix sym = im.consistency + bt;
  SparseMatrix a = bulk.stiffness + im.penalized_jump - sym;
  return a;
}

void check_definite(const SparseMatrix& a) {
  constexpr int kMaxCheckedSize = 20000;
  if (a.rows() == 0 || a.rows() > kMaxCheckedSize) return;
  try {
    Factorization f(a, Factorization::Kind::spd);
  } catch (const std::runtime_error&) {
    throw ValidationError(
        "SIPG system matrix is not positive definite; increase the penalty parameter sigma");
  }
}

}  // namespace

double ManufacturedProblem::exact(const Eigen::Vector3d& x) const {
  double v = 1.0;
  for (int d = 0; d < dim; ++d) v *= std::sin(kPi * x[d]);
  return v;
}

double ManufacturedProblem::source(const Eigen::Vector3d& x) const {
  return source_scale * dim * kPi * kPi * exact(x);
}

BulkMatrices assemble_bulk_full(const DiscreteHierarchy& h, int level, BulkOptions opt) {
  const LevelSpaces& lv = h.level(level);
  const MultiPatchDomain& dom = h.domain();
  PatternBuilder pb(lv.num_full);
  for (int k = 0; k < dom.num_patches(); ++k) {
    const TensorSpace& ts = lv.patch_spaces[k];
    const auto offs = stencil_offsets(ts);
    MultiIndex nbr;
    for (int i = 0; i < ts.size(); ++i) {
      const MultiIndex mi = ts.unflatten(i);
      const int row = lv.full_index(k, i);
      for (const auto& o : offs)
        if (shifted(ts, mi, o, nbr)) pb.add(row, lv.full_index(k, ts.flatten(nbr)));
    }
  }
  BulkMatrices out;
  out.stiffness = pb.finalize();
  if (opt.mass) out.mass = out.stiffness;

  for (int k = 0; k < dom.num_patches(); ++k) {
    const TensorSpace& ts = lv.patch_spaces[k];
    const PatchStencil st = patch_stencil(dom.patch(k), ts, k, opt);
    const auto offs = stencil_offsets(ts);
    MultiIndex nbr;
    for (int i = 0; i < ts.size(); ++i) {
      const MultiIndex mi = ts.unflatten(i);
      const int row = lv.full_index(k, i);
      const std::size_t base = static_cast<std::size_t>(i) * st.size;
      for (std::size_t s = 0; s < offs.size(); ++s) {
        if (!shifted(ts, mi, offs[s], nbr)) continue;
        const int col = lv.full_index(k, ts.flatten(nbr));
        add_entry(out.stiffness, row, col, st.stiffness[base + s]);
        if (opt.mass) add_entry(out.mass, row, col, st.mass[base + s]);
      }
    }
  }
  out.stiffness = symmetrized(out.stiffness);
  if (opt.mass) out.mass = symmetrized(out.mass);
  return out;
}

double penalty_coefficient(const DiscreteHierarchy& h, const Interface& iface, double sigma) {
  const int l = h.finest_level();
  const TensorSpace& a = h.space(l, iface.patch_a);
  const TensorSpace& b = h.space(l, iface.patch_b);
  const double p = std::max(a.max_degree(), b.max_degree());
  const double hl = std::min(a.element_size(), b.element_size());
  return sigma * p * p / hl;
}

InterfaceMatrices assemble_interface_full(const DiscreteHierarchy& h, int level, double sigma) {
  if (h.coupling() != Coupling::dg)
    throw std::invalid_argument("interface forms are only defined for the dG coupling");
  std::vector<Triplet> jt, jpt, bt;
  for (const auto& f : h.domain().interfaces())
    assemble_one_interface(h, level, f, penalty_coefficient(h, f, sigma), jt, jpt, bt);
  const int n = h.level(level).num_full;
  InterfaceMatrices im;
  im.jump = symmetrized(from_triplets(n, jt));
  im.penalized_jump = symmetrized(from_triplets(n, jpt));
  im.consistency = from_triplets(n, bt);
  return im;
}

SparseMatrix restrict_to_free(const SparseMatrix& full, const LevelSpaces& lv) {
  return principal_submatrix(full, lv.free_to_full);
}

AssembledLevel assemble_sipg(const DiscreteHierarchy& h, int level, double sigma, bool with_mass) {
  const LevelSpaces& lv = h.level(level);
  AssembledLevel out;
  out.sigma = sigma;
  BulkMatrices bulk = assemble_bulk_full(h, level, {.mass = with_mass});
  out.stiffness = restrict_to_free(bulk.stiffness, lv);
  if (with_mass) out.mass = restrict_to_free(bulk.mass, lv);
  const int n = lv.num_free();
  if (h.coupling() == Coupling::conforming) {
    out.jump = SparseMatrix(n, n);
    out.consistency = SparseMatrix(n, n);
    out.q = out.stiffness;
    out.a = out.stiffness;
    return out;
  }
  const InterfaceMatrices im = assemble_interface_full(h, level, sigma);
  out.jump = restrict_to_free(im.jump, lv);
  out.consistency = restrict_to_free(im.consistency, lv);
  out.q = out.stiffness + restrict_to_free(im.penalized_jump, lv);
  SparseMatrix bt = out.consistency.transpose();
  SparseMatrix sym = out.consistency + bt;
  out.a = out.q - sym;
  check_definite(out.a);
  return out;
}

Vector interpolate_greville(const DiscreteHierarchy& h, int level,
                            const std::function<double(const Eigen::Vector3d&)>& fn) {
  const LevelSpaces& lv = h.level(level);
  const MultiPatchDomain& dom = h.domain();
  const int d = dom.dim();
  Vector out = Vector::Zero(lv.num_full);
  for (int k = 0; k < dom.num_patches(); ++k) {
    const TensorSpace& ts = lv.patch_spaces[k];
    std::array<std::vector<double>, 3> gr;
    for (int dir = 0; dir < d; ++dir) gr[dir] = ts[dir].greville();
    for (int i = 0; i < ts.size(); ++i) {
      const MultiIndex mi = ts.unflatten(i);
      std::array<double, 3> xi{0.0, 0.0, 0.0};
      for (int dir = 0; dir < d; ++dir) xi[dir] = gr[dir][mi[dir]];
      out[lv.full_index(k, i)] = fn(dom.patch(k).point(std::span<const double>(xi.data(), d)));
    }
  }
  return out;
}

Vector dirichlet_lift(const DiscreteHierarchy& h, int level, const ManufacturedProblem& problem) {
  const LevelSpaces& lv = h.level(level);
  Vector lift = interpolate_greville(
      h, level, [&](const Eigen::Vector3d& x) { return problem.dirichlet_scale * problem.exact(x); });
  for (int i = 0; i < lv.num_full; ++i)
    if (lv.full_to_free[i] >= 0) lift[i] = 0.0;
  return lift;
}

Vector assemble_load_full(const DiscreteHierarchy& h, int level, const ManufacturedProblem& problem) {
  const LevelSpaces& lv = h.level(level);
  const MultiPatchDomain& dom = h.domain();
  const int d = dom.dim();
  Vector load = Vector::Zero(lv.num_full);
  for (int k = 0; k < dom.num_patches(); ++k) {
    const TensorSpace& ts = lv.patch_spaces[k];
    std::vector<DirectionTables> tab;
    std::array<int, 3> nb{1, 1, 1};
    for (int dir = 0; dir < d; ++dir) {
      nb[dir] = ts[dir].degree() + 1;
      tab.push_back(direction_tables(ts[dir], nb[dir], false));
    }
    const auto local = box_indices(d, nb);
    const auto qgrid = box_indices(d, nb);
    std::vector<double> coef(qgrid.size()), buf1, buf2;
    std::array<const Eigen::MatrixXd*, 3> x{};
    for (const MultiIndex& e : box_indices(d, element_counts(ts))) {
      for (std::size_t q = 0; q < qgrid.size(); ++q) {
        std::array<double, 3> xi{0.0, 0.0, 0.0};
        double w = 1.0;
        for (int dir = 0; dir < d; ++dir) {
          const ElementBasis& eb = tab[dir].elements[e[dir]];
          xi[dir] = eb.points[qgrid[q][dir]];
          w *= eb.weights[qgrid[q][dir]];
        }
        const PointGeometry pg = map_point(dom.patch(k), xi, false, k);
        coef[q] = w * pg.det * problem.source(pg.x);
      }
      for (int dir = 0; dir < d; ++dir) x[dir] = &tab[dir].elements[e[dir]].value;
      contract(d, std::span<const Eigen::MatrixXd* const>(x.data(), d), coef, buf1, buf2);
      for (std::size_t t = 0; t < local.size(); ++t) {
        MultiIndex mi{0, 0, 0};
        for (int dir = 0; dir < d; ++dir) mi[dir] = tab[dir].elements[e[dir]].first + local[t][dir];
        load[lv.full_index(k, ts.flatten(mi))] += buf1[t];
      }
    }
  }
  return load;
}

LinearSystem assemble_system(const DiscreteHierarchy& h, const ManufacturedProblem& problem,
                             double sigma) {
  const int l = h.finest_level();
  const LevelSpaces& lv = h.level(l);
  const SparseMatrix full = full_system_matrix(h, l, sigma);
  LinearSystem sys;
  sys.lift = dirichlet_lift(h, l, problem);
  const Vector rhs_full = assemble_load_full(h, l, problem) - full * sys.lift;
  sys.f.resize(lv.num_free());
  for (int i = 0; i < lv.num_free(); ++i) sys.f[i] = rhs_full[lv.free_to_full[i]];
  sys.a = restrict_to_free(full, lv);
  if (h.coupling() == Coupling::dg) check_definite(sys.a);
  return sys;
}

Vector assemble_rhs(const DiscreteHierarchy& h, const ManufacturedProblem& problem, double sigma) {
  return assemble_system(h, problem, sigma).f;
}

Vector expand_to_full(const LevelSpaces& lv, const Vector& u_free, const Vector& lift) {
  Vector u = lift;
  for (int i = 0; i < lv.num_free(); ++i) u[lv.free_to_full[i]] = u_free[i];
  return u;
}

double l2_error(const DiscreteHierarchy& h, int level, const Vector& u_full,
                const ManufacturedProblem& problem) {
  const LevelSpaces& lv = h.level(level);
  const MultiPatchDomain& dom = h.domain();
  const int d = dom.dim();
  double err2 = 0.0;
  for (int k = 0; k < dom.num_patches(); ++k) {
    const TensorSpace& ts = lv.patch_spaces[k];
    std::vector<DirectionTables> tab;
    std::array<int, 3> nb{1, 1, 1}, nq{1, 1, 1};
    for (int dir = 0; dir < d; ++dir) {
      nb[dir] = ts[dir].degree() + 1;
      nq[dir] = ts[dir].degree() + 3;
      tab.push_back(direction_tables(ts[dir], nq[dir], false));
    }
    const auto local = box_indices(d, nb);
    const auto qgrid = box_indices(d, nq);
    for (const MultiIndex& e : box_indices(d, element_counts(ts))) {
      std::vector<double> coef(local.size());
      for (std::size_t t = 0; t < local.size(); ++t) {
        MultiIndex mi{0, 0, 0};
        for (int dir = 0; dir < d; ++dir) mi[dir] = tab[dir].elements[e[dir]].first + local[t][dir];
        coef[t] = u_full[lv.full_index(k, ts.flatten(mi))];
      }
      for (const MultiIndex& q : qgrid) {
        std::array<double, 3> xi{0.0, 0.0, 0.0};
        double w = 1.0;
        for (int dir = 0; dir < d; ++dir) {
          const ElementBasis& eb = tab[dir].elements[e[dir]];
          xi[dir] = eb.points[q[dir]];
          w *= eb.weights[q[dir]];
        }
        double uh = 0.0;
        for (std::size_t t = 0; t < local.size(); ++t) {
          double phi = 1.0;
          for (int dir = 0; dir < d; ++dir) phi *= tab[dir].elements[e[dir]].value(local[t][dir], q[dir]);
          uh += coef[t] * phi;
        }
        const PointGeometry pg = map_point(dom.patch(k), xi, false, k);
        const double diff = uh - problem.exact(pg.x);
        err2 += w * pg.det * diff * diff;
      }
    }
  }
  return std::sqrt(err2);
}

ConditionDiagnostic geometry_condition_diagnostic(const SparseMatrix& a, const SparseMatrix& a_hat) {
  if (a.rows() != a_hat.rows() || a.cols() != a_hat.cols())
    throw std::invalid_argument("diagnostic matrices must have the same dimensions");
  const Eigen::VectorXd ev =
      dense_generalized_eig(Eigen::MatrixXd(a), Eigen::MatrixXd(a_hat));
  ConditionDiagnostic cd;
  cd.lambda_min = ev.minCoeff();
  cd.lambda_max = ev.maxCoeff();
  cd.kappa = cd.lambda_max / cd.lambda_min;
  return cd;
}

std::pair<SparseMatrix, SparseMatrix> physical_and_parametric_stiffness(const DiscreteHierarchy& h,
                                                                       int level) {
  if (h.coupling() != Coupling::conforming)
    throw std::invalid_argument("the geometry diagnostic uses the conforming discretization");
  const LevelSpaces& lv = h.level(level);
  const BulkMatrices phys = assemble_bulk_full(h, level, {.mass = false});
  const BulkMatrices param = assemble_bulk_full(h, level, {.mass = false, .parametric = true});
  return {restrict_to_free(phys.stiffness, lv), restrict_to_free(param.stiffness, lv)};
}

}  // namespace igamg
