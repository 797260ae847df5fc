#include "igamg/hierarchy.hpp"

#include <numeric>
#include <string>

namespace igamg {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

SplineSpace1D mirrored(const SplineSpace1D& s) {
  std::vector<double> br(s.breakpoints().rbegin(), s.breakpoints().rend());
  for (auto& b : br) b = 1.0 - b;
  br.front() = 0.0;
  br.back() = 1.0;
  return SplineSpace1D(s.degree(), std::move(br));
}

bool same_space(const SplineSpace1D& a, const SplineSpace1D& b) {
  if (a.degree() != b.degree() || a.num_elements() != b.num_elements()) return false;
  for (int i = 0; i <= a.num_elements(); ++i)
    if (std::abs(a.breakpoints()[i] - b.breakpoints()[i]) > 1e-12) return false;
  return true;
}

void check_matching_traces(const TensorSpace& sa, const TensorSpace& sb, const Interface& f) {
  const int d = sa.dim();
  const auto ta = tangential_directions(d, f.side_a);
  const auto tb = tangential_directions(d, f.side_b);
  for (int j = 0; j < d - 1; ++j) {
    const SplineSpace1D& from_a = sa[ta[f.orientation.perm[j]]];
    const SplineSpace1D want = f.orientation.flip[j] ? mirrored(from_a) : from_a;
    if (!same_space(want, sb[tb[j]]))
      throw ValidationError("conforming coupling needs matching spline spaces on the interface "
                            "between patches " + std::to_string(f.patch_a) + " and " +
                            std::to_string(f.patch_b));
  }
}

}  // namespace

const char* to_string(Coupling c) { return c == Coupling::conforming ? "conforming" : "dg"; }
const char* to_string(SpaceRule r) { return r == SpaceRule::matching ? "matching" : "nonmatching"; }

TensorSpace patch_space(int dim, int patch, int degree, int level, SpaceRule rule,
                        int coarse_elements) {
  int p = degree;
  int e = coarse_elements;
  if (rule == SpaceRule::nonmatching) {
    switch (patch % 3) {
      case 0: e *= 2; break;
      case 1: p += 1; break;
      default: break;
    }
  }
  std::vector<SplineSpace1D> s;
  for (int d = 0; d < dim; ++d) s.push_back(SplineSpace1D::uniform(p, e, level));
  return TensorSpace(std::move(s));
}

bool DiscreteHierarchy::on_side(const TensorSpace& ts, int local, int side) {
  const MultiIndex mi = ts.unflatten(local);
  const int dir = side_direction(side);
  return mi[dir] == (side_value(side) ? ts.size(dir) - 1 : 0);
}

DiscreteHierarchy::DiscreteHierarchy(MultiPatchDomain domain, int degree, int finest_level,
                                     Coupling coupling, SpaceRule rule, int coarse_elements)
    : domain_(std::make_shared<const MultiPatchDomain>(std::move(domain))),
      degree_(degree),
      finest_(finest_level),
      coupling_(coupling),
      rule_(rule) {
  if (degree < 1) throw std::invalid_argument("spline degree must be at least 1");
  if (finest_level < 0) throw std::invalid_argument("number of refinements must be nonnegative");
  if (coarse_elements < 1) throw std::invalid_argument("coarse element count must be positive");
  if (coupling == Coupling::conforming && rule == SpaceRule::nonmatching)
    throw ValidationError("nonmatching spaces require the dG coupling");
  for (int l = 0; l <= finest_; ++l) build_level(l, coarse_elements);
  for (int l = 1; l <= finest_; ++l) prolongations_.push_back(build_prolongation(l, true));
}

void DiscreteHierarchy::build_level(int l, int coarse_elements) {
  const MultiPatchDomain& dom = *domain_;
  const int d = dom.dim();
  LevelSpaces lv;
  int n_local = 0;
  for (int k = 0; k < dom.num_patches(); ++k) {
    lv.patch_spaces.push_back(patch_space(d, k, degree_, l, rule_, coarse_elements));
    lv.patch_offset.push_back(n_local);
    n_local += lv.patch_spaces.back().size();
  }

  std::vector<char> local_dirichlet(n_local, 0);
  for (const auto& b : dom.boundary()) {
    const TensorSpace& ts = lv.patch_spaces[b.patch];
    for (int i = 0; i < ts.size(); ++i)
      if (on_side(ts, i, b.side)) local_dirichlet[lv.patch_offset[b.patch] + i] = 1;
  }

  UnionFind uf(n_local);
  if (coupling_ == Coupling::conforming) {
    for (const auto& f : dom.interfaces()) {
      const TensorSpace& sa = lv.patch_spaces[f.patch_a];
      const TensorSpace& sb = lv.patch_spaces[f.patch_b];
      check_matching_traces(sa, sb, f);
      const auto ta = tangential_directions(d, f.side_a);
      const auto tb = tangential_directions(d, f.side_b);
      std::array<int, 2> nb{1, 1};
      for (int j = 0; j < d - 1; ++j) nb[j] = sb.size(tb[j]);
      const int dir_b = side_direction(f.side_b);
      for (int i = 0; i < sa.size(); ++i) {
        if (!on_side(sa, i, f.side_a)) continue;
        const MultiIndex mi = sa.unflatten(i);
        std::array<int, 2> it{0, 0};
        for (int j = 0; j < d - 1; ++j) it[j] = mi[ta[j]];
        const auto ib = f.orientation.map_index(it, nb, d - 1);
        MultiIndex mb{0, 0, 0};
        mb[dir_b] = side_value(f.side_b) ? sb.size(dir_b) - 1 : 0;
        for (int j = 0; j < d - 1; ++j) mb[tb[j]] = ib[j];
        uf.unite(lv.patch_offset[f.patch_a] + i, lv.patch_offset[f.patch_b] + sb.flatten(mb));
      }
    }
  }

  lv.local_to_full.assign(n_local, -1);
  std::vector<int> root_to_full(n_local, -1);
  std::vector<char> full_dirichlet;
  for (int i = 0; i < n_local; ++i) {
    const int r = uf.find(i);
    if (root_to_full[r] < 0) {
      root_to_full[r] = lv.num_full++;
      full_dirichlet.push_back(0);
    }
    lv.local_to_full[i] = root_to_full[r];
    if (local_dirichlet[i]) full_dirichlet[root_to_full[r]] = 1;
  }
  lv.full_to_free.assign(lv.num_full, -1);
  for (int i = 0; i < lv.num_full; ++i) {
    if (full_dirichlet[i]) continue;
    lv.full_to_free[i] = static_cast<int>(lv.free_to_full.size());
    lv.free_to_full.push_back(i);
  }
  levels_.push_back(std::move(lv));
}

SparseMatrix DiscreteHierarchy::build_prolongation(int l, bool free_only) const {
  const LevelSpaces& fine = levels_.at(l);
  const LevelSpaces& coarse = levels_.at(l - 1);
  const int d = domain_->dim();
  std::vector<Eigen::Triplet<double, int>> trip;
  for (int k = 0; k < domain_->num_patches(); ++k) {
    const TensorSpace& cs = coarse.patch_spaces[k];
    const TensorSpace& fs = fine.patch_spaces[k];
    std::vector<Eigen::MatrixXd> r;
    for (int dir = 0; dir < d; ++dir) {
      auto ref = two_scale_refine(cs[dir]);
      if (!(ref.fine == fs[dir])) throw std::logic_error("level spaces are not dyadically nested");
      r.push_back(std::move(ref.prolongation));
    }
    for (int j = 0; j < cs.size(); ++j) {
      int col = coarse.full_index(k, j);
      if (free_only) col = coarse.full_to_free[col];
      if (col < 0) continue;
      const MultiIndex mj = cs.unflatten(j);
      // Fine rows reached from mj: nonzero rows of each univariate column.
      std::array<std::vector<std::pair<int, double>>, 3> rows;
      for (int dir = 0; dir < 3; ++dir) {
        if (dir >= d) {
          rows[dir] = {{0, 1.0}};
          continue;
        }
        for (int i = 0; i < r[dir].rows(); ++i)
          if (r[dir](i, mj[dir]) != 0.0) rows[dir].emplace_back(i, r[dir](i, mj[dir]));
      }
      for (const auto& [i2, v2] : rows[2])
        for (const auto& [i1, v1] : rows[1])
          for (const auto& [i0, v0] : rows[0]) {
            int row = fine.full_index(k, fs.flatten({i0, i1, i2}));
            if (free_only) row = fine.full_to_free[row];
            if (row < 0) continue;
            trip.emplace_back(row, col, v0 * v1 * v2);
          }
    }
  }
  const int nr = free_only ? fine.num_free() : fine.num_full;
  const int nc = free_only ? coarse.num_free() : coarse.num_full;
  SparseMatrix p(nr, nc);
  // Shared conforming functions are generated once per patch with equal values.
  p.setFromTriplets(trip.begin(), trip.end(), [](double a, double) { return a; });
  return p;
}

SparseMatrix DiscreteHierarchy::full_prolongation(int l) const { return build_prolongation(l, false); }

}  // namespace igamg
