#include "igamg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace igamg {

namespace {

constexpr double kMatchTol = 1e-8;

struct Box {
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::max());
  Eigen::Vector3d hi = Eigen::Vector3d::Constant(std::numeric_limits<double>::lowest());

  void add(const Eigen::Vector3d& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  bool contains(const Eigen::Vector3d& p, int d, double tol) const {
    for (int i = 0; i < d; ++i)
      if (p[i] < lo[i] - tol || p[i] > hi[i] + tol) return false;
    return true;
  }
  bool intersects(const Box& o, int d, double tol) const {
    for (int i = 0; i < d; ++i)
      if (o.hi[i] < lo[i] - tol || o.lo[i] > hi[i] + tol) return false;
    return true;
  }
};

Eigen::Vector3d cp_point(const GeometryMap& g, int i) {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  for (int c = 0; c < g.dim(); ++c) p[c] = g.control_points()(i, c);
  return p;
}

Box patch_box(const GeometryMap& g) {
  Box b;
  for (int i = 0; i < g.control_points().rows(); ++i) b.add(cp_point(g, i));
  return b;
}

Box side_box(const GeometryMap& g, int side) {
  Box b;
  const int dir = side_direction(side);
  const int fixed = side_value(side) == 0 ? 0 : g.space().size(dir) - 1;
  for (int i = 0; i < g.space().size(); ++i)
    if (g.space().unflatten(i)[dir] == fixed) b.add(cp_point(g, i));
  return b;
}

std::string patch_pair(int k, int l) {
  std::ostringstream os;
  os << "patches " << k << " and " << l;
  return os.str();
}

// All orientations for a side of dimension tdim.
std::vector<Orientation> all_orientations(int tdim) {
  std::vector<Orientation> out;
  if (tdim == 0) {
    out.push_back({});
    return out;
  }
  if (tdim == 1) {
    out.push_back({{0, 1}, {false, false}});
    out.push_back({{0, 1}, {true, false}});
    return out;
  }
  for (int swap = 0; swap < 2; ++swap)
    for (int f0 = 0; f0 < 2; ++f0)
      for (int f1 = 0; f1 < 2; ++f1)
        out.push_back({swap ? std::array<int, 2>{1, 0} : std::array<int, 2>{0, 1},
                       {f0 == 1, f1 == 1}});
  return out;
}

// Tangential sample grid with `n` points per direction (including the ends).
std::vector<std::array<double, 2>> side_samples(int tdim, int n, double lo = 0.0, double hi = 1.0) {
  std::vector<std::array<double, 2>> pts;
  auto coord = [&](int i) { return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1); };
  if (tdim == 1) {
    for (int i = 0; i < n; ++i) pts.push_back({coord(i), 0.0});
  } else {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) pts.push_back({coord(i), coord(j)});
  }
  return pts;
}

Eigen::Vector3d side_eval(const GeometryMap& g, int side, std::span<const double> t) {
  const auto xi = side_point(g.dim(), side, t);
  return g.point(std::span<const double>(xi.data(), g.dim()));
}

// Gauss-Newton projection of x onto side `side` of g; returns the distance.
double distance_to_side(const GeometryMap& g, int side, const Eigen::Vector3d& x) {
  const int d = g.dim();
  const int tdim = d - 1;
  const auto tdirs = tangential_directions(d, side);
  double best = std::numeric_limits<double>::max();
  for (const auto& start : side_samples(tdim, 3, 0.1, 0.9)) {
    std::array<double, 2> t = start;
    for (int it = 0; it < 30; ++it) {
      const auto xi = side_point(d, side, t);
      const MapValue mv = g.eval(std::span<const double>(xi.data(), d));
      const Eigen::Vector3d r = mv.x - x;
      best = std::min(best, r.head(d).norm());
      Eigen::MatrixXd jt(d, tdim);
      for (int j = 0; j < tdim; ++j) jt.col(j) = mv.jacobian.block(0, tdirs[j], d, 1);
      const Eigen::VectorXd step = jt.colPivHouseholderQr().solve(-r.head(d));
      for (int j = 0; j < tdim; ++j) t[j] = std::clamp(t[j] + step[j], 0.0, 1.0);
      if (step.norm() < 1e-14) break;
    }
  }
  return best;
}

// Newton inversion of g at x; true when x = g(xi) with xi strictly inside the cube.
bool strictly_inside(const GeometryMap& g, const Eigen::Vector3d& x) {
  const int d = g.dim();
  std::array<double, 3> xi{0.5, 0.5, 0.5};
  for (int it = 0; it < 50; ++it) {
    const MapValue mv = g.eval(std::span<const double>(xi.data(), d));
    const Eigen::VectorXd r = (mv.x - x).head(d);
    if (r.norm() < 1e-11) {
      for (int c = 0; c < d; ++c)
        if (xi[c] < 1e-6 || xi[c] > 1.0 - 1e-6) return false;
      return true;
    }
    const Eigen::VectorXd step = mv.jacobian.topLeftCorner(d, d).partialPivLu().solve(-r);
    for (int c = 0; c < d; ++c) xi[c] = std::clamp(xi[c] + step[c], 0.0, 1.0);
  }
  return false;
}

double uniform_pm1(std::mt19937_64& rng) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

}  // namespace

GeometryMap::GeometryMap(TensorSpace space, Eigen::MatrixXd control_points,
                         std::vector<double> weights)
    : space_(std::move(space)), cps_(std::move(control_points)), weights_(std::move(weights)) {
  if (cps_.rows() != space_.size() || cps_.cols() != space_.dim())
    throw std::invalid_argument("geometry map: control point array has wrong shape");
  if (!weights_.empty()) {
    if (static_cast<int>(weights_.size()) != space_.size())
      throw std::invalid_argument("geometry map: wrong number of weights");
    for (double w : weights_)
      if (!(w > 0.0)) throw std::invalid_argument("geometry map: weights must be positive");
  }
}

GeometryMap GeometryMap::box(std::span<const double> origin, std::span<const double> extent) {
  const int d = static_cast<int>(origin.size());
  std::vector<SplineSpace1D> sp(d, SplineSpace1D(1, {0.0, 1.0}));
  TensorSpace ts(std::move(sp));
  Eigen::MatrixXd cps(ts.size(), d);
  for (int i = 0; i < ts.size(); ++i) {
    const MultiIndex mi = ts.unflatten(i);
    for (int c = 0; c < d; ++c) cps(i, c) = origin[c] + mi[c] * extent[c];
  }
  return GeometryMap(std::move(ts), std::move(cps));
}

MapValue GeometryMap::eval(std::span<const double> xi) const {
  const int d = dim();
  std::array<BasisValues, 3> b;
  for (int c = 0; c < d; ++c) b[c] = space_[c].eval(xi[c], 1);
  MapValue mv;
  mv.jacobian.setZero();
  if (d < 3) mv.jacobian(2, 2) = 1.0;
  if (d < 2) mv.jacobian(1, 1) = 1.0;
  const int p0 = space_[0].degree() + 1;
  const int p1 = d > 1 ? space_[1].degree() + 1 : 1;
  const int p2 = d > 2 ? space_[2].degree() + 1 : 1;
  double w_sum = 0.0;
  Eigen::Vector3d dw = Eigen::Vector3d::Zero();
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  Eigen::Matrix3d dx = Eigen::Matrix3d::Zero();
  for (int k2 = 0; k2 < p2; ++k2)
    for (int k1 = 0; k1 < p1; ++k1)
      for (int k0 = 0; k0 < p0; ++k0) {
        MultiIndex mi{b[0].first + k0, d > 1 ? b[1].first + k1 : 0, d > 2 ? b[2].first + k2 : 0};
        const int idx = space_.flatten(mi);
        const std::array<int, 3> loc{k0, k1, k2};
        double val = 1.0;
        Eigen::Vector3d grad = Eigen::Vector3d::Ones();
        for (int c = 0; c < d; ++c) {
          val *= b[c].values(0, loc[c]);
          for (int g = 0; g < d; ++g) grad[g] *= b[c].values(g == c ? 1 : 0, loc[c]);
        }
        const double w = weights_.empty() ? 1.0 : weights_[idx];
        w_sum += w * val;
        dw.head(d) += w * grad.head(d);
        for (int c = 0; c < d; ++c) {
          x[c] += w * val * cps_(idx, c);
          for (int g = 0; g < d; ++g) dx(c, g) += w * grad[g] * cps_(idx, c);
        }
      }
  mv.x = x / w_sum;
  for (int c = 0; c < d; ++c)
    for (int g = 0; g < d; ++g) mv.jacobian(c, g) = (dx(c, g) - mv.x[c] * dw[g]) / w_sum;
  return mv;
}

std::vector<int> tangential_directions(int dim, int side) {
  std::vector<int> t;
  for (int d = 0; d < dim; ++d)
    if (d != side_direction(side)) t.push_back(d);
  return t;
}

std::array<double, 3> side_point(int dim, int side, std::span<const double> t) {
  std::array<double, 3> xi{0.0, 0.0, 0.0};
  int j = 0;
  for (int d = 0; d < dim; ++d) {
    if (d == side_direction(side))
      xi[d] = side_value(side);
    else
      xi[d] = t[j++];
  }
  return xi;
}

std::array<double, 2> Orientation::map(std::span<const double> t, int tdim) const {
  std::array<double, 2> u{0.0, 0.0};
  for (int j = 0; j < tdim; ++j) {
    const double v = t[perm[j]];
    u[j] = flip[j] ? 1.0 - v : v;
  }
  return u;
}

std::array<int, 2> Orientation::map_index(std::span<const int> ia, std::span<const int> nb,
                                          int tdim) const {
  std::array<int, 2> ib{0, 0};
  for (int j = 0; j < tdim; ++j) {
    const int v = ia[perm[j]];
    ib[j] = flip[j] ? nb[j] - 1 - v : v;
  }
  return ib;
}

MultiPatchDomain::MultiPatchDomain(std::vector<GeometryMap> patches,
                                   std::vector<Interface> interfaces)
    : patches_(std::move(patches)), interfaces_(std::move(interfaces)) {
  if (patches_.empty()) throw ValidationError("multi-patch domain needs at least one patch");
  const int d = patches_.front().dim();
  if (d < 2 || d > 3) throw ValidationError("only 2D and 3D domains are supported");
  for (const auto& p : patches_)
    if (p.dim() != d) throw ValidationError("all patches must have the same dimension");
  std::sort(interfaces_.begin(), interfaces_.end(), [](const Interface& a, const Interface& b) {
    return std::tie(a.patch_a, a.patch_b, a.side_a) < std::tie(b.patch_a, b.patch_b, b.side_a);
  });
  side_interface_.assign(patches_.size() * 2 * d, -1);
  for (std::size_t i = 0; i < interfaces_.size(); ++i) {
    const auto& f = interfaces_[i];
    if (f.patch_a < 0 || f.patch_b >= num_patches() || f.patch_a >= f.patch_b)
      throw ValidationError("interface patch indices must satisfy 0 <= a < b < K");
    for (auto [k, s] : {std::pair{f.patch_a, f.side_a}, std::pair{f.patch_b, f.side_b}}) {
      if (s < 0 || s >= 2 * d) throw ValidationError("interface side index out of range");
      int& slot = side_interface_[k * 2 * d + s];
      if (slot >= 0)
        throw ValidationError("side " + std::to_string(s) + " of patch " + std::to_string(k) +
                              " lies on more than one interface");
      slot = static_cast<int>(i);
    }
  }
  for (int k = 0; k < num_patches(); ++k)
    for (int s = 0; s < 2 * d; ++s)
      if (side_interface_[k * 2 * d + s] < 0) boundary_.push_back({k, s});
}

bool MultiPatchDomain::is_boundary(int patch, int side) const {
  return interface_at(patch, side) < 0;
}

int MultiPatchDomain::interface_at(int patch, int side) const {
  return side_interface_[patch * 2 * dim() + side];
}

void check_bijective(const GeometryMap& map, int patch_index, int samples) {
  const int d = map.dim();
  int sign = 0;
  std::array<double, 3> xi{};
  const int total = static_cast<int>(std::pow(samples, d));
  for (int s = 0; s < total; ++s) {
    int r = s;
    for (int c = 0; c < d; ++c) {
      xi[c] = static_cast<double>(r % samples) / (samples - 1);
      r /= samples;
    }
    const double det = map.eval(std::span<const double>(xi.data(), d))
                           .jacobian.topLeftCorner(d, d)
                           .determinant();
    const int sg = det > 1e-12 ? 1 : (det < -1e-12 ? -1 : 0);
    if (sg == 0 || (sign != 0 && sg != sign))
      throw ValidationError("geometry map of patch " + std::to_string(patch_index) +
                            " is not bijective (Jacobian determinant changes sign)");
    sign = sg;
  }
}

double interface_mismatch(const MultiPatchDomain& domain, const Interface& f, int samples) {
  const int d = domain.dim();
  const auto& ga = domain.patch(f.patch_a);
  const auto& gb = domain.patch(f.patch_b);
  double worst = 0.0;
  for (const auto& t : side_samples(d - 1, samples)) {
    const auto u = f.orientation.map(t, d - 1);
    worst = std::max(worst, (side_eval(ga, f.side_a, t) - side_eval(gb, f.side_b, u)).norm());
  }
  return worst;
}

MultiPatchDomain detect_interfaces(std::vector<GeometryMap> patches) {
  if (patches.empty()) throw ValidationError("multi-patch domain needs at least one patch");
  const int d = patches.front().dim();
  for (std::size_t k = 0; k < patches.size(); ++k) {
    if (patches[k].dim() != d) throw ValidationError("all patches must have the same dimension");
    check_bijective(patches[k], static_cast<int>(k));
  }
  const int tdim = d - 1;
  const int nsides = 2 * d;
  const auto orientations = all_orientations(tdim);
  const auto corners = side_samples(tdim, 2);
  const auto dense = side_samples(tdim, d == 2 ? 33 : 17);
  const auto inner = side_samples(tdim, 5, 0.1, 0.9);

  std::vector<Box> pboxes;
  for (const auto& g : patches) pboxes.push_back(patch_box(g));

  std::vector<Interface> found;
  const int K = static_cast<int>(patches.size());
  for (int k = 0; k < K; ++k) {
    for (int l = k + 1; l < K; ++l) {
      if (!pboxes[k].intersects(pboxes[l], d, kMatchTol)) continue;
      const auto& ga = patches[k];
      const auto& gb = patches[l];

      // Overlap: interior sample points of one patch strictly inside the other.
      for (auto [gi, gj, bj] : {std::tuple{&ga, &gb, &pboxes[l]}, std::tuple{&gb, &ga, &pboxes[k]}}) {
        const int n = d == 2 ? 9 : 27;
        for (int s = 0; s < n; ++s) {
          std::array<double, 3> xi{0.25 + 0.25 * (s % 3), 0.25 + 0.25 * ((s / 3) % 3),
                                   0.25 + 0.25 * (s / 9)};
          const Eigen::Vector3d x = gi->point(std::span<const double>(xi.data(), d));
          if (bj->contains(x, d, -1e-10) && strictly_inside(*gj, x))
            throw ValidationError(patch_pair(k, l) + " overlap");
        }
      }

      for (int sa = 0; sa < nsides; ++sa) {
        const Box ba = side_box(ga, sa);
        for (int sb = 0; sb < nsides; ++sb) {
          const Box bb = side_box(gb, sb);
          if (!ba.intersects(bb, d, kMatchTol)) continue;
          bool matched = false;
          for (const auto& o : orientations) {
            bool ok = true;
            for (const auto& t : corners) {
              if ((side_eval(ga, sa, t) - side_eval(gb, sb, o.map(t, tdim))).norm() > kMatchTol) {
                ok = false;
                break;
              }
            }
            if (!ok) continue;
            for (const auto& t : dense) {
              if ((side_eval(ga, sa, t) - side_eval(gb, sb, o.map(t, tdim))).norm() > kMatchTol) {
                ok = false;
                break;
              }
            }
            if (ok) {
              found.push_back({k, sa, l, sb, o});
              matched = true;
              break;
            }
          }
          if (matched) continue;
          // Hanging or partially matching sides: interior points of one side on the other.
          for (auto [g1, s1, g2, s2, b2] :
               {std::tuple{&ga, sa, &gb, sb, &bb}, std::tuple{&gb, sb, &ga, sa, &ba}}) {
            for (const auto& t : inner) {
              const Eigen::Vector3d x = side_eval(*g1, s1, t);
              if (!b2->contains(x, d, kMatchTol)) continue;
              if (distance_to_side(*g2, s2, x) < kMatchTol)
                throw ValidationError(patch_pair(k, l) + " share a side only partially (side " +
                                      std::to_string(sa) + " of patch " + std::to_string(k) +
                                      ", side " + std::to_string(sb) + " of patch " +
                                      std::to_string(l) + ")");
            }
          }
        }
      }
    }
  }
  return MultiPatchDomain(std::move(patches), std::move(found));
}

MultiPatchDomain unit_square() {
  const std::array<double, 2> o{0.0, 0.0}, e{1.0, 1.0};
  return detect_interfaces({GeometryMap::box(o, e)});
}

MultiPatchDomain l_shape() {
  const std::array<double, 2> e{1.0, 1.0};
  std::vector<GeometryMap> p;
  for (auto o : {std::array<double, 2>{0.0, 0.0}, std::array<double, 2>{1.0, 0.0},
                 std::array<double, 2>{0.0, 1.0}})
    p.push_back(GeometryMap::box(o, e));
  return detect_interfaces(std::move(p));
}

MultiPatchDomain fichera() {
  const std::array<double, 3> e{1.0, 1.0, 1.0};
  std::vector<GeometryMap> p;
  for (int z = 0; z < 2; ++z)
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 2; ++x) {
        if (x == 1 && y == 1 && z == 1) continue;
        const std::array<double, 3> o{double(x), double(y), double(z)};
        p.push_back(GeometryMap::box(o, e));
      }
  return detect_interfaces(std::move(p));
}

MultiPatchDomain square_grid(int rows, int cols) {
  if (rows < 1 || cols < 1) throw ValidationError("square_grid needs at least one row and column");
  const std::array<double, 2> e{1.0, 1.0};
  std::vector<GeometryMap> p;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const std::array<double, 2> o{double(c), double(r)};
      p.push_back(GeometryMap::box(o, e));
    }
  return detect_interfaces(std::move(p));
}

MultiPatchDomain distorted_grid(int rows, int cols, double amplitude, std::uint64_t seed) {
  if (rows < 1 || cols < 1) throw ValidationError("distorted_grid needs at least one row and column");
  if (amplitude < 0.0) throw ValidationError("distortion amplitude must be non-negative");
  std::mt19937_64 rng(seed);
  // Grid vertices; only those off the outer boundary move.
  std::vector<Eigen::Vector2d> vert((rows + 1) * (cols + 1));
  for (int r = 0; r <= rows; ++r)
    for (int c = 0; c <= cols; ++c) {
      Eigen::Vector2d v(c, r);
      if (r > 0 && r < rows && c > 0 && c < cols) {
        v.x() += amplitude * uniform_pm1(rng);
        v.y() += amplitude * uniform_pm1(rng);
      }
      vert[r * (cols + 1) + c] = v;
    }
  const SplineSpace1D cubic(3, {0.0, 1.0});
  const TensorSpace ts({cubic, cubic});
  std::vector<GeometryMap> patches;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const Eigen::Vector2d v00 = vert[r * (cols + 1) + c], v10 = vert[r * (cols + 1) + c + 1];
      const Eigen::Vector2d v01 = vert[(r + 1) * (cols + 1) + c];
      const Eigen::Vector2d v11 = vert[(r + 1) * (cols + 1) + c + 1];
      Eigen::MatrixXd cps(16, 2);
      for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) {
          const double s = i / 3.0, t = j / 3.0;
          Eigen::Vector2d x = (1 - s) * (1 - t) * v00 + s * (1 - t) * v10 + (1 - s) * t * v01 +
                              s * t * v11;
          if (i > 0 && i < 3 && j > 0 && j < 3) {
            x.x() += amplitude * uniform_pm1(rng);
            x.y() += amplitude * uniform_pm1(rng);
          }
          cps.row(i + 4 * j) = x.transpose();
        }
      GeometryMap g(ts, std::move(cps));
      try {
        check_bijective(g, static_cast<int>(patches.size()), 17);
      } catch (const ValidationError&) {
        throw ValidationError("distortion amplitude " + std::to_string(amplitude) +
                              " makes the map of patch " + std::to_string(patches.size()) +
                              " non-bijective");
      }
      patches.push_back(std::move(g));
    }
  return detect_interfaces(std::move(patches));
}

MultiPatchDomain distorted_fichera(double amplitude, std::uint64_t seed) {
  if (amplitude < 0.0) throw ValidationError("distortion amplitude must be non-negative");
  std::mt19937_64 rng(seed);
  const SplineSpace1D quad(2, {0.0, 1.0});
  const TensorSpace ts({quad, quad, quad});
  std::vector<GeometryMap> patches;
  for (int z = 0; z < 2; ++z)
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 2; ++x) {
        if (x == 1 && y == 1 && z == 1) continue;
        Eigen::MatrixXd cps(27, 3);
        for (int i = 0; i < 27; ++i) {
          const MultiIndex mi = ts.unflatten(i);
          cps(i, 0) = x + 0.5 * mi[0];
          cps(i, 1) = y + 0.5 * mi[1];
          cps(i, 2) = z + 0.5 * mi[2];
        }
        for (int c = 0; c < 3; ++c) cps(13, c) += amplitude * uniform_pm1(rng);
        GeometryMap g(ts, std::move(cps));
        try {
          check_bijective(g, static_cast<int>(patches.size()), 9);
        } catch (const ValidationError&) {
          throw ValidationError("distortion amplitude " + std::to_string(amplitude) +
                                " makes the map of patch " + std::to_string(patches.size()) +
                                " non-bijective");
        }
        patches.push_back(std::move(g));
      }
  return detect_interfaces(std::move(patches));
}

}  // namespace igamg
