#include "igamg/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "igamg/quadrature.hpp"

namespace igamg {

SplineSpace1D::SplineSpace1D(int degree, std::vector<double> breakpoints)
    : degree_(degree), breaks_(std::move(breakpoints)) {
  if (degree_ < 1) throw std::invalid_argument("spline degree must be at least 1");
  if (breaks_.size() < 2) throw std::invalid_argument("spline space needs at least one element");
  if (breaks_.front() != 0.0 || breaks_.back() != 1.0)
    throw std::invalid_argument("breakpoints must start at 0 and end at 1");
  for (std::size_t i = 1; i < breaks_.size(); ++i)
    if (!(breaks_[i] > breaks_[i - 1]))
      throw std::invalid_argument("breakpoints must be strictly increasing");
  knots_.assign(degree_ + 1, 0.0);
  knots_.insert(knots_.end(), breaks_.begin() + 1, breaks_.end() - 1);
  knots_.insert(knots_.end(), degree_ + 1, 1.0);
}

SplineSpace1D SplineSpace1D::uniform(int degree, int coarse_elements, int level) {
  if (coarse_elements < 1) throw std::invalid_argument("number of elements must be positive");
  if (level < 0) throw std::invalid_argument("level must be non-negative");
  const int m = coarse_elements << level;
  std::vector<double> br(m + 1);
  for (int i = 0; i <= m; ++i) br[i] = static_cast<double>(i) / m;
  br[m] = 1.0;
  return SplineSpace1D(degree, std::move(br));
}

SplineSpace1D SplineSpace1D::from_knots(std::span<const double> knots) {
  if (knots.size() < 4) throw std::invalid_argument("knot vector too short");
  int p = 0;
  while (p + 1 < static_cast<int>(knots.size()) && knots[p + 1] == knots[0]) ++p;
  if (p < 1) throw std::invalid_argument("knot vector must be open with degree >= 1");
  const std::size_t n = knots.size();
  if (n < 2 * static_cast<std::size_t>(p + 1))
    throw std::invalid_argument("knot vector too short for its degree");
  for (std::size_t i = n - p - 1; i < n; ++i)
    if (knots[i] != knots[n - 1])
      throw std::invalid_argument("knot vector must be open at the right end");
  if (knots[0] != 0.0 || knots[n - 1] != 1.0)
    throw std::invalid_argument("knot vector must span [0,1]");
  std::vector<double> br{0.0};
  for (std::size_t i = p + 1; i < n - p - 1; ++i) br.push_back(knots[i]);
  br.push_back(1.0);
  return SplineSpace1D(p, std::move(br));
}

double SplineSpace1D::element_size() const {
  double h = 0.0;
  for (std::size_t i = 1; i < breaks_.size(); ++i) h = std::max(h, breaks_[i] - breaks_[i - 1]);
  return h;
}

int SplineSpace1D::find_element(double x) const {
  if (!(x >= 0.0 && x <= 1.0))
    throw std::out_of_range("spline evaluation point " + std::to_string(x) + " outside [0,1]");
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
  int e = static_cast<int>(it - breaks_.begin()) - 1;
  return std::clamp(e, 0, num_elements() - 1);
}

BasisValues SplineSpace1D::eval(double x, int max_deriv) const {
  return eval_in_element(find_element(x), x, max_deriv);
}

BasisValues SplineSpace1D::eval_in_element(int element, double x, int max_deriv) const {
  // Derivatives of B-splines (Piegl & Tiller, algorithm A2.3).
  const int p = degree_;
  const int span = element + p;
  const double* U = knots_.data();
  Eigen::MatrixXd ndu(p + 1, p + 1);
  std::vector<double> left(p + 1), right(p + 1);
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - U[span + 1 - j];
    right[j] = U[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right[r + 1] + left[j - r];
      const double tmp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    ndu(j, j) = saved;
  }
  const int nd = std::min(max_deriv, p);
  BasisValues out;
  out.first = element;
  out.values = Eigen::MatrixXd::Zero(max_deriv + 1, p + 1);
  for (int j = 0; j <= p; ++j) out.values(0, j) = ndu(j, p);

  Eigen::MatrixXd a(2, p + 1);
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a(0, 0) = 1.0;
    for (int k = 1; k <= nd; ++k) {
      double d = 0.0;
      const int rk = r - k, pk = p - k;
      if (r >= k) {
        a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
        d = a(s2, 0) * ndu(rk, pk);
      }
      const int j1 = (rk >= -1) ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
        d += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
        d += a(s2, k) * ndu(r, pk);
      }
      out.values(k, r) = d;
      std::swap(s1, s2);
    }
  }
  double fac = p;
  for (int k = 1; k <= nd; ++k) {
    out.values.row(k) *= fac;
    fac *= (p - k);
  }
  return out;
}

std::vector<double> SplineSpace1D::greville() const {
  std::vector<double> g(size());
  for (int i = 0; i < size(); ++i) {
    double s = 0.0;
    for (int j = 1; j <= degree_; ++j) s += knots_[i + j];
    g[i] = s / degree_;
  }
  return g;
}

namespace {

Eigen::MatrixXd assemble_1d(const SplineSpace1D& space, int deriv) {
  const int n = space.size();
  const int p = space.degree();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  const auto& br = space.breakpoints();
  for (int e = 0; e < space.num_elements(); ++e) {
    const QuadratureRule q = gauss_legendre(p + 1, br[e], br[e + 1]);
    for (std::size_t k = 0; k < q.points.size(); ++k) {
      const BasisValues b = space.eval_in_element(e, q.points[k], deriv);
      for (int i = 0; i <= p; ++i)
        for (int j = 0; j <= p; ++j)
          m(b.first + i, b.first + j) += q.weights[k] * b.values(deriv, i) * b.values(deriv, j);
    }
  }
  return m;
}

// Boehm insertion of one knot into the coefficient columns of `coefs`.
void insert_knot(std::vector<double>& knots, int p, double u, Eigen::MatrixXd& coefs) {
  const int n = static_cast<int>(coefs.rows());
  int k = static_cast<int>(std::upper_bound(knots.begin(), knots.end(), u) - knots.begin()) - 1;
  Eigen::MatrixXd out(n + 1, coefs.cols());
  for (int i = 0; i <= k - p; ++i) out.row(i) = coefs.row(i);
  for (int i = k - p + 1; i <= k; ++i) {
    const double alpha = (u - knots[i]) / (knots[i + p] - knots[i]);
    out.row(i) = (1.0 - alpha) * coefs.row(i - 1) + alpha * coefs.row(i);
  }
  for (int i = k + 1; i <= n; ++i) out.row(i) = coefs.row(i - 1);
  knots.insert(knots.begin() + k + 1, u);
  coefs = std::move(out);
}

}  // namespace

Eigen::MatrixXd univariate_mass(const SplineSpace1D& space) { return assemble_1d(space, 0); }

Eigen::MatrixXd univariate_stiffness(const SplineSpace1D& space) { return assemble_1d(space, 1); }

TwoScaleRefinement two_scale_refine(const SplineSpace1D& space) {
  const auto& br = space.breakpoints();
  std::vector<double> fine_br;
  fine_br.reserve(2 * br.size());
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    fine_br.push_back(br[i]);
    fine_br.push_back(0.5 * (br[i] + br[i + 1]));
  }
  fine_br.push_back(1.0);

  std::vector<double> knots = space.knots();
  Eigen::MatrixXd coefs = Eigen::MatrixXd::Identity(space.size(), space.size());
  for (std::size_t i = 0; i + 1 < br.size(); ++i)
    insert_knot(knots, space.degree(), 0.5 * (br[i] + br[i + 1]), coefs);
  return {SplineSpace1D(space.degree(), std::move(fine_br)), std::move(coefs)};
}

int reduced_constraint_count(int degree) { return 2 * ((degree - 1) / 2); }

Eigen::MatrixXd interior_block(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows() - 2;
  return m.block(1, 1, n, n);
}

ReducedSplit reduced_split(const SplineSpace1D& space) {
  const int p = space.degree();
  const int n_int = space.size() - 2;
  const int n_comp = reduced_constraint_count(p);
  if (n_int < 1 || n_int < n_comp)
    throw std::invalid_argument("spline space too small to carry " + std::to_string(n_comp) +
                                " endpoint constraints");
  ReducedSplit split;
  split.n_comp = n_comp;
  split.n_large = n_int - n_comp;
  if (n_comp == 0) {
    split.transform = Eigen::MatrixXd::Identity(n_int, n_int);
    return split;
  }

  // Rows: derivative orders 2, 4, ... at x = 0, then at x = 1, each row
  // normalised so the constraints are well scaled for every h.
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n_comp, n_int);
  const int orders = n_comp / 2;
  const double h = space.element_size();
  for (int side = 0; side < 2; ++side) {
    const BasisValues b = space.eval(side == 0 ? 0.0 : 1.0, 2 * orders);
    for (int o = 0; o < orders; ++o) {
      const int row = side * orders + o;
      for (int j = 0; j <= p; ++j) {
        const int idx = b.first + j - 1;
        if (idx >= 0 && idx < n_int) c(row, idx) = b.values(2 * (o + 1), j) * std::pow(h, 2 * (o + 1));
      }
    }
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(c, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(n_comp - 1) < 1e-10 * sv(0))
    throw std::invalid_argument("endpoint constraints are linearly dependent; space too small");
  const Eigen::MatrixXd& v = svd.matrixV();

  const Eigen::MatrixXd mass = interior_block(univariate_mass(space));
  split.transform.resize(n_int, n_int);
  split.transform.leftCols(split.n_large) = v.rightCols(split.n_large);
  // M^{-1} C^T is mass-orthogonal to ker C.
  Eigen::MatrixXd comp = mass.llt().solve(c.transpose());
  for (int j = 0; j < n_comp; ++j) comp.col(j).normalize();
  split.transform.rightCols(n_comp) = comp;
  return split;
}

}  // namespace igamg
