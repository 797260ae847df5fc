#include "igamg/multigrid.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace igamg {

int CycleConfig::smoothing_steps(int level, int finest) const {
  if (!growing_schedule) return nu;
  const int k = finest - level;
  return nu * (1 << k) * (1 + k) * (1 + k);
}

void CycleConfig::validate() const {
  if (mu != 1 && mu != 2) throw std::invalid_argument("cycle index mu must be 1 (V) or 2 (W)");
  if (nu < 0) throw std::invalid_argument("number of smoothing steps must be nonnegative");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (max_iterations < 1) throw std::invalid_argument("iteration cap must be positive");
  if (smoother != SmootherKind::gauss_seidel && !(tau > 0.0 && delta > 0.0))
    throw std::invalid_argument("scms and hybrid smoothing need positive damping and scaling");
}

Multigrid::Multigrid(const DiscreteHierarchy& h, const SparseMatrix& a_fine, CycleConfig config)
    : config_(config) {
  config_.validate();
  const int finest = h.finest_level();
  if (a_fine.rows() != h.level(finest).num_free())
    throw std::invalid_argument("multigrid: matrix does not match the finest level");
  a_.resize(finest + 1);
  p_.resize(finest + 1);
  smoothers_.resize(finest + 1);
  calls_.assign(finest + 1, 0);
  a_[finest] = std::make_shared<const SparseMatrix>(a_fine);
  for (int l = finest; l >= 1; --l) {
    p_[l] = h.prolongation(l);
    SparseMatrix coarse = p_[l].transpose() * (*a_[l]) * p_[l];
    a_[l - 1] = std::make_shared<const SparseMatrix>(0.5 * (SparseMatrix(coarse.transpose()) + coarse));
  }
  for (int l = 1; l <= finest; ++l) {
    std::unique_ptr<ScmsSmoother> scms;
    if (config_.smoother != SmootherKind::gauss_seidel)
      scms = std::make_unique<ScmsSmoother>(h, l, *a_[l], ScmsOptions{config_.tau, config_.delta});
    smoothers_[l] = std::make_unique<LevelSmoother>(config_.smoother, *a_[l], std::move(scms));
  }
  try {
    coarse_ = Factorization(*a_[0], Factorization::Kind::spd);
  } catch (const std::runtime_error&) {
    throw ValidationError("coarse-level matrix is not positive definite; increase the penalty parameter sigma");
  }
}

void Multigrid::reset_counters() const { calls_.assign(calls_.size(), 0); }

void Multigrid::visit(int level, const Vector& f, Vector& u) const {
  ++calls_[level];
  if (level == 0) {
    u = coarse_.solve(f);
    return;
  }
  const SparseMatrix& a = *a_[level];
  const LevelSmoother& sm = *smoothers_[level];
  const int nu = config_.smoothing_steps(level, finest_level());
  sm.pre_smooth(f, u, nu);
  const Vector rc = p_[level].transpose() * (f - a * u);
  Vector uc = Vector::Zero(rc.size());
  if (level == 1) {
    ++calls_[0];
    uc = coarse_.solve(rc);
  } else {
    for (int m = 0; m < config_.mu; ++m) visit(level - 1, rc, uc);
  }
  u += p_[level] * uc;
  sm.post_smooth(f, u, nu);
}

void Multigrid::cycle(int level, const Vector& f, Vector& u) const {
  if (level < 1 || level > finest_level()) throw std::invalid_argument("cycle: level must be in [1, L]");
  if (f.size() != a_[level]->rows() || u.size() != f.size()) throw std::invalid_argument("cycle: size mismatch");
  visit(level, f, u);
}

Vector Multigrid::precondition(const Vector& r) const {
  Vector u = Vector::Zero(r.size());
  if (finest_level() == 0) return coarse_.solve(r);
  visit(finest_level(), r, u);
  return u;
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::diverged: return "diverged";
    case SolveStatus::max_iterations: return "max_iterations";
  }
  return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

Vector initial_guess(const CycleConfig& c, Eigen::Index n) {
  Vector u = Vector::Zero(n);
  if (!c.random_initial_guess) return u;
  std::mt19937 rng(c.seed);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  for (auto& x : u) x = ud(rng);
  return u;
}

// True once the history is non-finite or shows `window` consecutive increases.
bool diverging(const std::vector<double>& res, int window) {
  const int n = static_cast<int>(res.size());
  if (!std::isfinite(res.back())) return true;
  if (n <= window) return false;
  for (int i = n - window; i < n; ++i)
    if (!(res[i] > res[i - 1])) return false;
  return true;
}

}  // namespace

SolveReport solve_stationary(const Multigrid& mg, const Vector& f) {
  const auto start = Clock::now();
  SolveReport rep;
  rep.method = "direct";
  rep.config = mg.config();
  const SparseMatrix& a = mg.matrix(mg.finest_level());
  const CycleConfig& cfg = mg.config();
  rep.solution = initial_guess(cfg, f.size());
  Vector r = f - a * rep.solution;
  const double r0 = r.norm();
  const double fnorm = cfg.relative_to_initial ? r0 : f.norm();
  rep.residuals.push_back(fnorm == 0.0 ? 0.0 : r0 / fnorm);
  if (f.norm() == 0.0) {
    rep.solution.setZero();
    rep.residuals.back() = 0.0;
  }
  if (f.norm() > 0.0 && rep.residuals.back() > cfg.tolerance) {
    rep.status = SolveStatus::max_iterations;
    while (rep.iterations < mg.config().max_iterations) {
      if (cfg.steepest_descent) {
        const Vector z = mg.precondition(r);
        const Vector az = a * z;
        const double alpha = r.dot(z) / z.dot(az);
        rep.solution.noalias() += alpha * z;
        r.noalias() -= alpha * az;
      } else {
        if (mg.finest_level() == 0)
          rep.solution = mg.precondition(f);
        else
          mg.cycle(mg.finest_level(), f, rep.solution);
        r = f - a * rep.solution;
      }
      ++rep.iterations;
      rep.residuals.push_back(r.norm() / fnorm);
      if (rep.residuals.back() <= mg.config().tolerance) {
        rep.status = SolveStatus::converged;
        break;
      }
      if (diverging(rep.residuals, mg.config().divergence_window)) {
        rep.status = SolveStatus::diverged;
        break;
      }
    }
  }
  rep.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return rep;
}

PreconditionerCheck check_preconditioner(const Multigrid& mg, int samples, unsigned seed) {
  const int n = static_cast<int>(mg.matrix(mg.finest_level()).rows());
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  auto random = [&] {
    Vector v(n);
    for (auto& x : v) x = nd(rng);
    return v;
  };
  PreconditionerCheck out;
  out.min_rayleigh = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    const Vector r = random(), q = random();
    const Vector br = mg.precondition(r), bq = mg.precondition(q);
    const double x = r.dot(bq), y = q.dot(br);
    const double scale = std::max({std::abs(x), std::abs(y), std::numeric_limits<double>::min()});
    out.asymmetry = std::max(out.asymmetry, std::abs(x - y) / scale);
    out.min_rayleigh = std::min({out.min_rayleigh, r.dot(br) / r.squaredNorm(), q.dot(bq) / q.squaredNorm()});
  }
  return out;
}

SolveReport solve_pcg(const Multigrid& mg, const Vector& f) {
  const auto start = Clock::now();
  const PreconditionerCheck chk = check_preconditioner(mg);
  if (chk.asymmetry > 1e-8)
    throw ValidationError("multigrid preconditioner is not symmetric (relative defect " +
                          std::to_string(chk.asymmetry) + ")");
  if (!(chk.min_rayleigh > 0.0)) throw ValidationError("multigrid preconditioner is not positive definite");

  SolveReport rep;
  rep.method = "pcg";
  rep.config = mg.config();
  const SparseMatrix& a = mg.matrix(mg.finest_level());
  const int n = static_cast<int>(f.size());
  const CycleConfig& cfg = mg.config();
  rep.solution = initial_guess(cfg, n);
  Vector r = f - a * rep.solution;
  const double fnorm = cfg.relative_to_initial ? r.norm() : f.norm();
  rep.residuals.push_back(fnorm == 0.0 ? 0.0 : r.norm() / fnorm);
  if (f.norm() == 0.0) {
    rep.solution.setZero();
    rep.residuals.back() = 0.0;
  }
  if (f.norm() > 0.0 && rep.residuals.back() > cfg.tolerance) {
    rep.status = SolveStatus::max_iterations;
    Vector z = mg.precondition(r), p = z, q(n);
    double rz = r.dot(z);
    while (rep.iterations < mg.config().max_iterations) {
      q.noalias() = a * p;
      const double alpha = rz / p.dot(q);
      rep.solution.noalias() += alpha * p;
      r.noalias() -= alpha * q;
      ++rep.iterations;
      rep.residuals.push_back(r.norm() / fnorm);
      if (rep.residuals.back() <= mg.config().tolerance) {
        rep.status = SolveStatus::converged;
        break;
      }
      if (diverging(rep.residuals, mg.config().divergence_window)) {
        rep.status = SolveStatus::diverged;
        break;
      }
      z = mg.precondition(r);
      const double rz_new = r.dot(z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
    }
  }
  rep.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return rep;
}

}  // namespace igamg
