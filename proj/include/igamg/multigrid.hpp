#pragma once

#include <memory>
#include <string>
#include <vector>

#include "igamg/hierarchy.hpp"
#include "igamg/linsolve.hpp"
#include "igamg/smoothers.hpp"

namespace igamg {

struct CycleConfig {
  int mu = 1;  ///< 1: V-cycle, 2: W-cycle
  SmootherKind smoother = SmootherKind::gauss_seidel;
  double tau = 1.0;
  double delta = 0.12;
  int nu = 1;
  /// Scale smoothing steps by 2^{L-l} (1+L-l)^2 on coarser levels.
  bool growing_schedule = false;
  double tolerance = 1e-8;
  int max_iterations = 500;
  /// Consecutive residual increases that count as divergence.
  int divergence_window = 10;
  /// Start from uniform random values in [-1, 1) drawn with `seed` instead of zero.
  bool random_initial_guess = false;
  unsigned seed = 1;
  /// Measure residuals relative to the initial residual instead of ||f||.
  bool relative_to_initial = false;
  /// Stationary iteration: scale each cycle correction by the energy-optimal
  /// step r'z / z'Az (preconditioned steepest descent) instead of 1.
  bool steepest_descent = false;

  int smoothing_steps(int level, int finest) const;
  void validate() const;
};

/// Level hierarchy of Galerkin matrices with one smoother per level and an
/// exact factorization on level 0.
class Multigrid {
 public:
  Multigrid(const DiscreteHierarchy& h, const SparseMatrix& a_fine, CycleConfig config);

  int finest_level() const { return static_cast<int>(a_.size()) - 1; }
  const SparseMatrix& matrix(int level) const { return *a_[level]; }
  const CycleConfig& config() const { return config_; }
  const LevelSmoother& smoother(int level) const { return *smoothers_[level]; }

  /// One cycle on `level` (>= 1) updating u for A_level u = f.
  void cycle(int level, const Vector& f, Vector& u) const;
  /// One finest-level cycle from a zero initial guess.
  Vector precondition(const Vector& r) const;

  /// Number of times each level was entered by cycle() or the coarse solve.
  const std::vector<long>& level_calls() const { return calls_; }
  void reset_counters() const;

 private:
  void visit(int level, const Vector& f, Vector& u) const;

  CycleConfig config_;
  std::vector<std::shared_ptr<const SparseMatrix>> a_;
  std::vector<SparseMatrix> p_;
  std::vector<std::unique_ptr<LevelSmoother>> smoothers_;
  Factorization coarse_;
  mutable std::vector<long> calls_;
};

enum class SolveStatus { converged, diverged, max_iterations };
const char* to_string(SolveStatus s);

struct SolveReport {
  std::string method;  ///< "direct" or "pcg"
  SolveStatus status = SolveStatus::converged;
  int iterations = 0;
  /// Relative residuals; the first entry belongs to the initial guess.
  std::vector<double> residuals;
  double seconds = 0.0;
  Vector solution;
  CycleConfig config;

  double final_residual() const { return residuals.empty() ? 0.0 : residuals.back(); }
  bool ok() const { return status == SolveStatus::converged; }
};

/// Repeats cycles until the relative residual drops below the tolerance.
SolveReport solve_stationary(const Multigrid& mg, const Vector& f);

/// Conjugate gradients preconditioned by one cycle. Verifies the
/// preconditioner's symmetry and positivity on random vectors first and
/// throws ValidationError if the check fails.
SolveReport solve_pcg(const Multigrid& mg, const Vector& f);

/// Relative symmetry defect |r'Bs - s'Br| / max(|r'Bs|, |s'Br|) and the
/// smallest of r'Br / r'r over the sampled vectors.
struct PreconditionerCheck {
  double asymmetry = 0.0;
  double min_rayleigh = 0.0;
};
PreconditionerCheck check_preconditioner(const Multigrid& mg, int samples = 2, unsigned seed = 12345);

}  // namespace igamg
