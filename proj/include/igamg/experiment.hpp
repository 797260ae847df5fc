#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "igamg/geometry.hpp"
#include "igamg/multigrid.hpp"

namespace igamg {

enum class IterationMode { direct, pcg };
const char* to_string(IterationMode m);

struct ExperimentSpec {
  std::string geometry = "l_shape";
  int refinements = 4;
  int degree = 2;
  SmootherKind smoother = SmootherKind::gauss_seidel;
  bool dg = false;
  bool nonmatching = false;
  double tau = 1.0;
  double delta = 0.12;
  double sigma = 5.0;
  IterationMode mode = IterationMode::direct;
  int mu = 1;
  int nu = 1;
  bool growing_schedule = false;
  int max_iterations = 500;
  bool random_initial_guess = false;
  bool relative_to_initial = false;
  bool steepest_descent = false;
  unsigned seed = 1;

  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
  /// "conforming", "dg" or "dg-nonmatching".
  std::string discretization() const;
};

struct ExperimentResult {
  ExperimentSpec spec;
  SolveReport report;
  int num_dofs = 0;
  double setup_seconds = 0.0;
  /// Set when the cell could not be computed; the report is then empty.
  std::optional<std::string> error;

  std::string status() const;
};

/// Builtin names: unit_square, l_shape, fichera, square_grid:RxC,
/// distorted:RxC:amp:seed, distorted_fichera:amp:seed. Anything else is read
/// as a geometry file (std::ios_base::failure if it cannot be opened).
MultiPatchDomain resolve_domain(const std::string& name);

/// Builds the hierarchy, assembles the manufactured Poisson problem and solves it.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Runs one experiment per (L, p) in that order; per-cell errors are stored
/// in the result instead of being thrown.
std::vector<ExperimentResult> run_table(const ExperimentSpec& base, const std::vector<int>& levels,
                                        const std::vector<int>& degrees);

std::string csv_header();
std::string csv_row(const ExperimentResult& r);
void write_csv(std::ostream& out, const std::vector<ExperimentResult>& rows);
std::string to_json(const ExperimentResult& r);
/// Aligned iteration-count table with one row per L and one column per p.
void write_text_table(std::ostream& out, const std::vector<ExperimentResult>& rows);

}  // namespace igamg
