#pragma once

#include <memory>
#include <vector>

#include "igamg/geometry.hpp"
#include "igamg/linsolve.hpp"
#include "igamg/tensor.hpp"

namespace igamg {

enum class Coupling { conforming, dg };
enum class SpaceRule { matching, nonmatching };

const char* to_string(Coupling c);
const char* to_string(SpaceRule r);

/// Spaces and degree-of-freedom numbering of one grid level.
///
/// "Local" indices concatenate the patch-local tensor indices (patch k starts
/// at `patch_offset[k]`). "Full" indices number the global basis including
/// Dirichlet functions: in conforming mode matched interface functions share
/// one full index, in dG mode full and local numbering coincide. "Free"
/// indices number the non-Dirichlet full indices in increasing order.
struct LevelSpaces {
  std::vector<TensorSpace> patch_spaces;
  std::vector<int> patch_offset;
  std::vector<int> local_to_full;
  std::vector<int> full_to_free;
  std::vector<int> free_to_full;
  int num_full = 0;

  int num_free() const { return static_cast<int>(free_to_full.size()); }
  int num_local() const { return static_cast<int>(local_to_full.size()); }
  int full_index(int patch, int local) const { return local_to_full[patch_offset[patch] + local]; }
};

/// Nested multi-patch spline spaces on levels 0..L with transfer operators.
class DiscreteHierarchy {
 public:
  DiscreteHierarchy(MultiPatchDomain domain, int degree, int finest_level, Coupling coupling,
                    SpaceRule rule, int coarse_elements = 1);

  const MultiPatchDomain& domain() const { return *domain_; }
  int degree() const { return degree_; }
  int finest_level() const { return finest_; }
  int num_levels() const { return finest_ + 1; }
  Coupling coupling() const { return coupling_; }
  SpaceRule space_rule() const { return rule_; }

  const LevelSpaces& level(int l) const { return levels_.at(l); }
  const TensorSpace& space(int l, int patch) const { return levels_.at(l).patch_spaces[patch]; }

  /// Canonical embedding of free DOFs of level l-1 into free DOFs of level l.
  const SparseMatrix& prolongation(int l) const { return prolongations_.at(l - 1); }

  /// Same embedding on full indices (Dirichlet functions included).
  SparseMatrix full_prolongation(int l) const;

  /// True if local function `local` of `patch` has a nonzero trace on `side`.
  static bool on_side(const TensorSpace& ts, int local, int side);

 private:
  void build_level(int l, int coarse_elements);
  SparseMatrix build_prolongation(int l, bool free_only) const;

  std::shared_ptr<const MultiPatchDomain> domain_;
  int degree_;
  int finest_;
  Coupling coupling_;
  SpaceRule rule_;
  std::vector<LevelSpaces> levels_;
  std::vector<SparseMatrix> prolongations_;
};

/// Spline space of patch k on level l under the given rule. Nonmatching
/// assigns by k mod 3: (p, twice the matching element count), (p+1, matching
/// count), (p, matching count), so the three groups have grid sizes h, 2h, 2h.
TensorSpace patch_space(int dim, int patch, int degree, int level, SpaceRule rule,
                        int coarse_elements = 1);

}  // namespace igamg
