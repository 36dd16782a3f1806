#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "hltrees/strong_subtrees.hpp"

namespace hltrees {

/// A subset of a level product, stored per level, with exact-rational density
/// queries. support_levels carries the levels on which density guarantees are
/// claimed; points may exist elsewhere too.
struct DenseSet {
  VectorTree ambient;
  std::map<int, std::vector<LevelProductPoint>> points_by_level;  // sorted unique
  std::vector<int> support_levels;                                // sorted

  static DenseSet from_points(VectorTree ambient, std::vector<LevelProductPoint> points,
                              std::vector<int> support_levels = {});

  bool contains(const LevelProductPoint& t) const;
  Int count_at(int n) const;
  Rat density_at(int n) const;
  std::vector<LevelProductPoint> all_points() const;

  bool operator==(const DenseSet&) const = default;
};

/// Complete backtracking search for the canonical-least vector strong subtree
/// of height k whose level product is contained in D. Parallel partitioning
/// splits on the level set; the result is schedule-independent.
std::optional<VectorStrongSubtree> find_subtree_in_set(const DenseSet& D, int k,
                                                       BudgetRef budget = nullptr,
                                                       int threads = 1);

/// Same search with the level set pinned.
std::optional<VectorStrongSubtree> find_subtree_with_levels(
    const DenseSet& D, const std::vector<int>& level_set, BudgetRef budget = nullptr);

struct UdhlForLResult {
  bool holds = false;
  std::optional<DenseSet> counterexample;  // lexicographically least, when false
};

/// True iff every D supported on L with per-level density >= eps contains a
/// height-k vector strong subtree with level set inside L. Exhaustive
/// adversarial search over exact-threshold level subsets (larger subsets only
/// gain subtrees; see tests).
UdhlForLResult udhl_exact_for_L(const std::vector<int>& b_vec, int k, const Rat& eps,
                                const std::vector<int>& L, int ambient_height,
                                BudgetRef budget = nullptr);

struct UdhlExactResult {
  std::optional<int> value;  // least N within the window; absent when none works
  int window = 0;
  std::optional<std::vector<int>> failing_L;  // a size-(N-1) witness, when any
  std::optional<DenseSet> counterexample;
};

/// Least N such that udhl_exact_for_L holds for every L of size N inside
/// {0,...,window-1}. Uniformity is certified only within the window.
UdhlExactResult udhl_exact(const std::vector<int>& b_vec, int k, const Rat& eps,
                           int window, BudgetRef budget = nullptr);

/// All level sets of strong subtrees contained in D, including the empty
/// level set (the empty subtree is admitted; the count bound below is tight
/// at D = T only with this convention). Sorted output.
std::vector<std::vector<int>> signature(const HomogeneousTree& tree,
                                        const std::vector<Node>& D,
                                        BudgetRef budget = nullptr);

/// Sum over levels of dens(D cap T(n)).
Rat weight(const HomogeneousTree& tree, const std::vector<Node>& D);

struct PstBoundResult {
  bool holds = false;
  Int signature_count;
  Rat weight_value;
  // the exact cross-multiplied comparison |S|^q * (b-1)^p >= b^p, w = p/q
  Int lhs;
  Int rhs;
};

/// Exact check of |signature(D)| >= (b/(b-1))^weight(D).
PstBoundResult check_pst_bound(const HomogeneousTree& tree, const std::vector<Node>& D,
                               BudgetRef budget = nullptr);

/// Map from level-product points into node sets of a further tree W: the
/// point at level n selects a subset of W(level_set[n]).
struct LevelSelection {
  VectorTree ambient;
  HomogeneousTree target;
  std::vector<int> level_set;  // size == ambient height, strictly increasing
  std::map<LevelProductPoint, std::vector<Node>> values;  // total on the level product

  void check_valid() const;
  const std::vector<Node>& section(const LevelProductPoint& t) const;
  Rat section_density(const LevelProductPoint& t) const;
  /// min over points of the section density.
  Rat density() const;
  int height() const { return ambient.height(); }

  /// Pullback onto the canonical copy of a vector strong subtree: the
  /// restricted selection lives on (b_1^{<k},...,b_d^{<k}) with the level set
  /// inherited from s's ambient levels.
  LevelSelection restrict_to(const VectorStrongSubtree& s) const;

  bool operator==(const LevelSelection&) const = default;
};

struct WitnessPair {
  VectorStrongSubtree s;
  StrongSubtree r;

  bool operator==(const WitnessPair&) const = default;
};

/// Canonical-least (S, R) of common height k with R(n) inside every section
/// over the n-th level product of S, or absent. Complete search.
std::optional<WitnessPair> find_ls_witness(const LevelSelection& sel, int k,
                                           BudgetRef budget = nullptr, int threads = 1);

struct SectionReduction {
  DenseSet good_points;     // per-level points whose section density is >= eps/2
  LevelSelection sections;  // the section map, level set = identity
};

/// Splits a (d+1)-dimensional dense set into the points of the first d
/// coordinates with section density >= eps/2 plus the section map. The output
/// satisfies |C_n| >= (eps/2)|prod T(n)| on every support level.
SectionReduction section_reduce(const DenseSet& dfull, const Rat& eps);

/// Reassembles a witness pair over an identity-level-set selection into a
/// (d+1)-dimensional vector strong subtree; validates the result.
VectorStrongSubtree glue_witness(const LevelSelection& sel, const WitnessPair& pair);

struct LsExactResult {
  std::optional<int> value;
  int window = 0;
  std::optional<LevelSelection> counterexample;
};

/// Least N such that every level selection of height N with density >= eps
/// (canonical ambient trees, level set inside the window) admits a witness
/// pair of height k. Exhaustive adversarial search, exact-threshold sections.
LsExactResult ls_exact(const std::vector<int>& b_vec_plus, int k, const Rat& eps,
                       int window, BudgetRef budget = nullptr);

}  // namespace hltrees
