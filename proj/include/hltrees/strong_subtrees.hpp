#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "hltrees/tree_core.hpp"

namespace hltrees {

/// A strong subtree of b^{<h}, stored as its ambient level set plus the node
/// set at each subtree level (sorted lexicographically). The required shape:
///   (a) uniquely rooted and balanced: |level j| = b^j,
///   (b) subtree level j sits inside ambient level level_set[j],
///   (c) for every non-maximal subtree node s and every direction p there is
///       exactly one next-level subtree node extending s^p.
struct StrongSubtree {
  int ambient_branching = 2;
  int ambient_height = 1;
  std::vector<int> level_set;                     // strictly increasing
  std::vector<std::vector<Node>> nodes_by_level;  // sorted per level

  int height() const { return static_cast<int>(level_set.size()); }
  const Node& root() const { return nodes_by_level.at(0).at(0); }
  HomogeneousTree ambient() const { return HomogeneousTree{ambient_branching, ambient_height}; }

  /// The whole tree b^{<h} as its own strong subtree.
  static StrongSubtree full_tree(int b, int h);
  static StrongSubtree single_node(const HomogeneousTree& tree, const Node& t);

  /// The unique subtree node one level below s extending s^p, if s sits at
  /// subtree level j and the subtree is valid.
  Node child(const Node& s, int subtree_level, int p) const;

  std::vector<Node> all_nodes() const;
  bool contains_node(const Node& t) const;

  bool operator==(const StrongSubtree&) const = default;
};

/// Tuple of strong subtrees with identical level sets.
struct VectorStrongSubtree {
  std::vector<StrongSubtree> components;

  int dimension() const { return static_cast<int>(components.size()); }
  int height() const { return components.empty() ? 0 : components.front().height(); }
  const std::vector<int>& level_set() const { return components.front().level_set; }

  LevelProductPoint root_point() const;
  /// The level product at subtree level j: all cross-coordinate tuples.
  std::vector<LevelProductPoint> level_points(int j) const;
  std::vector<LevelProductPoint> all_points() const;

  bool operator==(const VectorStrongSubtree&) const = default;
};

/// Canonical certificate order: level set, then root point, then direction
/// choices level-major and coordinate-wise. Enumeration emits in this order.
int compare_certificates(const VectorStrongSubtree& a, const VectorStrongSubtree& b);

struct ValidationResult {
  bool ok = true;
  std::string violated_clause;  // "(a)", "(b)" or "(c)" with detail
};

ValidationResult validate(const HomogeneousTree& tree, const StrongSubtree& cand);
ValidationResult validate(const VectorTree& vt, const VectorStrongSubtree& cand);

/// The unique level- and direction-preserving bijection between two strong
/// subtrees of equal branching and equal height.
struct NodeMap {
  std::map<Node, Node> forward;
  const Node& operator()(const Node& t) const;
};

NodeMap canonical_isomorphism(const StrongSubtree& src, const StrongSubtree& dst);

/// Image of a strong subtree r of src under the canonical isomorphism onto
/// dst; the image is a strong subtree of dst's ambient tree with the level
/// set carried along.
StrongSubtree map_strong_subtree(const NodeMap& iso, const StrongSubtree& r,
                                 const StrongSubtree& src, const StrongSubtree& dst);

/// Coordinate-wise canonical isomorphisms; a bijection on level products.
struct PointMap {
  std::vector<NodeMap> coordinate_maps;
  LevelProductPoint operator()(const LevelProductPoint& t) const;
};

PointMap vector_canonical_isomorphism(const VectorStrongSubtree& src,
                                      const VectorStrongSubtree& dst);

VectorStrongSubtree map_vector_strong_subtree(const PointMap& iso,
                                              const VectorStrongSubtree& r,
                                              const VectorStrongSubtree& src,
                                              const VectorStrongSubtree& dst);

/// The whole vector tree as its own vector strong subtree.
VectorStrongSubtree full_vector_subtree(const VectorTree& vt);

struct EnumerateOptions {
  bool rooted = false;                  // level set starts at 0, root at the tree root
  std::optional<int> second_level_at;   // height-2 streams: fix level_set[1]
  std::optional<std::vector<int>> fixed_level_set;
};

/// Streams every vector strong subtree of height k exactly once, in the
/// canonical certificate order. Counts grow doubly exponentially; the exact
/// total is available in closed form before any work happens.
class StrongEnumerator {
 public:
  StrongEnumerator(VectorTree vt, int k, EnumerateOptions opts = {},
                   BudgetRef budget = nullptr);

  /// Exact number of certificates this stream will emit.
  const Int& total_count() const { return total_; }

  std::optional<VectorStrongSubtree> next();

 private:
  struct Slot {
    int coord;
    int from_level_index;  // subtree level of the parent; -1 for root slots
    int parent_index;      // index of the parent in its level (lex order)
    int direction;
    Int radix;
    Int value;
  };

  bool advance_level_set();
  void setup_slots();
  bool increment_slots();
  VectorStrongSubtree materialize() const;
  Int level_set_count(const std::vector<int>& ls) const;

  VectorTree vt_;
  int k_;
  EnumerateOptions opts_;
  BudgetRef budget_;
  Int total_;
  std::vector<std::vector<int>> level_sets_;  // precomputed, lex order
  size_t ls_index_ = 0;
  std::vector<Slot> slots_;
  bool fresh_ = true;
  bool done_ = false;
};

/// Closed-form |Strong_k| under the given options.
Int count_strong(const VectorTree& vt, int k, EnumerateOptions opts = {});

/// Number of height-2 vector strong subtrees whose second level sits at a
/// fixed ambient level, as an exact geometric-sum quotient; the division is
/// exact.
Int q_formula(const std::vector<int>& b_vec, int m);

std::vector<VectorStrongSubtree> enumerate_strong(const VectorTree& vt, int k,
                                                  BudgetRef budget = nullptr);
std::vector<VectorStrongSubtree> enumerate_strong_rooted(const VectorTree& vt, int k,
                                                         BudgetRef budget = nullptr);
std::vector<VectorStrongSubtree> enumerate_strong2_at(const VectorTree& vt, int m,
                                                      BudgetRef budget = nullptr);

/// Strong_k(S) as certificates over s's ambient trees.
std::vector<VectorStrongSubtree> strong_subtrees_of(const VectorStrongSubtree& s, int k,
                                                    BudgetRef budget = nullptr);

/// Exhaustive verifier: some member of Strong_m(vt) all of whose height-k
/// vector strong subtrees share a color, or absent if none exists at this
/// height. The coloring must be total.
std::optional<VectorStrongSubtree> find_monochromatic(
    const VectorTree& vt, int m, int k,
    const std::function<int(const VectorStrongSubtree&)>& coloring,
    BudgetRef budget = nullptr);

}  // namespace hltrees
