#pragma once

#include <optional>
#include <vector>

#include "hltrees/basics.hpp"

namespace hltrees {

/// A node of the tree b^{<h}: its digit sequence over {0,...,b-1}. The level
/// of a node is the length of its sequence; the root is the empty sequence.
struct Node {
  std::vector<int> digits;

  Node() = default;
  explicit Node(std::vector<int> d) : digits(std::move(d)) {}

  int level() const { return static_cast<int>(digits.size()); }
  bool is_root() const { return digits.empty(); }

  /// The ambient immediate successor in direction p.
  Node child(int p) const {
    Node c{digits};
    c.digits.push_back(p);
    return c;
  }

  bool is_prefix_of(const Node& other) const;

  auto operator<=>(const Node&) const = default;
};

std::string node_to_string(const Node& t);

/// b^{<h}. Nodes are implicit: all digit sequences of length < height.
struct HomogeneousTree {
  int branching = 2;  // b >= 2
  int height = 1;     // h >= 1

  bool contains(const Node& t) const;
  bool is_maximal(const Node& t) const { return t.level() == height - 1; }
  Int level_size(int n) const;  // b^n
  void check_valid() const;
};

/// Nonempty tuple of trees with common height. Coordinates are 1-based in
/// reports; storage is 0-based.
struct VectorTree {
  std::vector<HomogeneousTree> trees;

  VectorTree() = default;
  explicit VectorTree(std::vector<HomogeneousTree> ts) : trees(std::move(ts)) {}
  static VectorTree uniform(const std::vector<int>& branching, int height);

  int dimension() const { return static_cast<int>(trees.size()); }
  int height() const;
  std::vector<int> branching() const;
  Int level_product_size(int n) const;  // prod_i b_i^n
  void check_valid() const;
};

/// One node per coordinate, all at the same level.
struct LevelProductPoint {
  std::vector<Node> nodes;

  LevelProductPoint() = default;
  explicit LevelProductPoint(std::vector<Node> ns) : nodes(std::move(ns)) {}

  int level() const { return nodes.empty() ? 0 : nodes.front().level(); }
  int dimension() const { return static_cast<int>(nodes.size()); }
  void check_valid() const;  // equal coordinate levels

  auto operator<=>(const LevelProductPoint&) const = default;
};

std::string point_to_string(const LevelProductPoint& t);

/// All b^n nodes of T(n) in lexicographic order.
std::vector<Node> level(const HomogeneousTree& tree, int n);

/// suc_T(t): every node of the tree having t as a (non-strict) prefix.
std::vector<Node> successors(const HomogeneousTree& tree, const Node& t);

/// The b immediate successors of t, the p-th one extending direction p.
std::vector<Node> immediate_successors(const HomogeneousTree& tree, const Node& t);

/// |F| / |T(n)| as an exact rational. F must be a subset of T(n).
Rat density(const HomogeneousTree& tree, const std::vector<Node>& F, int n);

/// |F cap suc(t)| / b^(n - level(t)). F must be a subset of T(n).
Rat relative_density(const HomogeneousTree& tree, const std::vector<Node>& F, int n,
                     const Node& t);

/// Level-averaged uniform measure of a subset of the level product:
/// the average over n < h of |A cap prod T(n)| / |prod T(n)|.
Rat fw_measure(const VectorTree& vt, const std::vector<LevelProductPoint>& A);

/// Membership in the level product of vt.
bool in_level_product(const VectorTree& vt, const LevelProductPoint& t);

/// Sorted deduplicated copy; verifies every node lies in T(n).
std::vector<Node> normalize_level_subset(const HomogeneousTree& tree,
                                         std::vector<Node> F, int n);

}  // namespace hltrees
