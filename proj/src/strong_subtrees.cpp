#include "hltrees/strong_subtrees.hpp"

#include <algorithm>
#include <cassert>

namespace hltrees {

namespace {

std::vector<int> digits_of(Int value, int base, int width) {
  std::vector<int> out(width, 0);
  for (int i = width - 1; i >= 0; --i) {
    Int q, r;
    mpz_fdiv_qr_ui(q.get_mpz_t(), r.get_mpz_t(), value.get_mpz_t(), base);
    out[i] = static_cast<int>(r.get_ui());
    value = q;
  }
  if (value != 0) throw DomainError("digit index out of range");
  return out;
}

// Combinations of {lo,...,hi-1} of given size, lexicographic.
std::vector<std::vector<int>> combinations(int lo, int hi, int size) {
  std::vector<std::vector<int>> out;
  if (size == 0) {
    out.push_back({});
    return out;
  }
  if (hi - lo < size) return out;
  std::vector<int> cur(size);
  for (int i = 0; i < size; ++i) cur[i] = lo + i;
  while (true) {
    out.push_back(cur);
    int i = size - 1;
    while (i >= 0 && cur[i] == hi - size + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < size; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

}  // namespace

StrongSubtree StrongSubtree::full_tree(int b, int h) {
  HomogeneousTree tree{b, h};
  tree.check_valid();
  StrongSubtree out;
  out.ambient_branching = b;
  out.ambient_height = h;
  for (int n = 0; n < h; ++n) {
    out.level_set.push_back(n);
    out.nodes_by_level.push_back(level(tree, n));
  }
  return out;
}

StrongSubtree StrongSubtree::single_node(const HomogeneousTree& tree, const Node& t) {
  if (!tree.contains(t)) throw DomainError("node-not-in-tree: " + node_to_string(t));
  StrongSubtree out;
  out.ambient_branching = tree.branching;
  out.ambient_height = tree.height;
  out.level_set = {t.level()};
  out.nodes_by_level = {{t}};
  return out;
}

Node StrongSubtree::child(const Node& s, int subtree_level, int p) const {
  const auto& next = nodes_by_level.at(subtree_level + 1);
  Node prefix = s.child(p);
  auto it = std::lower_bound(next.begin(), next.end(), prefix);
  if (it == next.end() || !prefix.is_prefix_of(*it))
    throw DomainError("no subtree child of " + node_to_string(s) + " in direction " +
                      std::to_string(p));
  return *it;
}

std::vector<Node> StrongSubtree::all_nodes() const {
  std::vector<Node> out;
  for (const auto& lvl : nodes_by_level) out.insert(out.end(), lvl.begin(), lvl.end());
  return out;
}

bool StrongSubtree::contains_node(const Node& t) const {
  for (size_t j = 0; j < level_set.size(); ++j) {
    if (level_set[j] != t.level()) continue;
    const auto& lvl = nodes_by_level[j];
    return std::binary_search(lvl.begin(), lvl.end(), t);
  }
  return false;
}

LevelProductPoint VectorStrongSubtree::root_point() const {
  std::vector<Node> nodes;
  nodes.reserve(components.size());
  for (const auto& c : components) nodes.push_back(c.root());
  return LevelProductPoint{std::move(nodes)};
}

std::vector<LevelProductPoint> VectorStrongSubtree::level_points(int j) const {
  std::vector<LevelProductPoint> out;
  out.push_back(LevelProductPoint{{}});
  for (const auto& c : components) {
    std::vector<LevelProductPoint> next;
    next.reserve(out.size() * c.nodes_by_level.at(j).size());
    for (const auto& partial : out) {
      for (const auto& node : c.nodes_by_level.at(j)) {
        LevelProductPoint ext = partial;
        ext.nodes.push_back(node);
        next.push_back(std::move(ext));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::vector<LevelProductPoint> VectorStrongSubtree::all_points() const {
  std::vector<LevelProductPoint> out;
  for (int j = 0; j < height(); ++j) {
    auto pts = level_points(j);
    out.insert(out.end(), pts.begin(), pts.end());
  }
  return out;
}

int compare_certificates(const VectorStrongSubtree& a, const VectorStrongSubtree& b) {
  if (a.level_set() != b.level_set())
    return a.level_set() < b.level_set() ? -1 : 1;
  // Equal level sets force equal shapes; walk levels major, coordinates minor.
  for (int j = 0; j < a.height(); ++j) {
    for (int i = 0; i < a.dimension(); ++i) {
      const auto& la = a.components[i].nodes_by_level[j];
      const auto& lb = b.components[i].nodes_by_level[j];
      if (la != lb) return la < lb ? -1 : 1;
    }
  }
  return 0;
}

ValidationResult validate(const HomogeneousTree& tree, const StrongSubtree& cand) {
  tree.check_valid();
  if (cand.ambient_branching != tree.branching || cand.ambient_height != tree.height)
    throw DomainError("ambient parameters of candidate do not match tree");
  int k = cand.height();
  if (k < 1 || cand.nodes_by_level.size() != cand.level_set.size())
    throw DomainError("malformed certificate: level structure");
  for (int j = 0; j + 1 < k; ++j)
    if (cand.level_set[j] >= cand.level_set[j + 1])
      throw DomainError("malformed certificate: level set not strictly increasing");

  const int b = tree.branching;
  // (a) uniquely rooted and balanced
  if (cand.nodes_by_level[0].size() != 1)
    return {false, "(a) not uniquely rooted"};
  for (int j = 0; j + 1 < k; ++j) {
    if (cand.nodes_by_level[j + 1].size() !=
        cand.nodes_by_level[j].size() * static_cast<size_t>(b))
      return {false, "(a) not balanced at subtree level " + std::to_string(j + 1)};
  }
  // (b) levels inside ambient levels
  for (int j = 0; j < k; ++j) {
    if (cand.level_set[j] < 0 || cand.level_set[j] >= tree.height)
      return {false, "(b) level " + std::to_string(cand.level_set[j]) + " outside tree"};
    for (const auto& s : cand.nodes_by_level[j]) {
      if (s.level() != cand.level_set[j] || !tree.contains(s))
        return {false, "(b) node " + node_to_string(s) + " not in T(" +
                           std::to_string(cand.level_set[j]) + ")"};
    }
  }
  // (c) exactly one next-level node per direction
  for (int j = 0; j + 1 < k; ++j) {
    const auto& next = cand.nodes_by_level[j + 1];
    for (const auto& s : cand.nodes_by_level[j]) {
      for (int p = 0; p < b; ++p) {
        Node prefix = s.child(p);
        int count = 0;
        for (const auto& t : next)
          if (prefix.is_prefix_of(t)) ++count;
        if (count != 1)
          return {false, "(c) direction " + std::to_string(p) + " of " +
                             node_to_string(s) + " covered " + std::to_string(count) +
                             " times"};
      }
    }
  }
  return {true, ""};
}

ValidationResult validate(const VectorTree& vt, const VectorStrongSubtree& cand) {
  vt.check_valid();
  if (cand.dimension() != vt.dimension())
    throw DomainError("dimension mismatch between candidate and vector tree");
  for (int i = 0; i < cand.dimension(); ++i) {
    if (cand.components[i].level_set != cand.components[0].level_set)
      return {false, "common level set violated at coordinate " + std::to_string(i + 1)};
    auto res = validate(vt.trees[i], cand.components[i]);
    if (!res.ok) {
      res.violated_clause =
          "coordinate " + std::to_string(i + 1) + ": " + res.violated_clause;
      return res;
    }
  }
  return {true, ""};
}

const Node& NodeMap::operator()(const Node& t) const {
  auto it = forward.find(t);
  if (it == forward.end())
    throw DomainError("node " + node_to_string(t) + " outside isomorphism domain");
  return it->second;
}

NodeMap canonical_isomorphism(const StrongSubtree& src, const StrongSubtree& dst) {
  if (src.ambient_branching != dst.ambient_branching)
    throw DomainError("incompatibility: unequal branching numbers");
  if (src.height() != dst.height())
    throw DomainError("incompatibility: unequal heights");
  NodeMap iso;
  iso.forward[src.root()] = dst.root();
  const int b = src.ambient_branching;
  for (int j = 0; j + 1 < src.height(); ++j) {
    for (const auto& s : src.nodes_by_level[j]) {
      const Node& image = iso.forward.at(s);
      for (int p = 0; p < b; ++p)
        iso.forward[src.child(s, j, p)] = dst.child(image, j, p);
    }
  }
  return iso;
}

StrongSubtree map_strong_subtree(const NodeMap& iso, const StrongSubtree& r,
                                 const StrongSubtree& src, const StrongSubtree& dst) {
  StrongSubtree out;
  out.ambient_branching = dst.ambient_branching;
  out.ambient_height = dst.ambient_height;
  for (int j = 0; j < r.height(); ++j) {
    auto pos = std::find(src.level_set.begin(), src.level_set.end(), r.level_set[j]);
    if (pos == src.level_set.end())
      throw DomainError("subtree level outside the source level set");
    out.level_set.push_back(dst.level_set[pos - src.level_set.begin()]);
    std::vector<Node> mapped;
    mapped.reserve(r.nodes_by_level[j].size());
    for (const auto& t : r.nodes_by_level[j]) mapped.push_back(iso(t));
    std::sort(mapped.begin(), mapped.end());
    out.nodes_by_level.push_back(std::move(mapped));
  }
  return out;
}

LevelProductPoint PointMap::operator()(const LevelProductPoint& t) const {
  if (t.nodes.size() != coordinate_maps.size())
    throw DomainError("point dimension does not match isomorphism");
  LevelProductPoint out;
  out.nodes.reserve(t.nodes.size());
  for (size_t i = 0; i < t.nodes.size(); ++i) out.nodes.push_back(coordinate_maps[i](t.nodes[i]));
  return out;
}

PointMap vector_canonical_isomorphism(const VectorStrongSubtree& src,
                                      const VectorStrongSubtree& dst) {
  if (src.dimension() != dst.dimension())
    throw DomainError("incompatibility: unequal dimensions");
  PointMap out;
  for (int i = 0; i < src.dimension(); ++i)
    out.coordinate_maps.push_back(canonical_isomorphism(src.components[i], dst.components[i]));
  return out;
}

VectorStrongSubtree map_vector_strong_subtree(const PointMap& iso,
                                              const VectorStrongSubtree& r,
                                              const VectorStrongSubtree& src,
                                              const VectorStrongSubtree& dst) {
  VectorStrongSubtree out;
  for (int i = 0; i < r.dimension(); ++i)
    out.components.push_back(map_strong_subtree(iso.coordinate_maps[i], r.components[i],
                                                src.components[i], dst.components[i]));
  return out;
}

VectorStrongSubtree full_vector_subtree(const VectorTree& vt) {
  vt.check_valid();
  VectorStrongSubtree out;
  for (const auto& t : vt.trees)
    out.components.push_back(StrongSubtree::full_tree(t.branching, t.height));
  return out;
}

StrongEnumerator::StrongEnumerator(VectorTree vt, int k, EnumerateOptions opts,
                                   BudgetRef budget)
    : vt_(std::move(vt)), k_(k), opts_(std::move(opts)), budget_(std::move(budget)) {
  vt_.check_valid();
  const int h = vt_.height();
  if (k_ < 1 || k_ > h)
    throw DomainError("height k=" + std::to_string(k_) + " out of range for h=" +
                      std::to_string(h));
  if (opts_.fixed_level_set) {
    const auto& ls = *opts_.fixed_level_set;
    if (static_cast<int>(ls.size()) != k_)
      throw DomainError("fixed level set size does not match k");
    for (int j = 0; j < k_; ++j) {
      if (ls[j] < 0 || ls[j] >= h) throw DomainError("fixed level set outside tree");
      if (j > 0 && ls[j] <= ls[j - 1])
        throw DomainError("fixed level set not strictly increasing");
    }
    level_sets_ = {ls};
  } else if (opts_.second_level_at) {
    if (k_ != 2) throw DomainError("second_level_at requires k = 2");
    int top = *opts_.second_level_at;
    if (top < 1 || top >= h)
      throw DomainError("second level " + std::to_string(top) + " out of range");
    for (int l0 = 0; l0 < top; ++l0) level_sets_.push_back({l0, top});
  } else if (opts_.rooted) {
    for (auto& rest : combinations(1, h, k_ - 1)) {
      std::vector<int> ls{0};
      ls.insert(ls.end(), rest.begin(), rest.end());
      level_sets_.push_back(std::move(ls));
    }
  } else {
    level_sets_ = combinations(0, h, k_);
  }
  total_ = 0;
  for (const auto& ls : level_sets_) total_ += level_set_count(ls);
  if (level_sets_.empty()) done_ = true;
}

Int StrongEnumerator::level_set_count(const std::vector<int>& ls) const {
  Int count = 1;
  for (int i = 0; i < vt_.dimension(); ++i) {
    const Int b(vt_.trees[i].branching);
    count *= opts_.rooted ? Int(1) : int_pow(b, ls[0]);
    for (int j = 0; j + 1 < k_; ++j) {
      int gap = ls[j + 1] - ls[j] - 1;
      // one choice of b^gap extensions per (node, direction) slot
      Int per_slot = int_pow(b, gap);
      Int slots = int_pow(b, j + 1);
      Int all;
      if (!mpz_fits_ulong_p(slots.get_mpz_t()))
        throw BudgetError("enumeration count", slots);
      mpz_pow_ui(all.get_mpz_t(), per_slot.get_mpz_t(), slots.get_ui());
      count *= all;
    }
  }
  return count;
}

void StrongEnumerator::setup_slots() {
  slots_.clear();
  const auto& ls = level_sets_[ls_index_];
  for (int i = 0; i < vt_.dimension(); ++i) {
    Slot root;
    root.coord = i;
    root.from_level_index = -1;
    root.parent_index = 0;
    root.direction = 0;
    root.radix = opts_.rooted ? Int(1) : int_pow(Int(vt_.trees[i].branching), ls[0]);
    root.value = 0;
    slots_.push_back(std::move(root));
  }
  for (int j = 0; j + 1 < k_; ++j) {
    for (int i = 0; i < vt_.dimension(); ++i) {
      const int b = vt_.trees[i].branching;
      int gap = ls[j + 1] - ls[j] - 1;
      Int radix = int_pow(Int(b), gap);
      Int parents = int_pow(Int(b), j);
      if (!mpz_fits_ulong_p(parents.get_mpz_t()))
        throw BudgetError("enumeration slots", parents);
      for (unsigned long pi = 0; pi < parents.get_ui(); ++pi) {
        for (int p = 0; p < b; ++p) {
          Slot s;
          s.coord = i;
          s.from_level_index = j;
          s.parent_index = static_cast<int>(pi);
          s.direction = p;
          s.radix = radix;
          s.value = 0;
          slots_.push_back(std::move(s));
        }
      }
    }
  }
}

bool StrongEnumerator::increment_slots() {
  for (int i = static_cast<int>(slots_.size()) - 1; i >= 0; --i) {
    slots_[i].value += 1;
    if (slots_[i].value < slots_[i].radix) return true;
    slots_[i].value = 0;
  }
  return false;
}

VectorStrongSubtree StrongEnumerator::materialize() const {
  const auto& ls = level_sets_[ls_index_];
  const int d = vt_.dimension();
  std::vector<std::vector<std::vector<Node>>> levels(d);
  for (int i = 0; i < d; ++i) levels[i].resize(k_);

  size_t cursor = 0;
  for (int i = 0; i < d; ++i, ++cursor) {
    const auto& slot = slots_[cursor];
    levels[i][0].push_back(Node{digits_of(slot.value, vt_.trees[i].branching, ls[0])});
  }
  for (int j = 0; j + 1 < k_; ++j) {
    for (int i = 0; i < d; ++i) {
      const int b = vt_.trees[i].branching;
      int gap = ls[j + 1] - ls[j] - 1;
      for (size_t pi = 0; pi < levels[i][j].size(); ++pi) {
        for (int p = 0; p < b; ++p, ++cursor) {
          const auto& slot = slots_[cursor];
          Node child = levels[i][j][pi].child(p);
          auto suffix = digits_of(slot.value, b, gap);
          child.digits.insert(child.digits.end(), suffix.begin(), suffix.end());
          levels[i][j + 1].push_back(std::move(child));
        }
      }
      assert(std::is_sorted(levels[i][j + 1].begin(), levels[i][j + 1].end()));
    }
  }

  VectorStrongSubtree out;
  for (int i = 0; i < d; ++i) {
    StrongSubtree comp;
    comp.ambient_branching = vt_.trees[i].branching;
    comp.ambient_height = vt_.trees[i].height;
    comp.level_set = ls;
    comp.nodes_by_level = std::move(levels[i]);
    out.components.push_back(std::move(comp));
  }
  return out;
}

std::optional<VectorStrongSubtree> StrongEnumerator::next() {
  if (done_) return std::nullopt;
  if (fresh_) {
    fresh_ = false;
    setup_slots();
  } else if (!increment_slots()) {
    ++ls_index_;
    if (ls_index_ >= level_sets_.size()) {
      done_ = true;
      return std::nullopt;
    }
    setup_slots();
  }
  if (budget_) budget_->charge(1, "strong subtree enumeration");
  return materialize();
}

Int count_strong(const VectorTree& vt, int k, EnumerateOptions opts) {
  return StrongEnumerator(vt, k, std::move(opts)).total_count();
}

Int q_formula(const std::vector<int>& b_vec, int m) {
  if (b_vec.empty()) throw DomainError("empty branching list");
  if (m < 0) throw DomainError("m must be >= 0");
  for (int b : b_vec)
    if (b < 2) throw DomainError("branching numbers must be >= 2");
  Int big = 1, small = 1;
  for (int b : b_vec) {
    big *= int_pow(Int(b), b);
    small *= b;
  }
  Int num = int_pow(big, m + 1) - int_pow(small, m + 1);
  Int den = big - small;
  Int q, r;
  mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  if (r != 0) throw DomainError("geometric-sum quotient not exact");
  return q;
}

namespace {

std::vector<VectorStrongSubtree> drain(StrongEnumerator e) {
  std::vector<VectorStrongSubtree> out;
  while (auto s = e.next()) out.push_back(std::move(*s));
  return out;
}

}  // namespace

std::vector<VectorStrongSubtree> enumerate_strong(const VectorTree& vt, int k,
                                                  BudgetRef budget) {
  return drain(StrongEnumerator(vt, k, {}, std::move(budget)));
}

std::vector<VectorStrongSubtree> enumerate_strong_rooted(const VectorTree& vt, int k,
                                                         BudgetRef budget) {
  EnumerateOptions opts;
  opts.rooted = true;
  return drain(StrongEnumerator(vt, k, std::move(opts), std::move(budget)));
}

std::vector<VectorStrongSubtree> enumerate_strong2_at(const VectorTree& vt, int m,
                                                      BudgetRef budget) {
  if (vt.height() < m + 2)
    throw DomainError("tree height " + std::to_string(vt.height()) +
                      " too small for second level at " + std::to_string(m + 1));
  EnumerateOptions opts;
  opts.second_level_at = m + 1;
  return drain(StrongEnumerator(vt, 2, std::move(opts), std::move(budget)));
}

std::vector<VectorStrongSubtree> strong_subtrees_of(const VectorStrongSubtree& s, int k,
                                                    BudgetRef budget) {
  const int m = s.height();
  if (k < 1 || k > m) throw DomainError("k out of range for subtree height");
  std::vector<int> branching;
  for (const auto& c : s.components) branching.push_back(c.ambient_branching);
  VectorTree copy = VectorTree::uniform(branching, m);
  VectorStrongSubtree copy_full = full_vector_subtree(copy);
  PointMap iso = vector_canonical_isomorphism(copy_full, s);
  std::vector<VectorStrongSubtree> out;
  StrongEnumerator e(copy, k, {}, budget);
  while (auto r = e.next())
    out.push_back(map_vector_strong_subtree(iso, *r, copy_full, s));
  return out;
}

std::optional<VectorStrongSubtree> find_monochromatic(
    const VectorTree& vt, int m, int k,
    const std::function<int(const VectorStrongSubtree&)>& coloring, BudgetRef budget) {
  if (!(1 <= k && k <= m && m <= vt.height()))
    throw DomainError("need 1 <= k <= m <= h");
  if (!coloring) throw DomainError("missing-color: coloring not provided");
  StrongEnumerator outer(vt, m, {}, budget);
  while (auto s = outer.next()) {
    bool mono = true;
    std::optional<int> color;
    for (const auto& r : strong_subtrees_of(*s, k, budget)) {
      int c = coloring(r);
      if (!color) {
        color = c;
      } else if (*color != c) {
        mono = false;
        break;
      }
    }
    if (mono) return s;
  }
  return std::nullopt;
}

}  // namespace hltrees
