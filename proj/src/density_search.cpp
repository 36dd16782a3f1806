#include "hltrees/density_search.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <future>

namespace hltrees {

namespace {

// Candidate points per level, shared by the dense-set search and the
// adversarial scans (which probe partial assignments without copying sets).
struct PointLookup {
  virtual ~PointLookup() = default;
  virtual const std::vector<LevelProductPoint>* points_at(int level) const = 0;
  bool contains(const LevelProductPoint& t) const {
    const auto* pts = points_at(t.level());
    if (!pts) return false;
    return std::binary_search(pts->begin(), pts->end(), t);
  }
};

struct MapLookup final : PointLookup {
  const std::map<int, std::vector<LevelProductPoint>>* map;
  explicit MapLookup(const std::map<int, std::vector<LevelProductPoint>>& m) : map(&m) {}
  const std::vector<LevelProductPoint>* points_at(int level) const override {
    auto it = map->find(level);
    return it == map->end() ? nullptr : &it->second;
  }
};

// Nodes appearing as coordinate i among the points of one level, sorted.
std::vector<Node> coordinate_nodes(const std::vector<LevelProductPoint>& pts, int i) {
  std::vector<Node> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(p.nodes[i]);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// The sorted subrange extending a prefix.
std::pair<size_t, size_t> prefix_range(const std::vector<Node>& sorted,
                                       const Node& prefix) {
  size_t lo = std::lower_bound(sorted.begin(), sorted.end(), prefix) - sorted.begin();
  size_t hi = lo;
  while (hi < sorted.size() && prefix.is_prefix_of(sorted[hi])) ++hi;
  return {lo, hi};
}

// Depth-first search for the canonical-least height-k vector strong subtree
// with the given level set and every level product point inside D.
class LevelSetSearch {
 public:
  LevelSetSearch(const VectorTree& vt, const PointLookup& D, std::vector<int> ls,
                 BudgetRef budget)
      : vt_(vt), D_(D), ls_(std::move(ls)), budget_(std::move(budget)) {
    k_ = static_cast<int>(ls_.size());
    d_ = vt_.dimension();
    coord_nodes_.resize(k_);
    for (int j = 0; j < k_; ++j) {
      const auto* pts = D_.points_at(ls_[j]);
      if (!pts || pts->empty()) {
        feasible_ = false;
        return;
      }
      for (int i = 0; i < d_; ++i) coord_nodes_[j].push_back(coordinate_nodes(*pts, i));
    }
    chosen_.assign(d_, std::vector<std::vector<Node>>(k_));
  }

  std::optional<VectorStrongSubtree> run() {
    if (!feasible_) return std::nullopt;
    if (!roots(0)) return std::nullopt;
    return result_;
  }

 private:
  bool level_product_in_D(int j) {
    std::vector<size_t> idx(d_, 0);
    while (true) {
      LevelProductPoint pt;
      pt.nodes.reserve(d_);
      for (int i = 0; i < d_; ++i) pt.nodes.push_back(chosen_[i][j][idx[i]]);
      if (!D_.contains(pt)) return false;
      int i = d_ - 1;
      while (i >= 0 && ++idx[i] == chosen_[i][j].size()) idx[i--] = 0;
      if (i < 0) return true;
    }
  }

  bool roots(int i) {
    if (i == d_) {
      if (!level_product_in_D(0)) return false;
      return extend_level(0);
    }
    for (const auto& cand : coord_nodes_[0][i]) {
      charge();
      chosen_[i][0] = {cand};
      if (roots(i + 1)) return true;
    }
    chosen_[i][0].clear();
    return false;
  }

  // Fill subtree level j+1 from level j, coordinate by coordinate, choosing
  // the extension of every (node, direction) in canonical slot order.
  bool extend_level(int j) {
    if (j + 1 == k_) {
      result_ = materialize();
      return true;
    }
    return choose(j, 0, 0, 0);
  }

  bool choose(int j, int i, size_t parent, int p) {
    if (i == d_) {
      if (level_product_in_D(j + 1) && extend_level(j + 1)) return true;
      return false;
    }
    const int b = vt_.trees[i].branching;
    if (parent == chosen_[i][j].size()) return choose(j, i + 1, 0, 0);
    if (p == b) return choose(j, i, parent + 1, 0);
    Node prefix = chosen_[i][j][parent].child(p);
    auto [lo, hi] = prefix_range(coord_nodes_[j + 1][i], prefix);
    for (size_t c = lo; c < hi; ++c) {
      charge();
      chosen_[i][j + 1].push_back(coord_nodes_[j + 1][i][c]);
      if (choose(j, i, parent, p + 1)) return true;
      chosen_[i][j + 1].pop_back();
    }
    return false;
  }

  VectorStrongSubtree materialize() const {
    VectorStrongSubtree out;
    for (int i = 0; i < d_; ++i) {
      StrongSubtree comp;
      comp.ambient_branching = vt_.trees[i].branching;
      comp.ambient_height = vt_.trees[i].height;
      comp.level_set = ls_;
      comp.nodes_by_level = chosen_[i];
      for (auto& lvl : comp.nodes_by_level)
        assert(std::is_sorted(lvl.begin(), lvl.end()));
      out.components.push_back(std::move(comp));
    }
    return out;
  }

  void charge() {
    if (budget_) budget_->charge(1, "dense-set subtree search");
  }

  const VectorTree& vt_;
  const PointLookup& D_;
  std::vector<int> ls_;
  BudgetRef budget_;
  int k_ = 0, d_ = 0;
  bool feasible_ = true;
  std::vector<std::vector<std::vector<Node>>> coord_nodes_;  // [level][coord]
  std::vector<std::vector<std::vector<Node>>> chosen_;       // [coord][level]
  std::optional<VectorStrongSubtree> result_;
};

std::vector<std::vector<int>> level_combinations(const std::vector<int>& levels, int k) {
  std::vector<std::vector<int>> out;
  if (k == 0) {
    out.push_back({});
    return out;
  }
  if (k < 0 || k > static_cast<int>(levels.size())) return out;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  const int n = static_cast<int>(levels.size());
  while (true) {
    std::vector<int> ls(k);
    for (int i = 0; i < k; ++i) ls[i] = levels[idx[i]];
    out.push_back(std::move(ls));
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

std::optional<VectorStrongSubtree> search_over_level_sets(
    const VectorTree& vt, const PointLookup& D,
    const std::vector<std::vector<int>>& level_sets, BudgetRef budget, int threads) {
  // Every level set is searched even after a hit: the candidate counters in
  // reports stay schedule-independent this way, and the canonical-least
  // certificate wins regardless of partitioning.
  if (threads <= 1 || level_sets.size() <= 1) {
    std::optional<VectorStrongSubtree> best;
    for (const auto& ls : level_sets) {
      auto hit = LevelSetSearch(vt, D, ls, budget).run();
      if (hit && !best) best = std::move(hit);
    }
    return best;
  }
  std::vector<std::future<std::optional<VectorStrongSubtree>>> futures;
  futures.reserve(level_sets.size());
  for (const auto& ls : level_sets)
    futures.push_back(std::async(std::launch::async, [&vt, &D, ls, budget] {
      return LevelSetSearch(vt, D, ls, budget).run();
    }));
  std::optional<VectorStrongSubtree> best;
  for (auto& f : futures) {
    auto hit = f.get();
    if (hit && !best) best = std::move(hit);
  }
  return best;
}

// All points of the level product at one level, lexicographic.
std::vector<LevelProductPoint> materialize_level(const VectorTree& vt, int n) {
  Int size = vt.level_product_size(n);
  if (size > (Int(1) << 22)) throw BudgetError("level product materialization", size);
  std::vector<LevelProductPoint> out{LevelProductPoint{{}}};
  for (const auto& tree : vt.trees) {
    auto nodes = level(tree, n);
    std::vector<LevelProductPoint> next;
    next.reserve(out.size() * nodes.size());
    for (const auto& partial : out)
      for (const auto& node : nodes) {
        LevelProductPoint ext = partial;
        ext.nodes.push_back(node);
        next.push_back(std::move(ext));
      }
    out = std::move(next);
  }
  return out;
}

// Partial per-level assignment for the adversarial scans.
struct PartialLookup final : PointLookup {
  std::map<int, const std::vector<LevelProductPoint>*> levels;
  const std::vector<LevelProductPoint>* points_at(int level) const override {
    auto it = levels.find(level);
    return it == levels.end() ? nullptr : it->second;
  }
};

// Lexicographic combinations of {0..n-1} of fixed size; visits the subsets of
// a lex-ordered point list in the pinned canonical order.
class Combination {
 public:
  Combination(size_t n, size_t size) : n_(n), size_(size) {
    idx_.resize(size);
    for (size_t i = 0; i < size; ++i) idx_[i] = i;
    valid_ = size <= n;
  }
  bool valid() const { return valid_; }
  const std::vector<size_t>& indices() const { return idx_; }
  bool advance() {
    if (size_ == 0) {
      valid_ = false;
      return false;
    }
    size_t i = size_;
    while (i > 0) {
      --i;
      if (idx_[i] != n_ - size_ + i) {
        ++idx_[i];
        for (size_t j = i + 1; j < size_; ++j) idx_[j] = idx_[j - 1] + 1;
        return true;
      }
    }
    valid_ = false;
    return false;
  }

 private:
  size_t n_, size_;
  std::vector<size_t> idx_;
  bool valid_ = true;
};

size_t threshold_count(const Rat& eps, const Int& level_size) {
  Rat need = eps * Rat(level_size);
  Int t = ceil_rat(need);
  if (t < 0) t = 0;
  if (!mpz_fits_ulong_p(t.get_mpz_t())) throw BudgetError("density threshold", t);
  return t.get_ui();
}

}  // namespace

DenseSet DenseSet::from_points(VectorTree ambient, std::vector<LevelProductPoint> points,
                               std::vector<int> support_levels) {
  ambient.check_valid();
  DenseSet out;
  out.ambient = std::move(ambient);
  for (auto& p : points) {
    p.check_valid();
    if (!in_level_product(out.ambient, p))
      throw DomainError("membership: point " + point_to_string(p) +
                        " outside the level product");
    out.points_by_level[p.level()].push_back(p);
  }
  for (auto& [lvl, pts] : out.points_by_level) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  }
  if (support_levels.empty())
    for (const auto& [lvl, pts] : out.points_by_level) support_levels.push_back(lvl);
  std::sort(support_levels.begin(), support_levels.end());
  support_levels.erase(std::unique(support_levels.begin(), support_levels.end()),
                       support_levels.end());
  for (int lvl : support_levels)
    if (lvl < 0 || lvl >= out.ambient.height())
      throw DomainError("support level " + std::to_string(lvl) + " outside tree");
  out.support_levels = std::move(support_levels);
  return out;
}

bool DenseSet::contains(const LevelProductPoint& t) const {
  auto it = points_by_level.find(t.level());
  if (it == points_by_level.end()) return false;
  return std::binary_search(it->second.begin(), it->second.end(), t);
}

Int DenseSet::count_at(int n) const {
  auto it = points_by_level.find(n);
  return it == points_by_level.end() ? Int(0) : Int(it->second.size());
}

Rat DenseSet::density_at(int n) const {
  Rat r(count_at(n), ambient.level_product_size(n));
  r.canonicalize();
  return r;
}

std::vector<LevelProductPoint> DenseSet::all_points() const {
  std::vector<LevelProductPoint> out;
  for (const auto& [lvl, pts] : points_by_level)
    out.insert(out.end(), pts.begin(), pts.end());
  return out;
}

std::optional<VectorStrongSubtree> find_subtree_in_set(const DenseSet& D, int k,
                                                       BudgetRef budget, int threads) {
  D.ambient.check_valid();
  if (k < 1 || k > D.ambient.height()) throw DomainError("k out of range");
  std::vector<int> levels;
  for (const auto& [lvl, pts] : D.points_by_level)
    if (!pts.empty()) levels.push_back(lvl);
  MapLookup lookup(D.points_by_level);
  return search_over_level_sets(D.ambient, lookup, level_combinations(levels, k), budget,
                                threads);
}

std::optional<VectorStrongSubtree> find_subtree_with_levels(
    const DenseSet& D, const std::vector<int>& level_set, BudgetRef budget) {
  MapLookup lookup(D.points_by_level);
  return LevelSetSearch(D.ambient, lookup, level_set, budget).run();
}

UdhlForLResult udhl_exact_for_L(const std::vector<int>& b_vec, int k, const Rat& eps_in,
                                const std::vector<int>& L, int ambient_height,
                                BudgetRef budget) {
  Rat eps = eps_in;
  eps.canonicalize();
  if (L.empty()) throw DomainError("empty level list");
  for (size_t i = 0; i + 1 < L.size(); ++i)
    if (L[i] >= L[i + 1]) throw DomainError("level list not strictly increasing");
  if (L.front() < 0 || L.back() >= ambient_height)
    throw DomainError("level list outside the ambient height");
  if (eps <= 0 || eps > 1) throw DomainError("eps must be in (0,1]");
  if (k < 1) throw DomainError("k must be >= 1");
  VectorTree vt = VectorTree::uniform(b_vec, ambient_height);

  const int levels = static_cast<int>(L.size());
  std::vector<std::vector<LevelProductPoint>> universe(levels);
  std::vector<size_t> need(levels);
  for (int j = 0; j < levels; ++j) {
    universe[j] = materialize_level(vt, L[j]);
    need[j] = threshold_count(eps, vt.level_product_size(L[j]));
  }

  // DFS over per-level exact-threshold subsets; prune as soon as the partial
  // set already contains a height-k subtree (supersets keep it).
  std::vector<std::vector<LevelProductPoint>> chosen(levels);
  UdhlForLResult result;
  result.holds = true;

  auto has_new_subtree = [&](int filled) {
    if (k == 1) return !chosen[filled].empty();
    if (filled + 1 < k) return false;
    PartialLookup partial;
    for (int j = 0; j <= filled; ++j) partial.levels[L[j]] = &chosen[j];
    std::vector<int> earlier(L.begin(), L.begin() + filled);
    for (auto& pfx : level_combinations(earlier, k - 1)) {
      std::vector<int> ls = pfx;
      ls.push_back(L[filled]);
      if (LevelSetSearch(vt, partial, ls, budget).run()) return true;
    }
    return false;
  };

  std::function<bool(int)> scan = [&](int j) -> bool {  // true = counterexample found
    if (j == levels) {
      std::vector<LevelProductPoint> pts;
      for (const auto& lvl : chosen) pts.insert(pts.end(), lvl.begin(), lvl.end());
      result.holds = false;
      result.counterexample =
          DenseSet::from_points(vt, std::move(pts), std::vector<int>(L));
      return true;
    }
    Combination combo(universe[j].size(), need[j]);
    for (; combo.valid(); combo.advance()) {
      if (budget) budget->charge(1, "adversarial dense-set scan");
      chosen[j].clear();
      for (size_t idx : combo.indices()) chosen[j].push_back(universe[j][idx]);
      if (has_new_subtree(j)) continue;
      if (scan(j + 1)) return true;
    }
    chosen[j].clear();
    return false;
  };

  scan(0);
  return result;
}

UdhlExactResult udhl_exact(const std::vector<int>& b_vec, int k, const Rat& eps,
                           int window, BudgetRef budget) {
  if (window < 1) throw DomainError("window must be >= 1");
  UdhlExactResult out;
  out.window = window;
  std::vector<int> all_levels(window);
  for (int i = 0; i < window; ++i) all_levels[i] = i;

  std::optional<std::vector<int>> last_fail_L;
  std::optional<DenseSet> last_fail_D;
  for (int N = 1; N <= window; ++N) {
    bool all_hold = true;
    for (const auto& L : level_combinations(all_levels, N)) {
      auto verdict = udhl_exact_for_L(b_vec, k, eps, L, window, budget);
      if (!verdict.holds) {
        all_hold = false;
        last_fail_L = L;
        last_fail_D = std::move(verdict.counterexample);
        break;
      }
    }
    if (all_hold) {
      out.value = N;
      out.failing_L = last_fail_L;
      out.counterexample = last_fail_D;
      return out;
    }
  }
  out.failing_L = last_fail_L;
  out.counterexample = last_fail_D;
  return out;
}

namespace {

std::map<int, std::vector<LevelProductPoint>> node_set_as_points(
    const std::vector<Node>& D) {
  std::map<int, std::vector<LevelProductPoint>> out;
  for (const auto& t : D) out[t.level()].push_back(LevelProductPoint{{t}});
  for (auto& [lvl, pts] : out) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  }
  return out;
}

}  // namespace

std::vector<std::vector<int>> signature(const HomogeneousTree& tree,
                                        const std::vector<Node>& D, BudgetRef budget) {
  tree.check_valid();
  for (const auto& t : D)
    if (!tree.contains(t)) throw DomainError("node-not-in-tree: " + node_to_string(t));
  VectorTree vt{std::vector<HomogeneousTree>{tree}};
  auto by_level = node_set_as_points(D);
  MapLookup lookup(by_level);
  std::vector<int> present;
  for (const auto& [lvl, pts] : by_level) present.push_back(lvl);

  std::vector<std::vector<int>> out{{}};  // the empty subtree is admitted
  for (int size = 1; size <= static_cast<int>(present.size()); ++size) {
    for (const auto& ls : level_combinations(present, size)) {
      if (LevelSetSearch(vt, lookup, ls, budget).run()) out.push_back(ls);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Rat weight(const HomogeneousTree& tree, const std::vector<Node>& D) {
  tree.check_valid();
  std::map<int, std::vector<Node>> by_level;
  for (const auto& t : D) {
    if (!tree.contains(t)) throw DomainError("node-not-in-tree: " + node_to_string(t));
    by_level[t.level()].push_back(t);
  }
  Rat sum = 0;
  for (auto& [lvl, nodes] : by_level) {
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    Rat term(Int(nodes.size()), tree.level_size(lvl));
    term.canonicalize();
    sum += term;
  }
  sum.canonicalize();
  return sum;
}

PstBoundResult check_pst_bound(const HomogeneousTree& tree, const std::vector<Node>& D,
                               BudgetRef budget) {
  PstBoundResult out;
  out.signature_count = Int(signature(tree, D, budget).size());
  out.weight_value = weight(tree, D);
  Rat w = out.weight_value;
  w.canonicalize();
  const Int p = w.get_num();
  const Int q = w.get_den();
  if (!mpz_fits_ulong_p(p.get_mpz_t()) || !mpz_fits_ulong_p(q.get_mpz_t()))
    throw BudgetError("weight exponent", p);
  // |S| >= (b/(b-1))^(p/q)  <=>  |S|^q (b-1)^p >= b^p, all integers
  out.lhs = int_pow(out.signature_count, q.get_ui()) *
            int_pow(Int(tree.branching - 1), p.get_ui());
  out.rhs = int_pow(Int(tree.branching), p.get_ui());
  out.holds = out.lhs >= out.rhs;
  return out;
}

void LevelSelection::check_valid() const {
  ambient.check_valid();
  target.check_valid();
  if (static_cast<int>(level_set.size()) != ambient.height())
    throw DomainError("level set size must equal the ambient height");
  for (size_t i = 0; i < level_set.size(); ++i) {
    if (level_set[i] < 0 || level_set[i] >= target.height)
      throw DomainError("selection level outside the target tree");
    if (i > 0 && level_set[i] <= level_set[i - 1])
      throw DomainError("selection level set not strictly increasing");
  }
  for (int n = 0; n < ambient.height(); ++n) {
    for (const auto& pt : materialize_level(ambient, n)) {
      auto it = values.find(pt);
      if (it == values.end())
        throw DomainError("missing-section: no value at " + point_to_string(pt));
      if (!std::is_sorted(it->second.begin(), it->second.end()))
        throw DomainError("section at " + point_to_string(pt) + " not sorted");
      for (const auto& w : it->second) {
        if (w.level() != level_set[n] || !target.contains(w))
          throw DomainError("section node " + node_to_string(w) + " not in W(" +
                            std::to_string(level_set[n]) + ")");
      }
    }
  }
  for (const auto& [pt, sec] : values)
    if (!in_level_product(ambient, pt))
      throw DomainError("section key " + point_to_string(pt) +
                        " outside the level product");
}

const std::vector<Node>& LevelSelection::section(const LevelProductPoint& t) const {
  auto it = values.find(t);
  if (it == values.end())
    throw DomainError("missing-section: no value at " + point_to_string(t));
  return it->second;
}

Rat LevelSelection::section_density(const LevelProductPoint& t) const {
  Rat r(Int(section(t).size()), target.level_size(level_set.at(t.level())));
  r.canonicalize();
  return r;
}

Rat LevelSelection::density() const {
  std::optional<Rat> min;
  for (int n = 0; n < ambient.height(); ++n)
    for (const auto& pt : materialize_level(ambient, n)) {
      Rat d = section_density(pt);
      if (!min || d < *min) min = d;
    }
  return *min;
}

LevelSelection LevelSelection::restrict_to(const VectorStrongSubtree& s) const {
  auto res = validate(ambient, s);
  if (!res.ok) throw DomainError("restriction target invalid: " + res.violated_clause);
  const int m = s.height();
  VectorTree copy = VectorTree::uniform(ambient.branching(), m);
  VectorStrongSubtree copy_full = full_vector_subtree(copy);
  PointMap iso = vector_canonical_isomorphism(copy_full, s);
  LevelSelection out;
  out.ambient = copy;
  out.target = target;
  for (int lvl : s.level_set()) out.level_set.push_back(level_set.at(lvl));
  for (int n = 0; n < m; ++n)
    for (const auto& pt : materialize_level(copy, n)) out.values[pt] = section(iso(pt));
  return out;
}

namespace {

// Complete search for a witness pair with S's level set pinned.
class WitnessSearch {
 public:
  WitnessSearch(const LevelSelection& sel, std::vector<int> ls, BudgetRef budget)
      : sel_(sel), ls_(std::move(ls)), budget_(std::move(budget)) {
    k_ = static_cast<int>(ls_.size());
    d_ = sel_.ambient.dimension();
    chosen_.assign(d_, std::vector<std::vector<Node>>(k_));
    meets_.resize(k_);
  }

  std::optional<WitnessPair> run() {
    if (!roots(0)) return std::nullopt;
    return result_;
  }

 private:
  void charge() {
    if (budget_) budget_->charge(1, "witness pair search");
  }

  // Intersection of the sections over the complete subtree level j; R needs
  // b_W^j nodes there, so smaller intersections prune.
  bool compute_meet(int j) {
    std::vector<size_t> idx(d_, 0);
    std::optional<std::vector<Node>> meet;
    while (true) {
      LevelProductPoint pt;
      pt.nodes.reserve(d_);
      for (int i = 0; i < d_; ++i) pt.nodes.push_back(chosen_[i][j][idx[i]]);
      const auto& sec = sel_.section(pt);
      if (!meet) {
        meet = sec;
      } else {
        std::vector<Node> next;
        std::set_intersection(meet->begin(), meet->end(), sec.begin(), sec.end(),
                              std::back_inserter(next));
        *meet = std::move(next);
      }
      if (meet->empty()) break;
      int i = d_ - 1;
      while (i >= 0 && ++idx[i] == chosen_[i][j].size()) idx[i--] = 0;
      if (i < 0) break;
    }
    meets_[j] = std::move(*meet);
    return Int(meets_[j].size()) >= int_pow(Int(sel_.target.branching), j);
  }

  bool roots(int i) {
    if (i == d_) {
      if (!compute_meet(0)) return false;
      return extend_level(0);
    }
    const auto& tree = sel_.ambient.trees[i];
    for (const auto& cand : level(tree, ls_[0])) {
      charge();
      chosen_[i][0] = {cand};
      if (roots(i + 1)) return true;
    }
    chosen_[i][0].clear();
    return false;
  }

  bool extend_level(int j) {
    if (j + 1 == k_) return search_target();
    return choose(j, 0, 0, 0);
  }

  bool choose(int j, int i, size_t parent, int p) {
    if (i == d_) {
      if (compute_meet(j + 1) && extend_level(j + 1)) return true;
      return false;
    }
    const auto& tree = sel_.ambient.trees[i];
    if (parent == chosen_[i][j].size()) return choose(j, i + 1, 0, 0);
    if (p == tree.branching) return choose(j, i, parent + 1, 0);
    Node prefix = chosen_[i][j][parent].child(p);
    int gap = ls_[j + 1] - ls_[j] - 1;
    std::vector<int> suffix(gap, 0);
    while (true) {
      charge();
      Node cand = prefix;
      cand.digits.insert(cand.digits.end(), suffix.begin(), suffix.end());
      chosen_[i][j + 1].push_back(std::move(cand));
      if (choose(j, i, parent, p + 1)) return true;
      chosen_[i][j + 1].pop_back();
      int pos = gap - 1;
      while (pos >= 0 && ++suffix[pos] == tree.branching) suffix[pos--] = 0;
      if (pos < 0) break;
    }
    return false;
  }

  // Canonical-least strong subtree R of the target with levels
  // {level_set[ls_[j]]} and R(j) inside meets_[j].
  bool search_target() {
    r_levels_.clear();
    for (int lvl : ls_) r_levels_.push_back(sel_.level_set.at(lvl));
    r_chosen_.assign(k_, {});
    for (const auto& root : meets_[0]) {
      charge();
      r_chosen_[0] = {root};
      if (extend_target(0)) {
        result_ = assemble();
        return true;
      }
    }
    return false;
  }

  bool extend_target(int j) {
    if (j + 1 == k_) return true;
    return choose_target(j, 0, 0);
  }

  bool choose_target(int j, size_t parent, int p) {
    const int b = sel_.target.branching;
    if (parent == r_chosen_[j].size()) return extend_target(j + 1);
    if (p == b) return choose_target(j, parent + 1, 0);
    Node prefix = r_chosen_[j][parent].child(p);
    auto [lo, hi] = prefix_range(meets_[j + 1], prefix);
    for (size_t c = lo; c < hi; ++c) {
      charge();
      r_chosen_[j + 1].push_back(meets_[j + 1][c]);
      if (choose_target(j, parent, p + 1)) return true;
      r_chosen_[j + 1].pop_back();
    }
    return false;
  }

  WitnessPair assemble() const {
    WitnessPair out;
    for (int i = 0; i < d_; ++i) {
      StrongSubtree comp;
      comp.ambient_branching = sel_.ambient.trees[i].branching;
      comp.ambient_height = sel_.ambient.trees[i].height;
      comp.level_set = ls_;
      comp.nodes_by_level = chosen_[i];
      out.s.components.push_back(std::move(comp));
    }
    out.r.ambient_branching = sel_.target.branching;
    out.r.ambient_height = sel_.target.height;
    out.r.level_set = r_levels_;
    out.r.nodes_by_level = r_chosen_;
    return out;
  }

  const LevelSelection& sel_;
  std::vector<int> ls_;
  BudgetRef budget_;
  int k_ = 0, d_ = 0;
  std::vector<std::vector<std::vector<Node>>> chosen_;  // [coord][level]
  std::vector<std::vector<Node>> meets_;                // section intersections
  std::vector<int> r_levels_;
  std::vector<std::vector<Node>> r_chosen_;
  std::optional<WitnessPair> result_;
};

}  // namespace

std::optional<WitnessPair> find_ls_witness(const LevelSelection& sel, int k,
                                           BudgetRef budget, int threads) {
  if (k < 1 || k > sel.height())
    throw DomainError("k out of range for selection height");
  std::vector<int> all_levels(sel.height());
  for (int i = 0; i < sel.height(); ++i) all_levels[i] = i;
  auto level_sets = level_combinations(all_levels, k);

  if (threads <= 1 || level_sets.size() <= 1) {
    std::optional<WitnessPair> best;
    for (const auto& ls : level_sets) {
      auto hit = WitnessSearch(sel, ls, budget).run();
      if (hit && !best) best = std::move(hit);
    }
    return best;
  }
  std::vector<std::future<std::optional<WitnessPair>>> futures;
  futures.reserve(level_sets.size());
  for (const auto& ls : level_sets)
    futures.push_back(std::async(std::launch::async, [&sel, ls, budget] {
      return WitnessSearch(sel, ls, budget).run();
    }));
  std::optional<WitnessPair> best;
  for (auto& f : futures) {
    auto hit = f.get();
    if (hit && !best) best = std::move(hit);
  }
  return best;
}

SectionReduction section_reduce(const DenseSet& dfull, const Rat& eps_in) {
  Rat eps = eps_in;
  eps.canonicalize();
  dfull.ambient.check_valid();
  if (dfull.ambient.dimension() < 2)
    throw DomainError("section reduction needs at least two coordinates");
  if (eps <= 0 || eps > 1) throw DomainError("eps must be in (0,1]");
  for (int lvl : dfull.support_levels)
    if (dfull.density_at(lvl) < eps)
      throw DomainError("density below eps at support level " + std::to_string(lvl));

  const int d = dfull.ambient.dimension() - 1;
  VectorTree prefix_vt{std::vector<HomogeneousTree>(dfull.ambient.trees.begin(),
                                                    dfull.ambient.trees.end() - 1)};
  HomogeneousTree w = dfull.ambient.trees.back();
  const Rat half = eps / 2;

  SectionReduction out;
  out.sections.ambient = prefix_vt;
  out.sections.target = w;
  for (int n = 0; n < prefix_vt.height(); ++n) out.sections.level_set.push_back(n);

  std::vector<LevelProductPoint> good;
  for (int n = 0; n < prefix_vt.height(); ++n) {
    Int w_level = w.level_size(n);
    for (const auto& pt : materialize_level(prefix_vt, n)) {
      std::vector<Node> sec;
      auto it = dfull.points_by_level.find(n);
      if (it != dfull.points_by_level.end()) {
        for (const auto& full_pt : it->second) {
          bool match = true;
          for (int i = 0; i < d; ++i)
            if (full_pt.nodes[i] != pt.nodes[i]) {
              match = false;
              break;
            }
          if (match) sec.push_back(full_pt.nodes[d]);
        }
      }
      std::sort(sec.begin(), sec.end());
      Rat sec_density(Int(sec.size()), w_level);
      sec_density.canonicalize();
      if (sec_density >= half) good.push_back(pt);
      out.sections.values[pt] = std::move(sec);
    }
  }
  out.good_points =
      DenseSet::from_points(prefix_vt, std::move(good), dfull.support_levels);

  // Markov consequence of the density precondition; holds on every run.
  for (int lvl : dfull.support_levels) {
    Rat got(out.good_points.count_at(lvl), prefix_vt.level_product_size(lvl));
    got.canonicalize();
    if (got < half)
      throw std::logic_error("good-point bound violated at level " + std::to_string(lvl));
  }
  return out;
}

VectorStrongSubtree glue_witness(const LevelSelection& sel, const WitnessPair& pair) {
  // gluing needs the selection levels to coincide with the ambient levels
  // actually used by S
  for (int lvl : pair.s.level_set())
    if (sel.level_set.at(lvl) != lvl)
      throw DomainError("selection levels are not aligned with the ambient levels");
  if (pair.r.level_set != pair.s.level_set())
    throw DomainError("witness pair has mismatched level sets");
  // re-verify the witness property before assembling
  for (int j = 0; j < pair.s.height(); ++j) {
    for (const auto& w_node : pair.r.nodes_by_level[j]) {
      for (const auto& pt : pair.s.level_points(j)) {
        const auto& sec = sel.section(pt);
        if (!std::binary_search(sec.begin(), sec.end(), w_node))
          throw DomainError("witness property violated at subtree level " +
                            std::to_string(j));
      }
    }
  }
  VectorStrongSubtree glued;
  glued.components = pair.s.components;
  glued.components.push_back(pair.r);

  std::vector<HomogeneousTree> trees = sel.ambient.trees;
  trees.push_back(sel.target);
  auto res = validate(VectorTree{trees}, glued);
  if (!res.ok) throw DomainError("glued certificate invalid: " + res.violated_clause);
  return glued;
}

namespace {

struct SectionSlot {
  int level;  // selection level n
  LevelProductPoint point;
  size_t need;
};

}  // namespace

LsExactResult ls_exact(const std::vector<int>& b_vec_plus, int k, const Rat& eps_in,
                       int window, BudgetRef budget) {
  Rat eps = eps_in;
  eps.canonicalize();
  if (b_vec_plus.size() < 2) throw DomainError("need d+1 >= 2 branching numbers");
  if (window < 1) throw DomainError("window must be >= 1");
  if (eps <= 0 || eps > 1) throw DomainError("eps must be in (0,1]");
  if (k < 1) throw DomainError("k must be >= 1");
  std::vector<int> prefix(b_vec_plus.begin(), b_vec_plus.end() - 1);
  const int b_w = b_vec_plus.back();

  LsExactResult out;
  out.window = window;
  std::vector<int> all_levels(window);
  for (int i = 0; i < window; ++i) all_levels[i] = i;

  std::optional<LevelSelection> last_fail;
  for (int N = 1; N <= window; ++N) {
    bool all_hold = true;
    for (const auto& L : level_combinations(all_levels, N)) {
      VectorTree vt = VectorTree::uniform(prefix, N);
      HomogeneousTree w{b_w, window};

      // one exact-threshold section per point, level-major, point-lex
      std::vector<SectionSlot> slots;
      std::vector<std::vector<Node>> w_nodes_at(N);
      for (int n = 0; n < N; ++n) {
        w_nodes_at[n] = level(w, L[n]);
        size_t need = threshold_count(eps, w.level_size(L[n]));
        for (const auto& pt : materialize_level(vt, n))
          slots.push_back(SectionSlot{n, pt, need});
      }

      LevelSelection sel;
      sel.ambient = vt;
      sel.target = w;
      sel.level_set = L;

      // prune when the assigned prefix of levels already admits a witness
      auto has_new_witness = [&](int filled_level) {
        if (k > filled_level + 1) return false;
        std::vector<int> earlier(filled_level);
        for (int i = 0; i < filled_level; ++i) earlier[i] = i;
        for (auto& pfx : level_combinations(earlier, k - 1)) {
          std::vector<int> ls = pfx;
          ls.push_back(filled_level);
          if (WitnessSearch(sel, ls, budget).run()) return true;
        }
        return false;
      };

      bool found_counterexample = false;
      std::function<bool(size_t)> scan = [&](size_t slot_idx) -> bool {
        if (slot_idx == slots.size()) {
          found_counterexample = true;
          last_fail = sel;
          return true;
        }
        const auto& slot = slots[slot_idx];
        bool level_completes =
            slot_idx + 1 == slots.size() || slots[slot_idx + 1].level != slot.level;
        const auto& universe = w_nodes_at[slot.level];
        Combination combo(universe.size(), slot.need);
        for (; combo.valid(); combo.advance()) {
          if (budget) budget->charge(1, "adversarial selection scan");
          std::vector<Node> sec;
          sec.reserve(slot.need);
          for (size_t idx : combo.indices()) sec.push_back(universe[idx]);
          sel.values[slot.point] = std::move(sec);
          if (level_completes && has_new_witness(slot.level)) continue;
          if (scan(slot_idx + 1)) return true;
        }
        sel.values.erase(slot.point);
        return false;
      };

      scan(0);
      if (found_counterexample) {
        all_hold = false;
        break;
      }
    }
    if (all_hold) {
      out.value = N;
      out.counterexample = last_fail;
      return out;
    }
  }
  out.counterexample = last_fail;
  return out;
}

}  // namespace hltrees
