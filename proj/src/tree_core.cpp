#include "hltrees/tree_core.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <sstream>

namespace hltrees {

std::uint64_t Budget::default_cap() {
  if (const char* env = std::getenv("HLTREES_BUDGET")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0' && v > 0) return v;
  }
  return 100'000'000ull;
}

Rat parse_rational(const std::string& text) {
  auto bad = [&] { return DomainError("malformed rational: '" + text + "'"); };
  if (text.empty()) throw bad();
  std::string num = text, den = "1";
  if (auto slash = text.find('/'); slash != std::string::npos) {
    num = text.substr(0, slash);
    den = text.substr(slash + 1);
  }
  Int n, d;
  if (n.set_str(num, 10) != 0 || d.set_str(den, 10) != 0) throw bad();
  if (d == 0) throw bad();
  Rat r(n, d);
  r.canonicalize();
  return r;
}

std::string format_rational(const Rat& value) {
  Rat r = value;
  r.canonicalize();
  if (r.get_den() == 1) return r.get_num().get_str();
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

Int ceil_rat(const Rat& value) {
  Int q, r;
  mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), value.get_num().get_mpz_t(),
              value.get_den().get_mpz_t());
  if (r != 0) q += 1;
  return q;
}

Int int_pow(const Int& base, unsigned long exp) {
  Int out;
  mpz_pow_ui(out.get_mpz_t(), base.get_mpz_t(), exp);
  return out;
}

bool Node::is_prefix_of(const Node& other) const {
  if (digits.size() > other.digits.size()) return false;
  return std::equal(digits.begin(), digits.end(), other.digits.begin());
}

std::string node_to_string(const Node& t) {
  std::ostringstream out;
  out << "[";
  for (size_t i = 0; i < t.digits.size(); ++i) {
    if (i) out << ",";
    out << t.digits[i];
  }
  out << "]";
  return out.str();
}

std::string point_to_string(const LevelProductPoint& t) {
  std::ostringstream out;
  out << "(";
  for (size_t i = 0; i < t.nodes.size(); ++i) {
    if (i) out << ",";
    out << node_to_string(t.nodes[i]);
  }
  out << ")";
  return out.str();
}

void HomogeneousTree::check_valid() const {
  if (branching < 2) throw DomainError("branching number must be >= 2");
  if (height < 1) throw DomainError("tree height must be >= 1");
}

bool HomogeneousTree::contains(const Node& t) const {
  if (t.level() >= height) return false;
  for (int d : t.digits)
    if (d < 0 || d >= branching) return false;
  return true;
}

Int HomogeneousTree::level_size(int n) const { return int_pow(Int(branching), n); }

VectorTree VectorTree::uniform(const std::vector<int>& branching, int height) {
  if (branching.empty()) throw DomainError("vector tree needs at least one coordinate");
  VectorTree vt;
  for (int b : branching) vt.trees.push_back(HomogeneousTree{b, height});
  vt.check_valid();
  return vt;
}

int VectorTree::height() const {
  if (trees.empty()) throw DomainError("empty vector tree");
  return trees.front().height;
}

std::vector<int> VectorTree::branching() const {
  std::vector<int> out;
  out.reserve(trees.size());
  for (const auto& t : trees) out.push_back(t.branching);
  return out;
}

Int VectorTree::level_product_size(int n) const {
  Int out = 1;
  for (const auto& t : trees) out *= t.level_size(n);
  return out;
}

void VectorTree::check_valid() const {
  if (trees.empty()) throw DomainError("empty vector tree");
  for (const auto& t : trees) {
    t.check_valid();
    if (t.height != trees.front().height)
      throw DomainError("vector tree components must share a common height");
  }
}

void LevelProductPoint::check_valid() const {
  for (const auto& n : nodes)
    if (n.level() != level())
      throw DomainError("level product point has coordinates at unequal levels");
}

namespace {

// Successive digit sequences of a fixed length, in lexicographic order.
bool next_digit_sequence(std::vector<int>& digits, int base) {
  for (int i = static_cast<int>(digits.size()) - 1; i >= 0; --i) {
    if (++digits[i] < base) return true;
    digits[i] = 0;
  }
  return false;
}

constexpr std::uint64_t kMaterializeCap = 1u << 24;

}  // namespace

std::vector<Node> level(const HomogeneousTree& tree, int n) {
  tree.check_valid();
  if (n < 0 || n >= tree.height)
    throw DomainError("level-out-of-bounds: n=" + std::to_string(n) + " for height " +
                      std::to_string(tree.height));
  Int size = tree.level_size(n);
  if (size > kMaterializeCap) throw BudgetError("level materialization", size);
  std::vector<Node> out;
  out.reserve(size.get_ui());
  std::vector<int> digits(n, 0);
  do {
    out.emplace_back(digits);
  } while (next_digit_sequence(digits, tree.branching));
  return out;
}

std::vector<Node> successors(const HomogeneousTree& tree, const Node& t) {
  if (!tree.contains(t))
    throw DomainError("node-not-in-tree: " + node_to_string(t));
  std::vector<Node> out;
  Int total = 0;
  for (int n = t.level(); n < tree.height; ++n) total += int_pow(Int(tree.branching), n - t.level());
  if (total > kMaterializeCap) throw BudgetError("successor materialization", total);
  for (int n = t.level(); n < tree.height; ++n) {
    std::vector<int> suffix(n - t.level(), 0);
    do {
      Node s = t;
      s.digits.insert(s.digits.end(), suffix.begin(), suffix.end());
      out.push_back(std::move(s));
    } while (next_digit_sequence(suffix, tree.branching));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Node> immediate_successors(const HomogeneousTree& tree, const Node& t) {
  if (!tree.contains(t))
    throw DomainError("node-not-in-tree: " + node_to_string(t));
  if (tree.is_maximal(t))
    throw DomainError("no-successors: node " + node_to_string(t) + " is maximal");
  std::vector<Node> out;
  out.reserve(tree.branching);
  for (int p = 0; p < tree.branching; ++p) out.push_back(t.child(p));
  return out;
}

std::vector<Node> normalize_level_subset(const HomogeneousTree& tree,
                                         std::vector<Node> F, int n) {
  if (n < 0 || n >= tree.height)
    throw DomainError("level-out-of-bounds: n=" + std::to_string(n));
  for (const auto& t : F) {
    if (t.level() != n || !tree.contains(t))
      throw DomainError("level-mismatch: node " + node_to_string(t) +
                        " is not in T(" + std::to_string(n) + ")");
  }
  std::sort(F.begin(), F.end());
  F.erase(std::unique(F.begin(), F.end()), F.end());
  return F;
}

Rat density(const HomogeneousTree& tree, const std::vector<Node>& F, int n) {
  auto set = normalize_level_subset(tree, F, n);
  Rat r(Int(set.size()), tree.level_size(n));
  r.canonicalize();
  return r;
}

Rat relative_density(const HomogeneousTree& tree, const std::vector<Node>& F, int n,
                     const Node& t) {
  auto set = normalize_level_subset(tree, F, n);
  if (!tree.contains(t)) throw DomainError("node-not-in-tree: " + node_to_string(t));
  if (t.level() > n)
    throw DomainError("level-order: node level " + std::to_string(t.level()) +
                      " exceeds n=" + std::to_string(n));
  Int hits = 0;
  for (const auto& s : set)
    if (t.is_prefix_of(s)) hits += 1;
  Rat r(hits, int_pow(Int(tree.branching), n - t.level()));
  r.canonicalize();
  return r;
}

bool in_level_product(const VectorTree& vt, const LevelProductPoint& t) {
  if (t.dimension() != vt.dimension()) return false;
  for (int i = 0; i < vt.dimension(); ++i) {
    if (t.nodes[i].level() != t.level()) return false;
    if (!vt.trees[i].contains(t.nodes[i])) return false;
  }
  return true;
}

Rat fw_measure(const VectorTree& vt, const std::vector<LevelProductPoint>& A) {
  vt.check_valid();
  std::vector<std::set<LevelProductPoint>> by_level(vt.height());
  for (const auto& t : A) {
    if (!in_level_product(vt, t))
      throw DomainError("membership: point " + point_to_string(t) +
                        " is outside the level product");
    by_level[t.level()].insert(t);
  }
  Rat sum = 0;
  for (int n = 0; n < vt.height(); ++n) {
    Rat term(Int(by_level[n].size()), vt.level_product_size(n));
    term.canonicalize();
    sum += term;
  }
  Rat avg = sum / Rat(vt.height());
  avg.canonicalize();
  return avg;
}

}  // namespace hltrees
