#include <set>

#include "doctest.h"
#include "hltrees/strong_subtrees.hpp"
#include "oracles.hpp"

using namespace hltrees;

namespace {

Node mk(std::initializer_list<int> digits) { return Node{std::vector<int>(digits)}; }

StrongSubtree make_subtree(int b, int h, std::vector<int> ls,
                           std::vector<std::vector<Node>> levels) {
  StrongSubtree s;
  s.ambient_branching = b;
  s.ambient_height = h;
  s.level_set = std::move(ls);
  s.nodes_by_level = std::move(levels);
  return s;
}

}  // namespace

TEST_CASE("validation clauses") {
  HomogeneousTree t22{2, 2};
  CHECK(validate(t22, StrongSubtree::full_tree(2, 2)).ok);

  HomogeneousTree t23{2, 3};
  auto bad = make_subtree(2, 3, {0, 2}, {{Node{}}, {mk({0, 0}), mk({0, 1})}});
  auto res = validate(t23, bad);
  CHECK_FALSE(res.ok);
  CHECK(res.violated_clause.substr(0, 3) == "(c)");

  CHECK(validate(t23, StrongSubtree::single_node(t23, mk({0, 1}))).ok);

  auto unrooted = make_subtree(2, 3, {1}, {{mk({0}), mk({1})}});
  CHECK(validate(t23, unrooted).violated_clause.substr(0, 3) == "(a)");

  auto misplaced = make_subtree(2, 3, {1}, {{mk({0, 1})}});
  CHECK(validate(t23, misplaced).violated_clause.substr(0, 3) == "(b)");
}

TEST_CASE("enumeration counts on small trees") {
  auto vt22 = VectorTree::uniform({2}, 2);
  auto vt23 = VectorTree::uniform({2}, 3);
  CHECK(enumerate_strong(vt22, 1).size() == 3);
  CHECK(enumerate_strong(vt22, 2).size() == 1);
  CHECK(enumerate_strong(vt23, 2).size() == 7);
  CHECK(count_strong(vt23, 2) == 7);

  CHECK(enumerate_strong_rooted(vt22, 2).size() == 1);
  CHECK(enumerate_strong_rooted(vt23, 2).size() == 5);
  CHECK(enumerate_strong_rooted(vt23, 1).size() == 1);

  CHECK(enumerate_strong2_at(vt22, 0).size() == 1);
  CHECK(enumerate_strong2_at(vt23, 1).size() == 6);
  CHECK(enumerate_strong2_at(vt23, 0).size() == 1);
}

TEST_CASE("enumeration matches the subset-filter oracle") {
  struct Case {
    std::vector<int> b_vec;
    int h, k;
  };
  for (const Case& c : {Case{{2}, 3, 1}, Case{{2}, 3, 2}, Case{{2}, 3, 3},
                        Case{{3}, 2, 2}, Case{{2}, 4, 2}, Case{{2, 2}, 3, 2}}) {
    auto vt = VectorTree::uniform(c.b_vec, c.h);
    auto ours = enumerate_strong(vt, c.k);
    auto naive = oracle::naive_strong_subtrees(c.b_vec, c.h, c.k);
    CHECK(ours.size() == naive.size());
    CHECK(Int(ours.size()) == count_strong(vt, c.k));

    // no duplicates, all valid, emitted in strictly increasing canonical order
    for (size_t i = 0; i < ours.size(); ++i) {
      CHECK(validate(vt, ours[i]).ok);
      if (i > 0) CHECK(compare_certificates(ours[i - 1], ours[i]) < 0);
    }

    // identical as node-set families
    std::set<std::vector<std::vector<Node>>> ours_sets, naive_sets;
    for (const auto& s : ours) {
      std::vector<std::vector<Node>> flat;
      for (const auto& comp : s.components) flat.push_back(comp.all_nodes());
      for (auto& f : flat) std::sort(f.begin(), f.end());
      ours_sets.insert(flat);
    }
    for (const auto& s : naive) {
      auto flat = s.per_coord;
      for (auto& f : flat) std::sort(f.begin(), f.end());
      naive_sets.insert(flat);
    }
    CHECK(ours_sets == naive_sets);
  }
}

TEST_CASE("height-2 stream count equals the geometric-sum formula") {
  CHECK(q_formula({2}, 0) == 1);
  CHECK(q_formula({3}, 0) == 1);
  CHECK(q_formula({2}, 1) == 6);
  CHECK(q_formula({2, 3}, 1) == 114);
  CHECK(q_formula({2, 2}, 1) == 20);

  for (int m : {0, 1}) {
    auto vt = VectorTree::uniform({2}, m + 2);
    CHECK(Int(enumerate_strong2_at(vt, m).size()) == q_formula({2}, m));
  }
  auto vt22 = VectorTree::uniform({2, 2}, 3);
  CHECK(Int(enumerate_strong2_at(vt22, 1).size()) == q_formula({2, 2}, 1));
  auto vt23 = VectorTree::uniform({2, 3}, 3);
  CHECK(Int(enumerate_strong2_at(vt23, 1).size()) == q_formula({2, 3}, 1));
}

TEST_CASE("exact divisibility of the geometric-sum quotient") {
  // (X^(m+1) - Y^(m+1)) divisible by (X - Y): spot grid through the formula
  for (int b1 = 2; b1 <= 4; ++b1)
    for (int m = 0; m <= 4; ++m) CHECK(q_formula({b1}, m) > 0);
  for (int m = 0; m <= 3; ++m) CHECK(q_formula({2, 3}, m) > 0);
}

TEST_CASE("canonical isomorphism") {
  auto src = StrongSubtree::full_tree(2, 2);
  SUBCASE("identity on equal arguments") {
    auto iso = canonical_isomorphism(src, src);
    for (const auto& [from, to] : iso.forward) CHECK(from == to);
  }
  SUBCASE("maps onto a stretched subtree") {
    auto dst = make_subtree(2, 3, {0, 2}, {{Node{}}, {mk({0, 0}), mk({1, 0})}});
    REQUIRE(validate(HomogeneousTree{2, 3}, dst).ok);
    auto iso = canonical_isomorphism(src, dst);
    CHECK(iso(Node{}) == Node{});
    CHECK(iso(mk({0})) == mk({0, 0}));
    CHECK(iso(mk({1})) == mk({1, 0}));
  }
  SUBCASE("composition equals the direct isomorphism") {
    auto b = make_subtree(2, 3, {0, 2}, {{Node{}}, {mk({0, 0}), mk({1, 0})}});
    auto c = make_subtree(2, 3, {1, 2}, {{mk({1})}, {mk({1, 0}), mk({1, 1})}});
    auto ab = canonical_isomorphism(src, b);
    auto bc = canonical_isomorphism(b, c);
    auto ac = canonical_isomorphism(src, c);
    for (const auto& [from, mid] : ab.forward) CHECK(bc(mid) == ac(from));
  }
  SUBCASE("incompatible arguments rejected") {
    CHECK_THROWS_AS(canonical_isomorphism(src, StrongSubtree::full_tree(3, 2)),
                    DomainError);
    CHECK_THROWS_AS(canonical_isomorphism(src, StrongSubtree::full_tree(2, 3)),
                    DomainError);
  }
}

TEST_CASE("isomorphism images of strong subtrees stay strong with the level set carried") {
  // map every strong subtree of height <= 2 of 2^{<2} through an isomorphism
  auto src = StrongSubtree::full_tree(2, 2);
  auto dst = make_subtree(2, 4, {1, 3},
                          {{mk({0})}, {mk({0, 0, 1}), mk({0, 1, 0})}});
  REQUIRE(validate(HomogeneousTree{2, 4}, dst).ok);
  auto iso = canonical_isomorphism(src, dst);
  auto vt = VectorTree::uniform({2}, 2);
  for (int k = 1; k <= 2; ++k) {
    for (const auto& sub : enumerate_strong(vt, k)) {
      auto image = map_strong_subtree(iso, sub.components[0], src, dst);
      CHECK(validate(HomogeneousTree{2, 4}, image).ok);
      // level sets map positionally
      for (int j = 0; j < image.height(); ++j)
        CHECK(image.level_set[j] == dst.level_set[sub.components[0].level_set[j]]);
    }
  }
}

TEST_CASE("vector canonical isomorphism acts coordinatewise") {
  auto vt = VectorTree::uniform({2, 3}, 2);
  auto id = full_vector_subtree(vt);
  auto iso = vector_canonical_isomorphism(id, id);
  LevelProductPoint pt{{mk({1}), mk({2})}};
  CHECK(iso(pt) == pt);
  CHECK(iso(pt).level() == pt.level());
}

TEST_CASE("monochromatic search is an exhaustive verifier") {
  auto vt22 = VectorTree::uniform({2}, 2);
  SUBCASE("constant coloring returns the canonical-least certificate") {
    auto first = find_monochromatic(vt22, 1, 1, [](const auto&) { return 0; });
    REQUIRE(first.has_value());
    auto all = enumerate_strong(vt22, 1);
    CHECK(*first == all.front());
  }
  SUBCASE("height-1 instances are trivially monochromatic") {
    auto got = find_monochromatic(vt22, 1, 1, [](const VectorStrongSubtree& s) {
      return s.level_set().front();
    });
    CHECK(got.has_value());
  }
  SUBCASE("parity coloring on 2^{<3}, cross-checked exhaustively") {
    auto vt = VectorTree::uniform({2}, 3);
    auto color = [](const VectorStrongSubtree& s) { return s.level_set().front() % 2; };
    auto got = find_monochromatic(vt, 2, 1, color);
    // exhaustive check: some height-2 subtree with all height-1 subtrees
    // (its own nodes) rooted at same-parity levels <=> level set parity-pure
    bool expected = false;
    for (const auto& s : enumerate_strong(vt, 2)) {
      bool mono = true;
      int c0 = s.level_set()[0] % 2;
      for (int lvl : s.level_set())
        if (lvl % 2 != c0) mono = false;
      if (mono) expected = true;
    }
    CHECK(got.has_value() == expected);
    if (got) {
      for (const auto& r : strong_subtrees_of(*got, 1))
        CHECK(color(r) == color(strong_subtrees_of(*got, 1).front()));
    }
  }
}

TEST_CASE("subtrees of a subtree live inside it") {
  auto vt = VectorTree::uniform({2}, 3);
  for (const auto& s : enumerate_strong(vt, 2)) {
    for (const auto& r : strong_subtrees_of(s, 1)) {
      CHECK(validate(vt, r).ok);
      for (const auto& node : r.components[0].all_nodes())
        CHECK(s.components[0].contains_node(node));
    }
    // monotonicity: Strong_k(S) is a subfamily of Strong_k(T)
    auto all1 = enumerate_strong(vt, 1);
    for (const auto& r : strong_subtrees_of(s, 1))
      CHECK(std::find(all1.begin(), all1.end(), r) != all1.end());
  }
}

TEST_CASE("enumeration budget guard") {
  auto vt = VectorTree::uniform({2}, 3);
  auto budget = std::make_shared<Budget>(3);
  StrongEnumerator e(vt, 2, {}, budget);
  CHECK(e.next().has_value());
  CHECK(e.next().has_value());
  CHECK(e.next().has_value());
  CHECK_THROWS_AS(e.next(), BudgetError);
}
