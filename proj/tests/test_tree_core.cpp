#include "doctest.h"
#include "hltrees/tree_core.hpp"

using namespace hltrees;

namespace {

Node mk(std::initializer_list<int> digits) { return Node{std::vector<int>(digits)}; }

}  // namespace

TEST_CASE("levels enumerate all digit sequences in lex order") {
  HomogeneousTree t23{2, 3};
  CHECK(level(t23, 0) == std::vector<Node>{Node{}});
  CHECK(level(t23, 2) ==
        std::vector<Node>{mk({0, 0}), mk({0, 1}), mk({1, 0}), mk({1, 1})});
  HomogeneousTree t32{3, 2};
  CHECK(level(t32, 1) == std::vector<Node>{mk({0}), mk({1}), mk({2})});
  CHECK_THROWS_AS(level(t23, 3), DomainError);
  CHECK_THROWS_AS(level(t23, -1), DomainError);

  for (int n = 0; n < 3; ++n)
    CHECK(Int(level(t23, n).size()) == t23.level_size(n));
}

TEST_CASE("successors are prefix extensions") {
  HomogeneousTree t{2, 3};
  CHECK(successors(t, mk({1})) == std::vector<Node>{mk({1}), mk({1, 0}), mk({1, 1})});
  CHECK(successors(HomogeneousTree{2, 2}, Node{}).size() == 3);
  CHECK(successors(t, mk({1, 1})) == std::vector<Node>{mk({1, 1})});
  CHECK_THROWS_AS(successors(t, mk({2})), DomainError);
}

TEST_CASE("immediate successors ordered by direction") {
  CHECK(immediate_successors(HomogeneousTree{2, 3}, mk({0})) ==
        std::vector<Node>{mk({0, 0}), mk({0, 1})});
  CHECK(immediate_successors(HomogeneousTree{3, 2}, Node{}) ==
        std::vector<Node>{mk({0}), mk({1}), mk({2})});
  CHECK_THROWS_AS(immediate_successors(HomogeneousTree{2, 2}, mk({1})), DomainError);
}

TEST_CASE("density is an exact rational") {
  HomogeneousTree t{2, 3};
  CHECK(density(t, {mk({0, 0}), mk({1, 1})}, 2) == Rat(1, 2));
  CHECK(density(t, {}, 2) == Rat(0));
  CHECK(density(t, level(t, 2), 2) == Rat(1));
  CHECK_THROWS_AS(density(t, {mk({0})}, 2), DomainError);
}

TEST_CASE("relative density reduces to density at the root") {
  HomogeneousTree t{2, 3};
  std::vector<Node> F{mk({0, 0}), mk({0, 1}), mk({1, 0})};
  CHECK(relative_density(t, F, 2, mk({0})) == Rat(1));
  CHECK(relative_density(t, F, 2, mk({1})) == Rat(1, 2));
  CHECK(relative_density(t, F, 2, Node{}) == Rat(3, 4));
  CHECK(relative_density(t, F, 2, Node{}) == density(t, F, 2));
  CHECK_THROWS_AS(relative_density(t, F, 1, mk({0, 0})), DomainError);
}

TEST_CASE("averaging relative density over children reproduces the parent") {
  HomogeneousTree t{3, 3};
  std::vector<Node> F;
  // fixed pseudo-random subset of T(2)
  unsigned long state = 12345;
  for (const auto& s : level(t, 2)) {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    if ((state >> 33) % 3 != 0) F.push_back(s);
  }
  for (const auto& parent : level(t, 1)) {
    Rat sum = 0;
    for (int p = 0; p < 3; ++p) sum += relative_density(t, F, 2, parent.child(p));
    CHECK(sum / 3 == relative_density(t, F, 2, parent));
  }
}

TEST_CASE("level-averaged measure") {
  VectorTree vt = VectorTree::uniform({2}, 2);
  std::vector<LevelProductPoint> full;
  full.push_back(LevelProductPoint{{Node{}}});
  full.push_back(LevelProductPoint{{mk({0})}});
  full.push_back(LevelProductPoint{{mk({1})}});
  CHECK(fw_measure(vt, full) == Rat(1));
  CHECK(fw_measure(vt, {}) == Rat(0));
  CHECK(fw_measure(vt, {LevelProductPoint{{Node{}}}}) == Rat(1, 2));

  // monotone under inclusion, additive over disjoint unions
  std::vector<LevelProductPoint> part{full[0], full[1]};
  std::vector<LevelProductPoint> rest{full[2]};
  CHECK(fw_measure(vt, part) + fw_measure(vt, rest) == fw_measure(vt, full));
  CHECK(fw_measure(vt, part) <= fw_measure(vt, full));

  LevelProductPoint foreign{{mk({0, 0})}};
  CHECK_THROWS_AS(fw_measure(vt, {foreign}), DomainError);
}

TEST_CASE("rational parsing and formatting") {
  CHECK(parse_rational("3/4") == Rat(3, 4));
  CHECK(parse_rational("2/4") == Rat(1, 2));
  CHECK(parse_rational("7") == Rat(7));
  CHECK(format_rational(Rat(1, 2)) == "1/2");
  CHECK(format_rational(Rat(6, 3)) == "2");
  CHECK_THROWS_AS(parse_rational("1/0"), DomainError);
  CHECK_THROWS_AS(parse_rational("x"), DomainError);
  CHECK(ceil_rat(Rat(7, 2)) == 4);
  CHECK(ceil_rat(Rat(-7, 2)) == -3);
  CHECK(ceil_rat(Rat(4)) == 4);
}
