#include "doctest.h"
#include "hltrees/cli_io.hpp"

using namespace hltrees;

namespace {

Node mk(std::initializer_list<int> digits) { return Node{std::vector<int>(digits)}; }

DenseSet demo_dense() {
  auto vt = VectorTree::uniform({2, 2}, 2);
  std::vector<LevelProductPoint> pts;
  pts.push_back(LevelProductPoint{{Node{}, Node{}}});
  pts.push_back(LevelProductPoint{{mk({0}), mk({1})}});
  pts.push_back(LevelProductPoint{{mk({1}), mk({1})}});
  return DenseSet::from_points(vt, pts, {0, 1});
}

LevelSelection demo_selection() {
  LevelSelection sel;
  sel.ambient = VectorTree::uniform({2}, 2);
  sel.target = HomogeneousTree{2, 3};
  sel.level_set = {0, 2};
  sel.values[LevelProductPoint{{Node{}}}] = {Node{}};
  sel.values[LevelProductPoint{{mk({0})}}] = {mk({0, 1}), mk({1, 0})};
  sel.values[LevelProductPoint{{mk({1})}}] = {};
  sel.check_valid();
  return sel;
}

}  // namespace

TEST_CASE("instances round-trip bit-exactly") {
  std::vector<InstanceFile> files;
  files.push_back(make_dense_instance(demo_dense(), json{{"seed", 7}}));
  files.push_back(make_selection_instance(demo_selection()));
  files.push_back(
      make_subtree_instance(full_vector_subtree(VectorTree::uniform({2}, 2))));
  InstanceFile nodes;
  nodes.ambient = VectorTree::uniform({3}, 2);
  nodes.kind = InstanceFile::Kind::NodeSetPayload;
  nodes.node_set = {Node{}, mk({2})};
  files.push_back(nodes);

  for (const auto& f : files) {
    json j = print_instance(f);
    InstanceFile back = parse_instance(j);
    CHECK(print_instance(back).dump() == j.dump());
  }
}

TEST_CASE("strict field validation") {
  json good = print_instance(make_dense_instance(demo_dense()));

  json extra = good;
  extra["surprise"] = 1;
  CHECK_THROWS_AS(parse_instance(extra), DomainError);

  json inner = good;
  inner["payload"]["extra"] = 2;
  CHECK_THROWS_AS(parse_instance(inner), DomainError);

  json version = good;
  version["format_version"] = 2;
  CHECK_THROWS_AS(parse_instance(version), DomainError);

  json missing = good;
  missing.erase("ambient");
  CHECK_THROWS_AS(parse_instance(missing), DomainError);
}

TEST_CASE("digit-string shorthand") {
  CHECK(node_from_json(json("011"), 2) == mk({0, 1, 1}));
  CHECK(node_from_json(json(""), 2) == Node{});
  CHECK(node_from_json(json::array({0, 1}), 2) == mk({0, 1}));
  CHECK_THROWS_AS(node_from_json(json("02"), 2), DomainError);
  CHECK_THROWS_AS(node_from_json(json("0"), 11), DomainError);
}

TEST_CASE("points validate against the ambient") {
  auto vt = VectorTree::uniform({2, 3}, 2);
  json pj = json::array({json::array({0}), json::array({2})});
  auto pt = point_from_json(pj, vt);
  CHECK(pt.nodes[1] == mk({2}));
  CHECK_THROWS_AS(point_from_json(json::array({json::array({0})}), vt), DomainError);
  json bad = json::array({json::array({0}), json::array({0, 1})});
  CHECK_THROWS_AS(point_from_json(bad, vt), DomainError);
}

TEST_CASE("subtree payloads rebuild certificates") {
  auto s = full_vector_subtree(VectorTree::uniform({2, 2}, 2));
  auto j = subtree_to_json(s);
  CHECK(subtree_from_json(j) == s);
}

TEST_CASE("reports serialize deterministically") {
  RunReport r;
  r.command = "search";
  r.verdict = "FOUND";
  r.parameters = {{"k", 2}};
  r.certificate = subtree_to_json(full_vector_subtree(VectorTree::uniform({2}, 2)));
  r.counters = {{"candidates", 12}};
  r.budget_cap = 100;
  r.budget_used = 12;
  CHECK(report_to_json(r).dump() == report_to_json(r).dump());
  CHECK(report_to_json(r)["budget"]["cap"] == 100);
}
