#include "hltrees/cli_io.hpp"

#include <fstream>

namespace hltrees {

namespace {

void reject_unknown_fields(const json& j, std::initializer_list<const char*> allowed,
                           const std::string& where) {
  if (!j.is_object()) throw DomainError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) throw DomainError("unknown field '" + key + "' in " + where);
  }
}

const json& require_field(const json& j, const char* field, const std::string& where) {
  auto it = j.find(field);
  if (it == j.end()) throw DomainError(where + " is missing field '" + field + "'");
  return *it;
}

VectorTree ambient_from_json(const json& j) {
  reject_unknown_fields(j, {"branching", "height"}, "ambient");
  const json& br = require_field(j, "branching", "ambient");
  if (!br.is_array() || br.empty())
    throw DomainError("ambient.branching must be a nonempty array");
  std::vector<int> b_vec;
  for (const auto& b : br) b_vec.push_back(b.get<int>());
  int height = require_field(j, "height", "ambient").get<int>();
  return VectorTree::uniform(b_vec, height);
}

json ambient_to_json(const VectorTree& vt) {
  return json{{"branching", vt.branching()}, {"height", vt.height()}};
}

}  // namespace

json node_to_json(const Node& t) { return json(t.digits); }

Node node_from_json(const json& j, int branching) {
  Node out;
  if (j.is_string()) {
    // digit-string shorthand, one character per digit
    if (branching > 10)
      throw DomainError("digit-string nodes need branching <= 10");
    for (char c : j.get<std::string>()) {
      if (c < '0' || c > '9') throw DomainError("bad digit in node string");
      out.digits.push_back(c - '0');
    }
  } else if (j.is_array()) {
    for (const auto& d : j) out.digits.push_back(d.get<int>());
  } else {
    throw DomainError("node must be an integer array or a digit string");
  }
  for (int d : out.digits)
    if (d < 0 || d >= branching)
      throw DomainError("node digit out of range: " + node_to_string(out));
  return out;
}

json point_to_json(const LevelProductPoint& t) {
  json out = json::array();
  for (const auto& n : t.nodes) out.push_back(node_to_json(n));
  return out;
}

LevelProductPoint point_from_json(const json& j, const VectorTree& vt) {
  if (!j.is_array() || static_cast<int>(j.size()) != vt.dimension())
    throw DomainError("point must list one node per coordinate");
  LevelProductPoint out;
  for (int i = 0; i < vt.dimension(); ++i)
    out.nodes.push_back(node_from_json(j[i], vt.trees[i].branching));
  out.check_valid();
  return out;
}

json subtree_to_json(const VectorStrongSubtree& s) {
  json comps = json::array();
  for (const auto& c : s.components) {
    json levels = json::array();
    for (const auto& level_nodes : c.nodes_by_level) {
      json one = json::array();
      for (const auto& n : level_nodes) one.push_back(node_to_json(n));
      levels.push_back(one);
    }
    comps.push_back(json{{"branching", c.ambient_branching},
                         {"height", c.ambient_height},
                         {"level_set", c.level_set},
                         {"nodes_by_level", levels}});
  }
  return json{{"kind", "subtree"}, {"components", comps}};
}

VectorStrongSubtree subtree_from_json(const json& j) {
  reject_unknown_fields(j, {"kind", "components"}, "subtree payload");
  VectorStrongSubtree out;
  for (const auto& cj : require_field(j, "components", "subtree payload")) {
    reject_unknown_fields(cj, {"branching", "height", "level_set", "nodes_by_level"},
                          "subtree component");
    StrongSubtree comp;
    comp.ambient_branching = require_field(cj, "branching", "component").get<int>();
    comp.ambient_height = require_field(cj, "height", "component").get<int>();
    for (const auto& l : require_field(cj, "level_set", "component"))
      comp.level_set.push_back(l.get<int>());
    for (const auto& lvl : require_field(cj, "nodes_by_level", "component")) {
      std::vector<Node> nodes;
      for (const auto& nj : lvl) nodes.push_back(node_from_json(nj, comp.ambient_branching));
      std::sort(nodes.begin(), nodes.end());
      comp.nodes_by_level.push_back(std::move(nodes));
    }
    out.components.push_back(std::move(comp));
  }
  if (out.components.empty()) throw DomainError("subtree payload has no components");
  return out;
}

json dense_set_to_json(const DenseSet& d) {
  json levels = json::array();
  for (const auto& [lvl, pts] : d.points_by_level) {
    json points = json::array();
    for (const auto& p : pts) points.push_back(point_to_json(p));
    levels.push_back(json{{"level", lvl}, {"points", points}});
  }
  return json{{"kind", "dense_set"},
              {"support_levels", d.support_levels},
              {"points_by_level", levels}};
}

namespace {

DenseSet dense_set_from_json(const json& j, const VectorTree& vt) {
  reject_unknown_fields(j, {"kind", "support_levels", "points_by_level"},
                        "dense_set payload");
  std::vector<LevelProductPoint> points;
  for (const auto& lj : require_field(j, "points_by_level", "dense_set payload")) {
    reject_unknown_fields(lj, {"level", "points"}, "points_by_level entry");
    int lvl = require_field(lj, "level", "points_by_level entry").get<int>();
    for (const auto& pj : require_field(lj, "points", "points_by_level entry")) {
      auto pt = point_from_json(pj, vt);
      if (pt.level() != lvl)
        throw DomainError("point " + point_to_string(pt) + " not at level " +
                          std::to_string(lvl));
      points.push_back(std::move(pt));
    }
  }
  std::vector<int> support;
  for (const auto& s : require_field(j, "support_levels", "dense_set payload"))
    support.push_back(s.get<int>());
  return DenseSet::from_points(vt, std::move(points), std::move(support));
}

LevelSelection selection_from_json(const json& j, const VectorTree& vt) {
  reject_unknown_fields(j, {"kind", "target", "level_set", "values"},
                        "level_selection payload");
  const json& tj = require_field(j, "target", "level_selection payload");
  reject_unknown_fields(tj, {"branching", "height"}, "target");
  LevelSelection sel;
  sel.ambient = vt;
  sel.target = HomogeneousTree{require_field(tj, "branching", "target").get<int>(),
                               require_field(tj, "height", "target").get<int>()};
  for (const auto& l : require_field(j, "level_set", "level_selection payload"))
    sel.level_set.push_back(l.get<int>());
  for (const auto& vj : require_field(j, "values", "level_selection payload")) {
    reject_unknown_fields(vj, {"point", "nodes"}, "selection value");
    auto pt = point_from_json(require_field(vj, "point", "selection value"), vt);
    std::vector<Node> nodes;
    for (const auto& nj : require_field(vj, "nodes", "selection value"))
      nodes.push_back(node_from_json(nj, sel.target.branching));
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    if (!sel.values.emplace(std::move(pt), std::move(nodes)).second)
      throw DomainError("duplicate selection value");
  }
  sel.check_valid();
  return sel;
}

}  // namespace

json selection_to_json(const LevelSelection& sel) {
  json values = json::array();
  for (const auto& [pt, nodes] : sel.values) {
    json njs = json::array();
    for (const auto& n : nodes) njs.push_back(node_to_json(n));
    values.push_back(json{{"point", point_to_json(pt)}, {"nodes", njs}});
  }
  return json{{"kind", "level_selection"},
              {"target", json{{"branching", sel.target.branching},
                              {"height", sel.target.height}}},
              {"level_set", sel.level_set},
              {"values", values}};
}

InstanceFile parse_instance(const json& j) {
  reject_unknown_fields(j, {"format_version", "ambient", "payload", "metadata"},
                        "instance");
  InstanceFile out;
  out.format_version = require_field(j, "format_version", "instance").get<int>();
  if (out.format_version != 1)
    throw DomainError("unsupported format_version " +
                      std::to_string(out.format_version));
  out.ambient = ambient_from_json(require_field(j, "ambient", "instance"));
  const json& payload = require_field(j, "payload", "instance");
  std::string kind = require_field(payload, "kind", "payload").get<std::string>();
  if (kind == "dense_set") {
    out.kind = InstanceFile::Kind::DenseSetPayload;
    out.dense = dense_set_from_json(payload, out.ambient);
  } else if (kind == "level_selection") {
    out.kind = InstanceFile::Kind::SelectionPayload;
    out.selection = selection_from_json(payload, out.ambient);
  } else if (kind == "subtree") {
    out.kind = InstanceFile::Kind::SubtreePayload;
    out.subtree = subtree_from_json(payload);
  } else if (kind == "node_set") {
    out.kind = InstanceFile::Kind::NodeSetPayload;
    reject_unknown_fields(payload, {"kind", "nodes"}, "node_set payload");
    if (out.ambient.dimension() != 1)
      throw DomainError("node_set payload needs a one-coordinate ambient");
    for (const auto& nj : require_field(payload, "nodes", "node_set payload")) {
      Node n = node_from_json(nj, out.ambient.trees[0].branching);
      if (!out.ambient.trees[0].contains(n))
        throw DomainError("node-not-in-tree: " + node_to_string(n));
      out.node_set.push_back(std::move(n));
    }
    std::sort(out.node_set.begin(), out.node_set.end());
    out.node_set.erase(std::unique(out.node_set.begin(), out.node_set.end()),
                       out.node_set.end());
  } else {
    throw DomainError("unknown payload kind '" + kind + "'");
  }
  if (auto it = j.find("metadata"); it != j.end()) {
    reject_unknown_fields(*it, {"seed", "note"}, "metadata");
    out.metadata = *it;
  }
  return out;
}

json print_instance(const InstanceFile& f) {
  json payload;
  switch (f.kind) {
    case InstanceFile::Kind::DenseSetPayload:
      payload = dense_set_to_json(*f.dense);
      break;
    case InstanceFile::Kind::SelectionPayload:
      payload = selection_to_json(*f.selection);
      break;
    case InstanceFile::Kind::SubtreePayload:
      payload = subtree_to_json(*f.subtree);
      break;
    case InstanceFile::Kind::NodeSetPayload: {
      json nodes = json::array();
      for (const auto& n : f.node_set) nodes.push_back(node_to_json(n));
      payload = json{{"kind", "node_set"}, {"nodes", nodes}};
      break;
    }
  }
  json out{{"format_version", f.format_version},
           {"ambient", ambient_to_json(f.ambient)},
           {"payload", payload}};
  if (!f.metadata.is_null() && !f.metadata.empty()) out["metadata"] = f.metadata;
  return out;
}

InstanceFile load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open instance file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DomainError("malformed JSON in " + path + ": " + e.what());
  }
  return parse_instance(j);
}

void store_instance(const InstanceFile& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write instance file: " + path);
  out << print_instance(f).dump(2) << "\n";
}

InstanceFile make_dense_instance(DenseSet d, json metadata) {
  InstanceFile f;
  f.ambient = d.ambient;
  f.kind = InstanceFile::Kind::DenseSetPayload;
  f.dense = std::move(d);
  f.metadata = std::move(metadata);
  return f;
}

InstanceFile make_selection_instance(LevelSelection sel, json metadata) {
  InstanceFile f;
  f.ambient = sel.ambient;
  f.kind = InstanceFile::Kind::SelectionPayload;
  f.selection = std::move(sel);
  f.metadata = std::move(metadata);
  return f;
}

InstanceFile make_subtree_instance(VectorStrongSubtree s, json metadata) {
  InstanceFile f;
  std::vector<HomogeneousTree> trees;
  for (const auto& c : s.components)
    trees.push_back(HomogeneousTree{c.ambient_branching, c.ambient_height});
  f.ambient = VectorTree{trees};
  f.kind = InstanceFile::Kind::SubtreePayload;
  f.subtree = std::move(s);
  f.metadata = std::move(metadata);
  return f;
}

json report_to_json(const RunReport& r) {
  return json{{"command", r.command},
              {"verdict", r.verdict},
              {"parameters", r.parameters},
              {"certificate", r.certificate},
              {"counters", r.counters},
              {"budget", json{{"cap", r.budget_cap}, {"used", r.budget_used}}}};
}

}  // namespace hltrees
