#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "hltrees/density_search.hpp"

namespace hltrees {

using json = nlohmann::json;

/// On-disk instance: a versioned envelope around one payload. Unknown fields
/// are rejected; nodes are integer arrays (a digit-string shorthand is
/// accepted on input for branching <= 10); rationals are "p/q" strings.
struct InstanceFile {
  enum class Kind { DenseSetPayload, SelectionPayload, SubtreePayload, NodeSetPayload };

  int format_version = 1;
  VectorTree ambient;
  Kind kind = Kind::DenseSetPayload;
  std::optional<DenseSet> dense;
  std::optional<LevelSelection> selection;
  std::optional<VectorStrongSubtree> subtree;
  std::vector<Node> node_set;  // single-coordinate ambient
  json metadata;               // optional: seed, note
};

json node_to_json(const Node& t);
Node node_from_json(const json& j, int branching);
json point_to_json(const LevelProductPoint& t);
LevelProductPoint point_from_json(const json& j, const VectorTree& vt);

json subtree_to_json(const VectorStrongSubtree& s);
VectorStrongSubtree subtree_from_json(const json& j);

json dense_set_to_json(const DenseSet& d);
json selection_to_json(const LevelSelection& sel);

InstanceFile parse_instance(const json& j);
json print_instance(const InstanceFile& f);
InstanceFile load_instance(const std::string& path);
void store_instance(const InstanceFile& f, const std::string& path);

InstanceFile make_dense_instance(DenseSet d, json metadata = json::object());
InstanceFile make_selection_instance(LevelSelection sel, json metadata = json::object());
InstanceFile make_subtree_instance(VectorStrongSubtree s, json metadata = json::object());

/// Deterministic run summary: no timing lives here (wall time goes to
/// stderr), so byte-identical reports across runs and schedules hold.
struct RunReport {
  std::string command;
  std::string verdict;
  json parameters = json::object();
  json certificate;  // null when absent
  json counters = json::object();
  std::uint64_t budget_cap = 0;
  std::uint64_t budget_used = 0;
};

json report_to_json(const RunReport& r);

}  // namespace hltrees
