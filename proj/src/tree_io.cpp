#include "mctsgen/tree_io.hpp"

#include <cstdio>
#include <cstdlib>

#include "mctsgen/errors.hpp"

namespace mctsgen {

using nlohmann::json;

namespace {

struct KindName {
  TerminationReason::Kind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {TerminationReason::Kind::max_iterations, "max_iterations"},
    {TerminationReason::Kind::reward_threshold_met, "reward_threshold_met"},
    {TerminationReason::Kind::instance_fast, "instance_fast"},
    {TerminationReason::Kind::aborted, "aborted"},
};

template <typename T>
T field(const json& obj, const char* key, std::int64_t node_id = -1) {
  auto it = obj.find(key);
  if (it == obj.end()) throw TreeParseError(std::string("missing field '") + key + "'", node_id);
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw TreeParseError(std::string("bad field '") + key + "': " + e.what(), node_id);
  }
}

}  // namespace

std::string_view to_string(TerminationReason::Kind kind) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == kind) return kn.name;
  }
  return "unknown";
}

TerminationReason::Kind termination_kind_from_string(std::string_view s) {
  for (const auto& kn : kKindNames) {
    if (kn.name == s) return kn.kind;
  }
  throw TreeParseError("unknown termination kind '" + std::string(s) + "'");
}

double round_sig9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

json config_to_json(const SearchConfig& c) {
  return json{{"expansions", c.expansions},
              {"rollouts", c.rollouts},
              {"max_iterations", c.max_iterations},
              {"uct_weight", round_sig9(c.uct_weight)},
              {"reward_threshold", round_sig9(c.reward_threshold)},
              {"gamma", round_sig9(c.gamma)},
              {"temperature", round_sig9(c.temperature)},
              {"seed", c.seed}};
}

SearchConfig config_from_json(const json& j) {
  if (!j.is_object()) throw TreeParseError("config must be an object");
  SearchConfig c;
  c.expansions = field<int>(j, "expansions");
  c.rollouts = field<int>(j, "rollouts");
  c.max_iterations = field<int>(j, "max_iterations");
  c.uct_weight = field<double>(j, "uct_weight");
  c.reward_threshold = field<double>(j, "reward_threshold");
  c.gamma = field<double>(j, "gamma");
  c.temperature = field<double>(j, "temperature");
  c.seed = field<std::uint64_t>(j, "seed");
  return c;
}

json to_json(const TreeDocument& doc) {
  json nodes = json::array();
  for (const auto& n : doc.tree.nodes()) {
    nodes.push_back(json{{"id", n.id},
                         {"parent", n.parent ? json(*n.parent) : json(nullptr)},
                         {"text", n.sentence.text},
                         {"n", n.visit_count},
                         {"v", round_sig9(n.value)},
                         {"terminal", n.terminal},
                         {"children", n.children}});
  }
  return json{{"config", config_to_json(doc.config)},
              {"nodes", std::move(nodes)},
              {"root_id", doc.tree.root()},
              {"termination_reason",
               {{"kind", to_string(doc.reason.kind)},
                {"iterations_used", doc.reason.iterations_used}}}};
}

std::string serialize_tree(const TreeDocument& doc) { return to_json(doc).dump(2) + "\n"; }

TreeDocument tree_from_json(const json& j) {
  if (!j.is_object()) throw TreeParseError("tree document must be an object");
  TreeDocument doc;
  doc.config = config_from_json(field<json>(j, "config"));

  const auto reason = field<json>(j, "termination_reason");
  doc.reason.kind = termination_kind_from_string(field<std::string>(reason, "kind"));
  doc.reason.iterations_used = field<int>(reason, "iterations_used");

  const auto raw_nodes = field<json>(j, "nodes");
  if (!raw_nodes.is_array()) throw TreeParseError("'nodes' must be an array");
  std::vector<SearchNode> nodes;
  nodes.reserve(raw_nodes.size());
  for (const auto& rn : raw_nodes) {
    std::int64_t id = -1;
    if (rn.is_object() && rn.contains("id") && rn["id"].is_number_integer()) {
      id = rn["id"].get<std::int64_t>();
    }
    if (id < 0) throw TreeParseError("node without a valid id");
    SearchNode n;
    n.id = static_cast<NodeId>(id);
    const auto parent = field<json>(rn, "parent", id);
    if (!parent.is_null()) {
      if (!parent.is_number_unsigned()) throw TreeParseError("bad parent id", id);
      n.parent = parent.get<NodeId>();
    }
    n.sentence.text = field<std::string>(rn, "text", id);
    n.visit_count = field<std::uint64_t>(rn, "n", id);
    n.value = field<double>(rn, "v", id);
    n.terminal = field<bool>(rn, "terminal", id);
    n.sentence.terminal = n.terminal;
    n.children = field<std::vector<NodeId>>(rn, "children", id);
    nodes.push_back(std::move(n));
  }
  const auto root = field<std::int64_t>(j, "root_id");
  if (root < 0) throw TreeParseError("bad root id");
  for (const auto& n : nodes) {
    if (n.parent && *n.parent >= nodes.size()) {
      throw TreeParseError("references missing parent " + std::to_string(*n.parent), n.id);
    }
  }
  doc.tree = SearchTree::from_nodes(std::move(nodes), static_cast<NodeId>(root));
  return doc;
}

TreeDocument deserialize_tree(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw TreeParseError(std::string("malformed tree document: ") + e.what());
  }
  return tree_from_json(j);
}

}  // namespace mctsgen
