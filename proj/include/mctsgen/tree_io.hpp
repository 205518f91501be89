#pragma once

#include <string>
#include <string_view>

#include "json.hpp"
#include "mctsgen/tree.hpp"
#include "mctsgen/types.hpp"

namespace mctsgen {

struct TerminationReason {
  enum class Kind {
    max_iterations,
    reward_threshold_met,
    instance_fast,  // instance switch chose direct generation; no search ran
    aborted,        // backend failure; only written to recovery files
  };
  Kind kind = Kind::max_iterations;
  int iterations_used = 0;

  friend bool operator==(const TerminationReason&, const TerminationReason&) = default;
};

std::string_view to_string(TerminationReason::Kind kind);
TerminationReason::Kind termination_kind_from_string(std::string_view s);

/// What gets written per search: config, the tree and why the search stopped.
struct TreeDocument {
  SearchConfig config;
  SearchTree tree{""};
  TerminationReason reason;
};

/// Rounds to 9 significant digits, the precision used in every document.
double round_sig9(double v);

nlohmann::json config_to_json(const SearchConfig& c);
SearchConfig config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TreeDocument& doc);

/// Canonical bytes: sorted keys, two-space indent, trailing newline.
std::string serialize_tree(const TreeDocument& doc);

/// Throws TreeParseError; errors tied to a node carry its id.
TreeDocument deserialize_tree(std::string_view text);
TreeDocument tree_from_json(const nlohmann::json& j);

}  // namespace mctsgen
