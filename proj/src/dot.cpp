#include "mctsgen/dot.hpp"

#include <fmt/format.h>

#include <set>

#include "mctsgen/engine.hpp"

namespace mctsgen {

namespace {

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string tree_to_dot(const SearchTree& tree) {
  const auto best = extract_best_path(tree);
  const std::set<NodeId> on_path(best.begin(), best.end());
  std::set<std::pair<NodeId, NodeId>> path_edges;
  for (std::size_t i = 1; i < best.size(); ++i) path_edges.emplace(best[i - 1], best[i]);

  std::string out = "digraph search_tree {\n  rankdir=TB;\n  node [shape=box];\n";
  for (const auto& n : tree.nodes()) {
    auto label = escape(n.sentence.text);
    label += fmt::format("\\n(n={}, v={:.4f})", n.visit_count, n.value);
    out += fmt::format("  n{} [label=\"{}\"", n.id, label);
    if (n.terminal) out += ", peripheries=2";
    if (on_path.count(n.id)) out += ", color=red, penwidth=2";
    out += "];\n";
  }
  for (const auto& n : tree.nodes()) {
    for (auto c : n.children) {
      out += fmt::format("  n{} -> n{}", n.id, c);
      if (path_edges.count({n.id, c})) out += " [color=red, penwidth=2]";
      out += ";\n";
    }
  }
  out += "}\n";
  return out;
}

}  // namespace mctsgen
