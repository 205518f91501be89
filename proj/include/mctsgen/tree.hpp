#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mctsgen/types.hpp"

namespace mctsgen {

using NodeId = std::uint32_t;

/// One generation step in the search tree: the sentence, N(s) and V(s).
struct SearchNode {
  NodeId id = 0;
  std::optional<NodeId> parent;
  Sentence sentence;
  std::uint64_t visit_count = 0;
  double value = 0.0;  // meaningful once visit_count >= 1
  std::vector<NodeId> children;
  bool terminal = false;

  bool evaluated() const { return visit_count >= 1; }
};

/// Arena-backed search tree. Node ids are dense indices; the root is node 0
/// unless the tree was rebuilt from a document with another root.
class SearchTree {
 public:
  explicit SearchTree(std::string question);

  /// Rebuilds a tree from raw nodes and checks it. Throws TreeParseError.
  static SearchTree from_nodes(std::vector<SearchNode> nodes, NodeId root);

  NodeId root() const { return root_; }
  const std::string& question() const { return nodes_[root_].sentence.text; }

  const SearchNode& node(NodeId id) const;
  SearchNode& node(NodeId id);
  const std::vector<SearchNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  NodeId add_child(NodeId parent, Sentence sentence);

  /// Ids from the root down to `id`, both included.
  std::vector<NodeId> path_to(NodeId id) const;

  /// Sentences on the path to `id`, root excluded.
  std::vector<Sentence> prefix_of(NodeId id) const;

  /// Number of edges from the root.
  int depth(NodeId id) const;

  /// Deepest level of the tree.
  int height() const;

  /// Checks parent/child links, acyclicity and value ranges. Throws
  /// TreeParseError naming the first offending node.
  void validate() const;

 private:
  SearchTree() = default;

  std::vector<SearchNode> nodes_;
  NodeId root_ = 0;
};

/// Shape, texts, flags and counts equal; values equal at 9 significant digits.
bool structurally_equal(const SearchTree& a, const SearchTree& b);

}  // namespace mctsgen
