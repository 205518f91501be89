#include "mctsgen/tree.hpp"

#include <algorithm>

#include "mctsgen/errors.hpp"
#include "mctsgen/tree_io.hpp"

namespace mctsgen {

SearchTree::SearchTree(std::string question) {
  SearchNode root;
  root.id = 0;
  root.sentence.text = std::move(question);
  nodes_.push_back(std::move(root));
}

SearchTree SearchTree::from_nodes(std::vector<SearchNode> nodes, NodeId root) {
  if (nodes.empty()) throw TreeParseError("tree has no nodes");
  if (root >= nodes.size()) throw TreeParseError("root id out of range", root);
  SearchTree t;
  t.nodes_ = std::move(nodes);
  t.root_ = root;
  t.validate();
  return t;
}

const SearchNode& SearchTree::node(NodeId id) const {
  if (id >= nodes_.size()) throw ContractViolation("unknown node id " + std::to_string(id));
  return nodes_[id];
}

SearchNode& SearchTree::node(NodeId id) {
  if (id >= nodes_.size()) throw ContractViolation("unknown node id " + std::to_string(id));
  return nodes_[id];
}

NodeId SearchTree::add_child(NodeId parent, Sentence sentence) {
  if (parent >= nodes_.size()) {
    throw ContractViolation("unknown parent id " + std::to_string(parent));
  }
  SearchNode child;
  child.id = static_cast<NodeId>(nodes_.size());
  child.parent = parent;
  child.terminal = sentence.terminal;
  child.sentence = std::move(sentence);
  nodes_.push_back(std::move(child));
  nodes_[parent].children.push_back(nodes_.back().id);
  return nodes_.back().id;
}

std::vector<NodeId> SearchTree::path_to(NodeId id) const {
  std::vector<NodeId> path;
  std::optional<NodeId> cur = id;
  while (cur) {
    path.push_back(*cur);
    if (path.size() > nodes_.size()) throw ContractViolation("cycle in search tree");
    cur = node(*cur).parent;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<Sentence> SearchTree::prefix_of(NodeId id) const {
  std::vector<Sentence> out;
  for (NodeId n : path_to(id)) {
    if (n != root_) out.push_back(nodes_[n].sentence);
  }
  return out;
}

int SearchTree::depth(NodeId id) const { return static_cast<int>(path_to(id).size()) - 1; }

int SearchTree::height() const {
  int h = 0;
  std::vector<std::pair<NodeId, int>> stack{{root_, 0}};
  while (!stack.empty()) {
    auto [id, d] = stack.back();
    stack.pop_back();
    h = std::max(h, d);
    for (NodeId c : nodes_[id].children) stack.emplace_back(c, d + 1);
  }
  return h;
}

void SearchTree::validate() const {
  const auto n = nodes_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nd = nodes_[i];
    if (nd.id != i) throw TreeParseError("node ids must be dense and ordered", nd.id);
    if (nd.evaluated() && !(nd.value >= 0.0 && nd.value <= 1.0)) {
      throw TreeParseError("value outside [0,1]", nd.id);
    }
    if (i == root_) {
      if (nd.parent) throw TreeParseError("root must not have a parent", nd.id);
    } else {
      if (!nd.parent) throw TreeParseError("non-root node without parent", nd.id);
      if (*nd.parent >= n) throw TreeParseError("parent does not exist", nd.id);
      const auto& siblings = nodes_[*nd.parent].children;
      if (std::count(siblings.begin(), siblings.end(), nd.id) != 1) {
        throw TreeParseError("parent does not list this node exactly once", nd.id);
      }
    }
    for (NodeId c : nd.children) {
      if (c >= n) throw TreeParseError("child does not exist", nd.id);
      if (nodes_[c].parent != nd.id) throw TreeParseError("child points at another parent", c);
    }
  }
  // Reachability from the root; with the link checks above this rules out cycles.
  std::vector<char> seen(n, 0);
  std::vector<NodeId> stack{root_};
  std::size_t visited = 0;
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    if (seen[id]) throw TreeParseError("cycle detected", id);
    seen[id] = 1;
    ++visited;
    for (NodeId c : nodes_[id].children) stack.push_back(c);
  }
  if (visited != n) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!seen[i]) throw TreeParseError("node unreachable from root", static_cast<std::int64_t>(i));
    }
  }
}

bool structurally_equal(const SearchTree& a, const SearchTree& b) {
  if (a.size() != b.size() || a.root() != b.root()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.nodes()[i];
    const auto& y = b.nodes()[i];
    if (x.id != y.id || x.parent != y.parent || x.sentence.text != y.sentence.text ||
        x.terminal != y.terminal || x.visit_count != y.visit_count || x.children != y.children) {
      return false;
    }
    if (round_sig9(x.value) != round_sig9(y.value)) return false;
  }
  return true;
}

}  // namespace mctsgen
