#pragma once

#include <string>

#include "mctsgen/tree.hpp"

namespace mctsgen {

/// Graphviz rendering of a search tree. Each label shows the sentence and
/// (n, v); nodes and edges on the best path are drawn in red.
std::string tree_to_dot(const SearchTree& tree);

}  // namespace mctsgen
