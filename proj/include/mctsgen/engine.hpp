#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mctsgen/events.hpp"
#include "mctsgen/models.hpp"
#include "mctsgen/tree.hpp"
#include "mctsgen/tree_io.hpp"
#include "mctsgen/types.hpp"

namespace mctsgen {

/// V + w * sqrt(ln(N_parent) / N). Throws ContractViolation when either
/// visit count is zero; unvisited children are never scored.
double uct_score(double node_value, std::uint64_t node_visits, std::uint64_t parent_visits,
                 double w);

/// Walks down from the root taking the evaluated child with the highest UCT
/// score (lowest id on ties) until a node without evaluated children.
NodeId select_leaf(const SearchTree& tree, double w);

/// Samples `k` next sentences below `node` and adds the distinct ones (exact
/// match after trimming) as unevaluated children. Empty continuations add no
/// child; if every sample is empty the node becomes terminal. Policy errors
/// propagate with the tree unchanged.
std::vector<NodeId> expand(SearchTree& tree, NodeId node, const PolicyModel& policy, int k,
                           double temperature, std::string_view language_tag = "en");

struct Rollout {
  std::string response;
  int likert = 0;
  std::optional<std::string> critique;
};

struct ChildEvaluation {
  NodeId child = 0;
  std::vector<Rollout> rollouts;
  double value = 0.0;
};

struct EvaluateParams {
  int rollouts = 5;
  double temperature = 0.9;
  RewardMode reward_mode = RewardMode::generative;
};

/// Samples m complete responses from the child's state, scores each and sets
/// the child's value to the mean mapped score with visit_count = 1. A failed
/// score is retried once; a second failure throws EvaluationError.
ChildEvaluation evaluate_child(SearchTree& tree, NodeId child, const PolicyModel& policy,
                               const RewardModel& reward, const EvaluateParams& params);

std::vector<ChildEvaluation> evaluate(SearchTree& tree, std::span<const NodeId> children,
                                      const PolicyModel& policy, const RewardModel& reward,
                                      const EvaluateParams& params);

/// Running-mean update of every node from the root down to `leaf`:
/// N <- N + 1, V <- (V * N_old + r) / N.
void backpropagate(SearchTree& tree, NodeId leaf, double r);

/// Greedy descent by maximal value (lowest id on ties) over evaluated
/// children, stopping at a terminal node or a leaf. Starts with the root.
/// When the tree holds an evaluated terminal, only children leading to one
/// are candidates, so ties cannot strand the descent on an open leaf.
std::vector<NodeId> extract_best_path(const SearchTree& tree);

/// Sentences of a path (root excluded) joined by single spaces.
std::string path_answer(const SearchTree& tree, const std::vector<NodeId>& path);

struct SearchResult {
  std::string answer;
  std::vector<NodeId> path;
  SearchTree tree{""};
  TerminationReason reason;
  double wall_time = 0.0;
  ThinkingMode instance_mode = ThinkingMode::slow;
  int slow_steps = 0;
  int total_steps = 0;
  double slow_step_ratio = 0.0;
  std::vector<ChildEvaluation> evaluations;  // every evaluation, in order

  TreeDocument document(const SearchConfig& config) const { return {config, tree, reason}; }
};

struct SearchOptions {
  EventSink* events = nullptr;
  /// Where to write the partial tree if a backend fails mid-search.
  std::optional<std::filesystem::path> recovery_path;
  /// Called after every completed iteration.
  std::function<void(const SearchTree&, int iteration)> on_iteration;
  RewardMode reward_mode = RewardMode::generative;
  std::string language_tag = "en";
  /// Report only simulated latency as wall time (deterministic on the sim backend).
  bool virtual_time = false;
  /// Ground truth recorded in the start event for later reward-data synthesis.
  /// Never shown to the models during search.
  std::optional<std::string> reference_answer;
};

/// Switch-gated MCTS over sentence steps.
///
/// The instance switch runs first; fast returns one direct completion. Slow
/// iterates select, step switch, expand (K children when slow, 1 when fast),
/// evaluate and backpropagate until M iterations or until a terminal child's
/// initial value reaches the reward threshold, then extracts the best path.
/// Selecting an already terminal leaf skips expansion and backpropagates its
/// initial value again.
SearchResult run_search(std::string_view question, const SearchConfig& config,
                        const PolicyModel& policy, const RewardModel& reward,
                        const SwitchModel& switch_model, const SearchOptions& options = {});

}  // namespace mctsgen
