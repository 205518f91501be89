#include "mctsgen/engine.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <spdlog/spdlog.h>

#include "mctsgen/errors.hpp"
#include "mctsgen/segment.hpp"
#include "mctsgen/sim_clock.hpp"

namespace mctsgen {

using nlohmann::json;

double uct_score(double node_value, std::uint64_t node_visits, std::uint64_t parent_visits,
                 double w) {
  if (node_visits == 0) throw ContractViolation("UCT of an unvisited node");
  if (parent_visits == 0) throw ContractViolation("UCT under an unvisited parent");
  const double explore = std::sqrt(std::log(static_cast<double>(parent_visits)) /
                                   static_cast<double>(node_visits));
  return node_value + w * explore;
}

NodeId select_leaf(const SearchTree& tree, double w) {
  NodeId cur = tree.root();
  while (true) {
    const auto& node = tree.node(cur);
    std::optional<NodeId> best;
    double best_score = 0.0;
    for (NodeId c : node.children) {
      const auto& child = tree.node(c);
      if (!child.evaluated()) continue;
      const double s = uct_score(child.value, child.visit_count, node.visit_count, w);
      if (!best || s > best_score || (s == best_score && c < *best)) {
        best = c;
        best_score = s;
      }
    }
    if (!best) return cur;
    cur = *best;
  }
}

std::vector<NodeId> expand(SearchTree& tree, NodeId node, const PolicyModel& policy, int k,
                           double temperature, std::string_view language_tag) {
  if (k < 1) throw ContractViolation("expand needs k >= 1");
  const auto& target = tree.node(node);
  if (target.terminal) throw ContractViolation("cannot expand a terminal node");
  if (!target.children.empty()) throw ContractViolation("can only expand a leaf");

  PolicyRequest req;
  req.context.question = tree.question();
  req.context.prefix = tree.prefix_of(node);
  req.context.language_tag = std::string(language_tag);
  req.mode = PolicyMode::next_sentence;
  req.samples = k;
  req.temperature = temperature;
  auto samples = policy.generate(req);

  std::vector<NodeId> children;
  std::set<std::string, std::less<>> seen;
  for (auto& s : samples) {
    auto text = std::string(trim(s.text));
    if (text.empty() || !seen.insert(text).second) continue;
    children.push_back(tree.add_child(node, {std::move(text), s.terminal}));
  }
  if (children.empty()) {
    auto& n = tree.node(node);
    n.terminal = true;
    n.sentence.terminal = true;
  }
  return children;
}

ChildEvaluation evaluate_child(SearchTree& tree, NodeId child, const PolicyModel& policy,
                               const RewardModel& reward, const EvaluateParams& params) {
  if (params.rollouts < 1) throw ContractViolation("evaluate needs m >= 1");
  if (tree.node(child).visit_count != 0) {
    throw ContractViolation("evaluate on an already visited node " + std::to_string(child));
  }

  PolicyRequest req;
  req.context.question = tree.question();
  req.context.prefix = tree.prefix_of(child);
  req.mode = PolicyMode::full_completion;
  req.samples = params.rollouts;
  req.temperature = params.temperature;
  const auto continuations = policy.generate(req);
  const auto prefix_text = join_sentences(req.context.prefix);

  ChildEvaluation eval;
  eval.child = child;
  bool empty_continuation = false;
  double sum = 0.0;
  for (const auto& cont : continuations) {
    Rollout r;
    if (cont.text.empty()) {
      empty_continuation = true;
      r.response = prefix_text;
    } else {
      r.response = prefix_text.empty() ? cont.text : prefix_text + " " + cont.text;
    }
    RewardRequest rr{tree.question(), r.response, std::nullopt, params.reward_mode};
    std::optional<HallucinationScore> score;
    std::string last_error;
    for (int attempt = 0; attempt < 2 && !score; ++attempt) {
      try {
        score = reward.score(rr);
      } catch (const Error& e) {
        last_error = e.what();
        spdlog::debug("reward attempt {} failed for node {}: {}", attempt + 1, child, last_error);
      }
    }
    if (!score) {
      throw EvaluationError("evaluation of node " + std::to_string(child) +
                                " failed after retry: " + last_error,
                            child);
    }
    r.likert = score->likert;
    r.critique = score->critique;
    sum += score->mapped_value;
    eval.rollouts.push_back(std::move(r));
  }

  auto& node = tree.node(child);
  eval.value = sum / static_cast<double>(continuations.size());
  node.value = eval.value;
  node.visit_count = 1;
  if (empty_continuation) {
    node.terminal = true;
    node.sentence.terminal = true;
  }
  return eval;
}

std::vector<ChildEvaluation> evaluate(SearchTree& tree, std::span<const NodeId> children,
                                      const PolicyModel& policy, const RewardModel& reward,
                                      const EvaluateParams& params) {
  std::vector<ChildEvaluation> out;
  out.reserve(children.size());
  for (NodeId c : children) out.push_back(evaluate_child(tree, c, policy, reward, params));
  return out;
}

void backpropagate(SearchTree& tree, NodeId leaf, double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw ContractViolation("reward outside [0,1]");
  for (NodeId id : tree.path_to(leaf)) {
    auto& n = tree.node(id);
    const double n_old = static_cast<double>(n.visit_count);
    n.visit_count += 1;
    n.value = (n.value * n_old + r) / static_cast<double>(n.visit_count);
  }
}

std::vector<NodeId> extract_best_path(const SearchTree& tree) {
  // reaches[id]: an evaluated terminal lies in the evaluated subtree of id.
  // Children always have larger ids than their parent.
  std::vector<char> reaches(tree.size(), 0);
  for (NodeId id = static_cast<NodeId>(tree.size()); id-- > 0;) {
    const auto& n = tree.node(id);
    if (!n.evaluated() && id != tree.root()) continue;
    if (n.terminal) reaches[id] = 1;
    for (NodeId c : n.children) reaches[id] = reaches[id] || reaches[c];
  }
  const bool want_terminal = reaches[tree.root()] != 0;

  std::vector<NodeId> path{tree.root()};
  NodeId cur = tree.root();
  while (!tree.node(cur).terminal) {
    std::optional<NodeId> best;
    for (NodeId c : tree.node(cur).children) {
      const auto& child = tree.node(c);
      if (!child.evaluated()) continue;
      if (want_terminal && !reaches[c]) continue;
      if (!best || child.value > tree.node(*best).value ||
          (child.value == tree.node(*best).value && c < *best)) {
        best = c;
      }
    }
    if (!best) break;
    path.push_back(*best);
    cur = *best;
  }
  return path;
}

std::string path_answer(const SearchTree& tree, const std::vector<NodeId>& path) {
  std::vector<Sentence> sentences;
  for (NodeId id : path) {
    if (id != tree.root()) sentences.push_back(tree.node(id).sentence);
  }
  return join_sentences(sentences);
}

namespace {

json evaluation_to_json(const SearchTree& tree, const ChildEvaluation& e) {
  json rollouts = json::array();
  for (std::size_t i = 0; i < e.rollouts.size(); ++i) {
    const auto& r = e.rollouts[i];
    rollouts.push_back({{"index", i},
                        {"response", r.response},
                        {"likert", r.likert},
                        {"critique", r.critique ? json(*r.critique) : json(nullptr)}});
  }
  return {{"child", e.child},
          {"prefix", join_sentences(tree.prefix_of(e.child))},
          {"terminal", tree.node(e.child).terminal},
          {"value", round_sig9(e.value)},
          {"rollouts", std::move(rollouts)}};
}

void write_recovery(const std::filesystem::path& path, const SearchConfig& config,
                    const SearchTree& tree, int iterations) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    spdlog::error("cannot write recovery file {}", path.string());
    return;
  }
  out << serialize_tree({config, tree, {TerminationReason::Kind::aborted, iterations}});
  spdlog::warn("search aborted; partial tree written to {}", path.string());
}

}  // namespace

SearchResult run_search(std::string_view question, const SearchConfig& config,
                        const PolicyModel& policy, const RewardModel& reward,
                        const SwitchModel& switch_model, const SearchOptions& options) {
  config.validate();
  Stopwatch watch(options.virtual_time);
  SearchResult result;
  result.tree = SearchTree(std::string(question));
  auto& tree = result.tree;
  auto emit = [&](json event) {
    if (options.events) options.events->emit(event);
  };

  SwitchRequest instance_req{SwitchLevel::instance, std::string(question), {}};
  result.instance_mode = decide_or_slow(switch_model, instance_req).mode;
  json start{{"event", "start"},
             {"question", question},
             {"config", config_to_json(config)},
             {"instance_mode", to_string(result.instance_mode)}};
  if (options.reference_answer) start["reference"] = *options.reference_answer;
  emit(std::move(start));

  if (result.instance_mode == ThinkingMode::fast) {
    PolicyRequest req;
    req.context.question = std::string(question);
    req.context.language_tag = options.language_tag;
    req.mode = PolicyMode::full_completion;
    req.samples = 1;
    req.temperature = config.temperature;
    result.answer = policy.generate(req).front().text;
    result.path = {tree.root()};
    result.reason = {TerminationReason::Kind::instance_fast, 0};
    result.wall_time = watch.elapsed();
    emit({{"event", "end"},
          {"termination_reason", {{"kind", "instance_fast"}, {"iterations_used", 0}}},
          {"answer", result.answer},
          {"path", result.path}});
    return result;
  }

  const EvaluateParams eval_params{config.rollouts, config.temperature, options.reward_mode};
  std::map<NodeId, double> initial_values;
  int iteration = 0;
  bool threshold_met = false;

  // Reward for re-selecting a node that cannot be expanded.
  auto terminal_reward = [&](NodeId id) {
    if (auto it = initial_values.find(id); it != initial_values.end()) return it->second;
    const auto answer = join_sentences(tree.prefix_of(id));
    if (answer.empty()) return 0.0;
    const auto score = reward.score({tree.question(), answer, std::nullopt, options.reward_mode});
    initial_values[id] = score.mapped_value;
    return score.mapped_value;
  };

  try {
    while (iteration < config.max_iterations && !threshold_met) {
      const NodeId leaf = select_leaf(tree, config.uct_weight);
      json event{{"event", "iteration"}, {"iteration", iteration}, {"selected", leaf}};

      double r = 0.0;
      if (tree.node(leaf).terminal) {
        r = terminal_reward(leaf);
        event["step_mode"] = nullptr;
        event["children"] = json::array();
        event["note"] = "terminal_revisit";
      } else {
        SwitchRequest step_req{SwitchLevel::step, std::string(question), tree.prefix_of(leaf)};
        const auto step = decide_or_slow(switch_model, step_req);
        ++result.total_steps;
        if (step.mode == ThinkingMode::slow) ++result.slow_steps;
        event["step_mode"] = to_string(step.mode);

        const int k = step.mode == ThinkingMode::slow ? config.expansions : 1;
        const auto children =
            expand(tree, leaf, policy, k, config.temperature, options.language_tag);
        event["children"] = children;

        if (children.empty()) {
          r = terminal_reward(leaf);
          event["note"] = "empty_continuation";
        } else {
          json evals = json::array();
          double sum = 0.0;
          int evaluated = 0;
          for (NodeId c : children) {
            auto e = evaluate_child(tree, c, policy, reward, eval_params);
            initial_values[c] = e.value;
            sum += e.value;
            ++evaluated;
            evals.push_back(evaluation_to_json(tree, e));
            const bool hit = tree.node(c).terminal && e.value >= config.reward_threshold;
            result.evaluations.push_back(std::move(e));
            if (hit) {
              threshold_met = true;
              event["note"] = "reward_threshold_met";
              event["triggering_child"] = c;
              break;
            }
          }
          event["evaluations"] = std::move(evals);
          r = sum / evaluated;
        }
      }

      backpropagate(tree, leaf, r);
      event["reward"] = round_sig9(r);
      ++iteration;
      emit(std::move(event));
      if (options.on_iteration) options.on_iteration(tree, iteration);
    }
  } catch (const Error&) {
    if (options.recovery_path) write_recovery(*options.recovery_path, config, tree, iteration);
    throw;
  }

  result.reason = {threshold_met ? TerminationReason::Kind::reward_threshold_met
                                 : TerminationReason::Kind::max_iterations,
                   iteration};
  result.path = extract_best_path(tree);
  result.answer = path_answer(tree, result.path);
  result.slow_step_ratio =
      result.total_steps == 0 ? 0.0
                              : static_cast<double>(result.slow_steps) / result.total_steps;
  result.wall_time = watch.elapsed();
  emit({{"event", "end"},
        {"termination_reason",
         {{"kind", to_string(result.reason.kind)}, {"iterations_used", iteration}}},
        {"answer", result.answer},
        {"path", result.path},
        {"slow_step_ratio", round_sig9(result.slow_step_ratio)}});
  return result;
}

}  // namespace mctsgen
