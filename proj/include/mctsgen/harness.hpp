#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mctsgen/dataset.hpp"
#include "mctsgen/engine.hpp"
#include "mctsgen/judge.hpp"
#include "mctsgen/models.hpp"

namespace mctsgen {

enum class Method { direct, cot, self_consistency, best_of_n, mcts };

std::string_view to_string(Method m);
/// Throws ValidationError for an unknown name.
Method method_from_string(std::string_view s);
const std::vector<Method>& all_methods();

/// One direct completion (sample 0).
std::string run_direct(const QaItem& item, const PolicyModel& policy, double temperature);

/// Completion for the question with the zero-shot reasoning suffix; the
/// answer is the completion's last sentence.
std::string run_cot(const QaItem& item, const PolicyModel& policy, double temperature);

struct SampledAnswer {
  std::string answer;
  int n_effective = 0;  // samples that survived backend/scoring failures
};

/// Majority vote over n completions keyed on the normalized final sentence;
/// ties go to the class sampled first. Failed samples are dropped; throws
/// BackendError when none succeed.
SampledAnswer run_self_consistency(const QaItem& item, const PolicyModel& policy, int n,
                                   double temperature);

/// Highest mapped reward among n completions, earliest on ties. Failed
/// samples are dropped; throws BackendError when none succeed.
SampledAnswer run_best_of_n(const QaItem& item, const PolicyModel& policy,
                            const RewardModel& reward, int n, double temperature);

struct Backends {
  const PolicyModel* policy = nullptr;
  const RewardModel* reward = nullptr;
  const SwitchModel* switch_model = nullptr;
  const Judge* judge = nullptr;
};

struct EvalOptions {
  int samples = 20;  // self-consistency and best-of-n
  int jobs = 1;
  bool virtual_time = false;
  RewardMode reward_mode = RewardMode::generative;
  /// For mcts: write `<id>.tree.json` and `<id>.events.jsonl` per item.
  std::optional<std::filesystem::path> trace_dir;
};

struct ItemResult {
  std::string id;
  bool correct = false;
  double wall_time = 0.0;
  std::optional<double> slow_step_ratio;  // mcts only
  std::string answer;
  std::optional<int> n_effective;  // sampling baselines only
  std::optional<std::string> error;
};

struct EvalReport {
  Method method = Method::direct;
  std::vector<ItemResult> per_item;  // dataset order
  std::optional<double> accuracy;    // absent for an empty dataset
  double mean_time = 0.0;
  std::optional<double> mean_slow_step_ratio;
  std::size_t errors = 0;
  nlohmann::json settings;  // method parameters, echoed into the report

  bool empty() const { return per_item.empty(); }
  /// Recomputes the aggregates from per_item.
  void aggregate();
  nlohmann::json to_json() const;
};

/// Runs a method over a dataset and judges each answer. Item failures are
/// recorded in the report (counted as incorrect), never thrown.
EvalReport evaluate_method(const std::vector<QaItem>& dataset, Method method,
                           const SearchConfig& config, const Backends& backends,
                           const EvalOptions& options);

/// Side-by-side summary of several reports.
nlohmann::json comparison_json(const std::vector<EvalReport>& reports,
                               const std::vector<std::string>& labels);
std::string comparison_table(const std::vector<EvalReport>& reports,
                             const std::vector<std::string>& labels);

}  // namespace mctsgen
