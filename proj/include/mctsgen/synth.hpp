#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mctsgen/dataset.hpp"
#include "mctsgen/judge.hpp"
#include "mctsgen/models.hpp"
#include "mctsgen/tree_io.hpp"

namespace mctsgen {

/// Scored rollout response used to train the reward model.
struct RewardRecord {
  std::string question;
  std::string answer_prefix;
  std::string completed_response;
  int likert = 0;
  std::optional<std::string> critique;  // set only for the critique-based set
  std::string source_run;
  std::uint64_t record_index = 0;  // position of the rollout within its run

  friend bool operator==(const RewardRecord&, const RewardRecord&) = default;
};

/// Fast/slow label for a question (instance) or a search state (step).
struct SwitchRecord {
  SwitchLevel level = SwitchLevel::step;
  std::string question;
  std::string prefix;  // empty at instance level
  int label = 0;
  std::optional<double> gamma_used;  // step level only
  std::string source_run;

  friend bool operator==(const SwitchRecord&, const SwitchRecord&) = default;
};

nlohmann::json to_json(const RewardRecord& r);
nlohmann::json to_json(const SwitchRecord& r);

/// One recorded search: the tree document plus its event log.
struct SearchTrace {
  std::string run_id;
  TreeDocument document;
  std::vector<nlohmann::json> events;
  std::optional<std::string> reference;  // from the start event, if recorded
};

/// Loads every `<run>.tree.json` in `dir` together with `<run>.events.jsonl`
/// (required), sorted by run id.
std::vector<SearchTrace> load_traces(const std::filesystem::path& dir);

struct RewardSynthStats {
  std::size_t rollouts = 0;
  std::size_t records = 0;
  std::size_t scorer_failures = 0;
  std::size_t missing_reference = 0;

  nlohmann::json to_json() const;
};

/// Rescores every rollout response found in the traces' events. With
/// `with_reference` the trace's ground truth goes into the scoring prompt and
/// traces without one are skipped. Output is ordered by (run, index).
std::vector<RewardRecord> collect_reward_data(const std::vector<SearchTrace>& traces,
                                              const RewardModel& scorer, bool with_reference,
                                              RewardMode mode, RewardSynthStats* stats = nullptr,
                                              int jobs = 1);

/// |A ∩ B| / |A ∪ B| over lower-cased alphanumeric tokens; 1 for two empty sets.
double token_jaccard(std::string_view a, std::string_view b);

inline constexpr double kDuplicateJaccard = 0.9;

struct BalanceStats {
  std::size_t input = 0;
  std::size_t duplicates = 0;
  std::size_t downsampled = 0;
  std::map<int, std::size_t> before;  // per likert, after dedup
  std::map<int, std::size_t> after;

  nlohmann::json to_json() const;
};

/// Drops records whose response is a near duplicate (Jaccard >= 0.9) of an
/// earlier kept record of the same question, then downsamples every likert
/// class to the smallest non-empty class. Input order is preserved.
std::vector<RewardRecord> dedup_and_balance(const std::vector<RewardRecord>& records,
                                            std::uint64_t seed, BalanceStats* stats = nullptr);

/// One step record per evaluated node (root included), in id order; label 1
/// iff 5 - 4 * value > gamma.
std::vector<SwitchRecord> label_step_switch(const SearchTree& tree, double gamma,
                                            const std::string& source_run = "");

struct InstanceSynthStats {
  std::size_t questions = 0;
  std::size_t labeled = 0;
  std::map<std::string, std::string> skipped;  // item id -> reason

  nlohmann::json to_json() const;
};

/// Direct generation per question, judged: correct -> 0, incorrect -> 1.
/// Failing items are skipped and reported.
std::vector<SwitchRecord> label_instance_switch(const std::vector<QaItem>& items,
                                                const PolicyModel& policy, const Judge& judge,
                                                double temperature,
                                                InstanceSynthStats* stats = nullptr);

}  // namespace mctsgen
