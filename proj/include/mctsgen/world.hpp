#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "mctsgen/models.hpp"

namespace mctsgen {

/// Parameters of a generated FactWorld.
struct WorldSpec {
  int questions = 20;
  int branch_factor = 3;
  int depth_min = 2;
  int depth_max = 4;
  double hallucination_rate = 0.3;
  std::uint64_t seed = 1;
  /// Every truthful state gets a hallucinated continuation that dominates
  /// the sampling weights, so greedy decoding always goes wrong.
  bool adversarial = false;

  void validate() const;
};

struct WorldNode {
  std::uint32_t id = 0;
  std::string text;
  bool truthful = true;
  bool terminal = false;
  std::vector<std::uint32_t> children;
  std::vector<int> weights;  // sampling weight per child
};

/// One question with its statement graph. Node 0 is the question itself.
/// Every truthful path ends in the shared answer node; once a path takes a
/// hallucinated statement every later statement is hallucinated as well.
struct WorldQuestion {
  std::string id;
  std::string question;
  std::string answer;
  std::string language_tag = "en";
  int depth = 0;
  std::vector<WorldNode> nodes;
};

/// Seeded synthetic QA environment with labeled statements. Immutable after
/// construction and safe to share between threads.
class FactWorld {
 public:
  static constexpr int kFormatVersion = 1;

  static FactWorld generate(const WorldSpec& spec);
  static FactWorld from_json(const nlohmann::json& j);
  static FactWorld load(const std::filesystem::path& path);

  nlohmann::json to_json() const;
  /// Canonical bytes (sorted keys, two-space indent, trailing newline).
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

  const WorldSpec& spec() const { return spec_; }
  const std::vector<WorldQuestion>& questions() const { return questions_; }

  /// Index of a question. A trailing chain-of-thought suffix is ignored.
  /// Throws LookupError.
  std::size_t question_index(std::string_view question) const;

  /// Node reached by following `prefix` from the question. Throws LookupError.
  std::uint32_t locate(std::size_t question, const std::vector<Sentence>& prefix) const;

  /// Truthfulness of a statement text, or nullopt when the world does not know it.
  std::optional<bool> label(std::size_t question, std::string_view text) const;

  /// Probability mass (at temperature 1) of hallucinated children of a node.
  double hallucinated_mass(std::size_t question, std::uint32_t node) const;

  /// Child index drawn for (seed, run seed, question, node, sample index).
  std::size_t sample_child(std::size_t question, std::uint32_t node, std::uint64_t run_seed,
                           std::uint64_t sample_index, std::uint64_t purpose,
                           double temperature) const;

  /// Fraction of hallucinated statements among the answer's sentences;
  /// statements unknown to the world count as hallucinated.
  double hallucinated_fraction(std::size_t question, std::string_view answer) const;

  /// All complete statement paths below the question (exhaustive enumeration).
  std::vector<std::vector<std::uint32_t>> enumerate_paths(std::size_t question) const;

 private:
  void index();

  WorldSpec spec_;
  std::vector<WorldQuestion> questions_;
  std::unordered_map<std::string, std::size_t> by_question_;
  std::vector<std::unordered_map<std::string, std::uint32_t>> by_text_;
};

/// Virtual seconds the simulated backends charge per call.
struct SimLatency {
  double policy_call = 0.05;
  double per_sentence = 0.1;
  double reward_call = 0.2;
  double switch_call = 0.02;
};

/// Draw purposes, part of the sampling key.
inline constexpr std::uint64_t kPurposeNextSentence = 1;
inline constexpr std::uint64_t kPurposeCompletion = 2;

/// Policy that samples continuations from the statement graph. Each draw is a
/// pure function of (world seed, run seed, question, prefix, sample index).
class WorldPolicy final : public PolicyModel {
 public:
  WorldPolicy(const FactWorld& world, std::uint64_t run_seed, SimLatency latency = {})
      : world_(world), run_seed_(run_seed), latency_(latency) {}

 protected:
  std::vector<std::string> generate_raw(const PolicyRequest& request) const override;

 private:
  const FactWorld& world_;
  std::uint64_t run_seed_;
  SimLatency latency_;
};

/// Oracle reward: likert = 1 + round(4 * hallucinated fraction), half away from zero.
class WorldReward final : public RewardModel {
 public:
  explicit WorldReward(const FactWorld& world, SimLatency latency = {})
      : world_(world), latency_(latency) {}
  HallucinationScore score(const RewardRequest& request) const override;

 private:
  const FactWorld& world_;
  SimLatency latency_;
};

/// Expected oracle Likert of a complete response continued from `prefix`,
/// with continuations drawn by the raw statement weights. This is the quantity
/// the step-switch labels threshold. Throws LookupError for unknown states.
double expected_rollout_likert(const FactWorld& world, std::size_t question,
                               const std::vector<Sentence>& prefix);

/// Switch estimator backed by expected_rollout_likert.
HeuristicSwitch::Estimator world_risk_estimator(const FactWorld& world, SimLatency latency = {});

/// Likert score for a hallucinated fraction in [0, 1].
int likert_from_fraction(double fraction);

}  // namespace mctsgen
