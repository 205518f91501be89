#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mctsgen/types.hpp"

namespace mctsgen {

// ---------------------------------------------------------------------------
// Policy

enum class PolicyMode { next_sentence, full_completion };

struct PolicyRequest {
  GenerationContext context;
  PolicyMode mode = PolicyMode::next_sentence;
  int samples = 1;
  double temperature = 0.9;
  /// Index of the first sample; seeded backends key draws on offset + i so
  /// callers can request samples one at a time without repeating draws.
  int sample_offset = 0;
};

/// Generator of next sentences and complete continuations.
///
/// Implementations provide generate_raw(); generate() validates the request
/// and normalises the replies. A raw reply is text that ends with kEndMarker
/// when the response is complete.
class PolicyModel {
 public:
  virtual ~PolicyModel() = default;

  /// Returns exactly `samples` outputs. In next_sentence mode each output is
  /// the first sentence of the raw reply (empty text + terminal when the
  /// reply is an empty continuation). In full_completion mode each output is
  /// the whole continuation with terminal = true.
  std::vector<Sentence> generate(const PolicyRequest& request) const;

 protected:
  virtual std::vector<std::string> generate_raw(const PolicyRequest& request) const = 0;
};

// ---------------------------------------------------------------------------
// Reward

enum class RewardMode { generative, critique };

struct RewardRequest {
  std::string question;
  std::string answer_fragment;
  std::optional<std::string> reference_answer;  // reward-data synthesis only
  RewardMode mode = RewardMode::generative;
};

class RewardModel {
 public:
  virtual ~RewardModel() = default;
  /// Throws ScoringError when the backend reply carries no valid score.
  virtual HallucinationScore score(const RewardRequest& request) const = 0;
};

/// The reward prompt, byte-stable for identical requests.
std::string build_reward_prompt(const RewardRequest& request);

/// Parses a reward reply. The last standalone integer in the reply is the
/// score; it must lie in 1..5 (never clamped). In critique mode the text
/// before the score, minus a trailing "Score:" label, is the critique.
HallucinationScore parse_reward_reply(std::string_view reply, RewardMode mode);

// ---------------------------------------------------------------------------
// Switch

struct SwitchRequest {
  SwitchLevel level = SwitchLevel::step;
  std::string question;
  std::vector<Sentence> prefix;  // empty at instance level

  void validate() const;
};

class SwitchModel {
 public:
  virtual ~SwitchModel() = default;
  virtual ThinkingDecision decide(const SwitchRequest& request) const = 0;
};

/// Calls the switch; any failure degrades to slow thinking and is logged.
ThinkingDecision decide_or_slow(const SwitchModel& model, const SwitchRequest& request);

class FixedSwitch final : public SwitchModel {
 public:
  explicit FixedSwitch(ThinkingMode mode) : mode_(mode) {}
  ThinkingDecision decide(const SwitchRequest& request) const override;

 private:
  ThinkingMode mode_;
};

/// Threshold switch over an estimated Likert risk of the current state.
///
/// Step level: slow iff estimate > step_gamma (strict). Instance level: slow
/// iff estimate > instance_gamma, or always slow when no instance threshold
/// is configured.
class HeuristicSwitch final : public SwitchModel {
 public:
  using Estimator = std::function<double(const SwitchRequest&)>;

  HeuristicSwitch(Estimator estimator, double step_gamma,
                  std::optional<double> instance_gamma = std::nullopt);
  ThinkingDecision decide(const SwitchRequest& request) const override;

 private:
  Estimator estimator_;
  double step_gamma_;
  std::optional<double> instance_gamma_;
};

// ---------------------------------------------------------------------------
// Chat transport shared by the prompt-driven models

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatParams {
  double temperature = 0.9;
  int samples = 1;
  int max_tokens = 512;
};

/// Returns one reply text per requested sample.
using ChatFn =
    std::function<std::vector<std::string>(const std::vector<ChatMessage>&, const ChatParams&)>;

/// Renders `{name}` placeholders in one pass; unknown names are left as is.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string, std::less<>>& values);

/// Policy backed by a chat model. Every reply is a complete turn, so it is
/// returned with kEndMarker appended.
class ChatPolicy final : public PolicyModel {
 public:
  explicit ChatPolicy(ChatFn chat) : chat_(std::move(chat)) {}

  /// The user message sent for a request.
  static std::string build_prompt(const PolicyRequest& request);

 protected:
  std::vector<std::string> generate_raw(const PolicyRequest& request) const override;

 private:
  ChatFn chat_;
};

/// Reward model that sends build_reward_prompt() to a chat model.
class ChatRewardModel final : public RewardModel {
 public:
  explicit ChatRewardModel(ChatFn chat, double temperature = 0.0)
      : chat_(std::move(chat)), temperature_(temperature) {}
  HallucinationScore score(const RewardRequest& request) const override;

 private:
  ChatFn chat_;
  double temperature_;
};

/// Switch model that asks a chat model for a 0/1 label.
class ChatSwitchModel final : public SwitchModel {
 public:
  explicit ChatSwitchModel(ChatFn chat) : chat_(std::move(chat)) {}
  ThinkingDecision decide(const SwitchRequest& request) const override;

  static std::string build_prompt(const SwitchRequest& request);

 private:
  ChatFn chat_;
};

/// Appended to the question by the zero-shot chain-of-thought baseline.
inline constexpr std::string_view kCotSuffix = "Let's think step by step.";

}  // namespace mctsgen
