#include "mctsgen/types.hpp"

#include <cmath>

#include "mctsgen/errors.hpp"
#include "mctsgen/segment.hpp"

namespace mctsgen {

void GenerationContext::append(Sentence s) {
  if (trim(s.text).empty()) {
    throw ValidationError("prefix sentences must be non-empty");
  }
  prefix.push_back(std::move(s));
}

std::string GenerationContext::prefix_text() const { return join_sentences(prefix); }

double map_likert_to_value(int likert) {
  if (likert < 1 || likert > 5) {
    throw ValidationError("likert score out of range 1..5: " + std::to_string(likert));
  }
  return (5.0 - likert) / 4.0;
}

HallucinationScore HallucinationScore::from_likert(int likert,
                                                   std::optional<std::string> critique) {
  HallucinationScore s;
  s.mapped_value = map_likert_to_value(likert);
  s.likert = likert;
  s.critique = std::move(critique);
  return s;
}

ThinkingDecision ThinkingDecision::from_label(SwitchLevel level, int raw_label) {
  if (raw_label != 0 && raw_label != 1) {
    throw ValidationError("switch label must be 0 or 1");
  }
  return {level, raw_label == 1 ? ThinkingMode::slow : ThinkingMode::fast, raw_label};
}

ThinkingDecision ThinkingDecision::from_mode(SwitchLevel level, ThinkingMode mode) {
  return {level, mode, mode == ThinkingMode::slow ? 1 : 0};
}

void SearchConfig::validate() const {
  if (expansions < 1) throw ValidationError("expansions (K) must be positive");
  if (rollouts < 1) throw ValidationError("rollouts (m) must be positive");
  if (max_iterations < 1) throw ValidationError("max_iterations (M) must be positive");
  if (!(uct_weight >= 0.0) || !std::isfinite(uct_weight)) {
    throw ValidationError("uct_weight (w) must be a non-negative number");
  }
  // Values above 1 are allowed: they make the threshold unreachable.
  if (!(reward_threshold >= 0.0) || !std::isfinite(reward_threshold)) {
    throw ValidationError("reward_threshold must be a non-negative number");
  }
  if (!std::isfinite(gamma)) throw ValidationError("gamma must be finite");
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw ValidationError("temperature must be non-negative");
  }
}

std::string_view to_string(SwitchLevel level) {
  return level == SwitchLevel::instance ? "instance" : "step";
}

std::string_view to_string(ThinkingMode mode) {
  return mode == ThinkingMode::slow ? "slow" : "fast";
}

}  // namespace mctsgen
