#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mctsgen {

/// Marker a backend appends when a response is complete.
inline constexpr std::string_view kEndMarker = "<|end|>";

/// One generation step.
struct Sentence {
  std::string text;
  bool terminal = false;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

/// Conditioning state for the policy: the question plus the accepted prefix.
struct GenerationContext {
  std::string question;
  std::vector<Sentence> prefix;
  std::string language_tag = "en";

  /// Appends a sentence. Blank sentences are rejected.
  void append(Sentence s);

  /// Prefix sentences joined by single spaces.
  std::string prefix_text() const;
};

/// Likert 1..5 hallucination judgment. 1 = no risk, 5 = very high risk.
struct HallucinationScore {
  int likert = 1;
  std::optional<std::string> critique;
  double mapped_value = 1.0;

  static HallucinationScore from_likert(int likert,
                                        std::optional<std::string> critique = std::nullopt);
};

enum class SwitchLevel { instance, step };
enum class ThinkingMode { fast, slow };

struct ThinkingDecision {
  SwitchLevel level = SwitchLevel::step;
  ThinkingMode mode = ThinkingMode::slow;
  int raw_label = 1;

  static ThinkingDecision from_label(SwitchLevel level, int raw_label);
  static ThinkingDecision from_mode(SwitchLevel level, ThinkingMode mode);
};

struct SearchConfig {
  int expansions = 10;        // K
  int rollouts = 5;           // m
  int max_iterations = 20;    // M
  double uct_weight = 0.4;    // w
  double reward_threshold = 0.75;  // on the mapped [0,1] scale
  double gamma = 0.0;         // step switch threshold, Likert scale
  double temperature = 0.9;
  std::uint64_t seed = 0;

  /// Throws ValidationError naming the first bad field.
  void validate() const;

  friend bool operator==(const SearchConfig&, const SearchConfig&) = default;
};

/// (5 - likert) / 4. Throws ValidationError outside 1..5.
double map_likert_to_value(int likert);

/// Inverse of map_likert_to_value on the continuous scale: 5 - 4 * value.
inline double value_to_likert_scale(double value) { return 5.0 - 4.0 * value; }

std::string_view to_string(SwitchLevel level);
std::string_view to_string(ThinkingMode mode);

}  // namespace mctsgen
