#include "mctsgen/models.hpp"

#include <cctype>
#include <spdlog/spdlog.h>

#include "mctsgen/errors.hpp"
#include "mctsgen/prompt_assets.hpp"
#include "mctsgen/segment.hpp"

namespace mctsgen {
namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

struct IntegerToken {
  long long value;
  std::size_t begin;  // includes a leading '-'
};

/// Last integer in `text` that is not glued to letters and not part of a decimal.
std::optional<IntegerToken> last_standalone_integer(std::string_view text) {
  std::optional<IntegerToken> found;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_digit(text[i])) {
      ++i;
      continue;
    }
    std::size_t begin = i;
    while (i < text.size() && is_digit(text[i])) ++i;
    const std::size_t end = i;

    bool standalone = true;
    if (begin > 0) {
      const char before = text[begin - 1];
      if (is_alnum(before) || before == '_') standalone = false;
      if (before == '.' && begin > 1 && is_digit(text[begin - 2])) standalone = false;
    }
    if (end < text.size()) {
      const char after = text[end];
      if (is_alnum(after) || after == '_') standalone = false;
      if (after == '.' && end + 1 < text.size() && is_digit(text[end + 1])) standalone = false;
    }
    if (!standalone || end - begin > 9) continue;

    bool negative = begin > 0 && text[begin - 1] == '-' &&
                    (begin == 1 || !is_alnum(text[begin - 2]));
    long long v = std::stoll(std::string(text.substr(begin, end - begin)));
    if (negative) {
      v = -v;
      --begin;
    }
    found = IntegerToken{v, begin};
  }
  return found;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string extract_critique(std::string_view before_score) {
  auto t = trim(before_score);
  for (std::string_view label : {"score:", "score"}) {
    if (t.size() >= label.size() && lower(t.substr(t.size() - label.size())) == label) {
      t.remove_suffix(label.size());
      break;
    }
  }
  t = trim(t);
  return std::string(t);
}

std::string prefix_or_placeholder(const std::vector<Sentence>& prefix) {
  return prefix.empty() ? std::string("(none yet)") : join_sentences(prefix);
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<Sentence> PolicyModel::generate(const PolicyRequest& request) const {
  if (request.samples < 1) throw ValidationError("policy samples must be >= 1");
  if (!(request.temperature >= 0.0)) throw ValidationError("temperature must be >= 0");

  auto raw = generate_raw(request);
  if (raw.size() != static_cast<std::size_t>(request.samples)) {
    throw ProtocolError("policy returned " + std::to_string(raw.size()) + " samples, expected " +
                            std::to_string(request.samples),
                        "");
  }

  std::vector<Sentence> out;
  out.reserve(raw.size());
  for (auto& text : raw) {
    if (request.mode == PolicyMode::full_completion) {
      if (!has_end_marker(text)) {
        throw ProtocolError("full completion is missing the end marker", text);
      }
      auto sentences = segment_sentences(text);
      out.push_back({join_sentences(sentences), true});
    } else {
      auto sentences = segment_sentences(text);
      if (sentences.empty()) {
        out.push_back({"", true});
      } else {
        Sentence first = std::move(sentences.front());
        first.terminal = sentences.size() == 1 && has_end_marker(text);
        out.push_back(std::move(first));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = values.find(tmpl.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

std::string build_reward_prompt(const RewardRequest& request) {
  const auto tmpl = prompt_asset(request.mode == RewardMode::critique ? "reward_critique"
                                                                      : "reward_generative");
  std::string reference_line;
  if (request.reference_answer) reference_line = "Correct Answer: " + *request.reference_answer + "\n";
  return render_template(tmpl, {{"question", request.question},
                                {"reference_line", reference_line},
                                {"answer", request.answer_fragment}});
}

HallucinationScore parse_reward_reply(std::string_view reply, RewardMode mode) {
  auto token = last_standalone_integer(reply);
  if (!token) throw ScoringError("no score found in reward reply", std::string(reply));
  if (token->value < 1 || token->value > 5) {
    throw ScoringError("score " + std::to_string(token->value) + " outside 1..5",
                       std::string(reply));
  }
  std::optional<std::string> critique;
  if (mode == RewardMode::critique) critique = extract_critique(reply.substr(0, token->begin));
  return HallucinationScore::from_likert(static_cast<int>(token->value), std::move(critique));
}

// ---------------------------------------------------------------------------

void SwitchRequest::validate() const {
  if (level == SwitchLevel::instance && !prefix.empty()) {
    throw ValidationError("instance-level switch requests carry no prefix");
  }
}

ThinkingDecision decide_or_slow(const SwitchModel& model, const SwitchRequest& request) {
  request.validate();
  try {
    auto d = model.decide(request);
    d.level = request.level;
    return d;
  } catch (const std::exception& e) {
    spdlog::warn("switch failed at {} level, falling back to slow thinking: {}",
                 to_string(request.level), e.what());
    return ThinkingDecision::from_mode(request.level, ThinkingMode::slow);
  }
}

ThinkingDecision FixedSwitch::decide(const SwitchRequest& request) const {
  return ThinkingDecision::from_mode(request.level, mode_);
}

HeuristicSwitch::HeuristicSwitch(Estimator estimator, double step_gamma,
                                 std::optional<double> instance_gamma)
    : estimator_(std::move(estimator)), step_gamma_(step_gamma), instance_gamma_(instance_gamma) {
  if (!estimator_) throw ValidationError("heuristic switch needs an estimator");
}

ThinkingDecision HeuristicSwitch::decide(const SwitchRequest& request) const {
  if (request.level == SwitchLevel::instance) {
    if (!instance_gamma_) return ThinkingDecision::from_mode(request.level, ThinkingMode::slow);
    return ThinkingDecision::from_label(request.level, estimator_(request) > *instance_gamma_);
  }
  return ThinkingDecision::from_label(request.level, estimator_(request) > step_gamma_);
}

// ---------------------------------------------------------------------------

std::string ChatPolicy::build_prompt(const PolicyRequest& request) {
  const auto& ctx = request.context;
  if (request.mode == PolicyMode::full_completion && ctx.prefix.empty()) {
    return render_template(prompt_asset("policy_direct"), {{"question", ctx.question}});
  }
  const auto tmpl = prompt_asset(request.mode == PolicyMode::next_sentence
                                     ? "policy_next_sentence"
                                     : "policy_full_completion");
  return render_template(tmpl, {{"question", ctx.question},
                                {"prefix", prefix_or_placeholder(ctx.prefix)}});
}

std::vector<std::string> ChatPolicy::generate_raw(const PolicyRequest& request) const {
  ChatParams params;
  params.temperature = request.temperature;
  params.samples = request.samples;
  auto replies = chat_({{"user", build_prompt(request)}}, params);
  for (auto& r : replies) {
    r = std::string(trim(r));
    r += ' ';
    r += kEndMarker;
  }
  return replies;
}

HallucinationScore ChatRewardModel::score(const RewardRequest& request) const {
  ChatParams params;
  params.temperature = temperature_;
  params.samples = 1;
  auto replies = chat_({{"user", build_reward_prompt(request)}}, params);
  if (replies.empty()) throw ScoringError("reward backend returned no reply", "");
  return parse_reward_reply(replies.front(), request.mode);
}

std::string ChatSwitchModel::build_prompt(const SwitchRequest& request) {
  if (request.level == SwitchLevel::instance) {
    return render_template(prompt_asset("switch_instance"), {{"question", request.question}});
  }
  return render_template(prompt_asset("switch_step"),
                         {{"question", request.question},
                          {"prefix", prefix_or_placeholder(request.prefix)}});
}

ThinkingDecision ChatSwitchModel::decide(const SwitchRequest& request) const {
  ChatParams params;
  params.temperature = 0.0;
  auto replies = chat_({{"user", build_prompt(request)}}, params);
  if (replies.empty()) throw ProtocolError("switch backend returned no reply", "");
  auto token = last_standalone_integer(replies.front());
  if (!token || (token->value != 0 && token->value != 1)) {
    throw ProtocolError("switch reply carries no 0/1 label", replies.front());
  }
  return ThinkingDecision::from_label(request.level, static_cast<int>(token->value));
}

}  // namespace mctsgen
