#pragma once

#include <string>
#include <string_view>

#include "mctsgen/models.hpp"
#include "mctsgen/world.hpp"

namespace mctsgen {

/// Case-folds, drops ASCII punctuation and the articles a/an/the, and
/// collapses whitespace.
std::string normalize_answer(std::string_view text);

/// Last sentence of an answer (the whole trimmed text if it has no boundary).
std::string final_sentence(std::string_view answer);

/// Decides whether an answer is correct for a question.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual bool judge(const std::string& question, const std::string& reference,
                     const std::string& answer) const = 0;
};

/// Oracle judge: the answer's final sentence must equal the truthful
/// terminal statement after normalization.
class WorldJudge final : public Judge {
 public:
  explicit WorldJudge(const FactWorld& world) : world_(world) {}
  bool judge(const std::string& question, const std::string& reference,
             const std::string& answer) const override;

 private:
  const FactWorld& world_;
};

/// LLM judge comparing against the ground truth with a fixed prompt.
class ChatJudge final : public Judge {
 public:
  explicit ChatJudge(ChatFn chat) : chat_(std::move(chat)) {}
  bool judge(const std::string& question, const std::string& reference,
             const std::string& answer) const override;

  static std::string build_prompt(const std::string& question, const std::string& reference,
                                  const std::string& answer);

 private:
  ChatFn chat_;
};

}  // namespace mctsgen
