#include "mctsgen/judge.hpp"

#include <cctype>
#include <sstream>

#include "mctsgen/errors.hpp"
#include "mctsgen/prompt_assets.hpp"
#include "mctsgen/segment.hpp"

namespace mctsgen {

std::string normalize_answer(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::ispunct(u)) {
      cleaned += ' ';
    } else {
      cleaned += static_cast<char>(u < 0x80 ? std::tolower(u) : u);
    }
  }
  std::istringstream words(cleaned);
  std::string out;
  std::string w;
  while (words >> w) {
    if (w == "a" || w == "an" || w == "the") continue;
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::string final_sentence(std::string_view answer) {
  auto sentences = segment_sentences(answer);
  if (sentences.empty()) return "";
  return sentences.back().text;
}

bool WorldJudge::judge(const std::string& question, const std::string&,
                       const std::string& answer) const {
  const auto qi = world_.question_index(question);
  return normalize_answer(final_sentence(answer)) ==
         normalize_answer(world_.questions()[qi].answer);
}

std::string ChatJudge::build_prompt(const std::string& question, const std::string& reference,
                                    const std::string& answer) {
  return render_template(prompt_asset("judge"),
                         {{"question", question}, {"reference", reference}, {"answer", answer}});
}

bool ChatJudge::judge(const std::string& question, const std::string& reference,
                      const std::string& answer) const {
  ChatParams params;
  params.temperature = 0.0;
  auto replies = chat_({{"user", build_prompt(question, reference, answer)}}, params);
  if (replies.empty()) throw ProtocolError("judge returned no reply", "");
  const auto verdict = normalize_answer(replies.front());
  if (verdict.find("incorrect") != std::string::npos) return false;
  if (verdict.find("correct") != std::string::npos) return true;
  throw ProtocolError("judge reply has no verdict", replies.front());
}

}  // namespace mctsgen
