#include "mctsgen/segment.hpp"

#include <array>

namespace mctsgen {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

constexpr std::array<std::string_view, 3> kWideTerminators = {
    "\xE3\x80\x82",  // U+3002 ideographic full stop
    "\xEF\xBC\x81",  // U+FF01 fullwidth exclamation mark
    "\xEF\xBC\x9F",  // U+FF1F fullwidth question mark
};

void push_piece(std::vector<Sentence>& out, std::string_view piece) {
  piece = trim(piece);
  if (!piece.empty()) out.push_back({std::string(piece), false});
}

}  // namespace

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool has_end_marker(std::string_view text) { return trim(text).ends_with(kEndMarker); }

std::string_view strip_end_marker(std::string_view text) {
  auto t = trim(text);
  if (t.ends_with(kEndMarker)) t.remove_suffix(kEndMarker.size());
  return t;
}

std::vector<Sentence> segment_sentences(std::string_view text) {
  const bool ended = has_end_marker(text);
  text = strip_end_marker(text);

  std::vector<Sentence> out;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '.' || c == '!' || c == '?') {
      const bool at_end = i + 1 == text.size();
      if (at_end || is_space(text[i + 1])) {
        push_piece(out, text.substr(start, i + 1 - start));
        start = i + 1;
      }
      ++i;
      continue;
    }
    bool wide = false;
    for (auto term : kWideTerminators) {
      if (text.substr(i).starts_with(term)) {
        push_piece(out, text.substr(start, i + term.size() - start));
        i += term.size();
        start = i;
        wide = true;
        break;
      }
    }
    if (!wide) ++i;
  }
  if (start < text.size()) push_piece(out, text.substr(start));
  if (ended && !out.empty()) out.back().terminal = true;
  return out;
}

std::string join_sentences(const std::vector<Sentence>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out += ' ';
    out += s.text;
  }
  return out;
}

}  // namespace mctsgen
