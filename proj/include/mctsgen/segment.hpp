#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mctsgen/types.hpp"

namespace mctsgen {

/// Splits text into sentences.
///
/// A boundary follows '.', '!' or '?' when the next character is whitespace or
/// the end of the text, so "3.14" and "e.g.x" never split. The full-width
/// terminators U+3002, U+FF01 and U+FF1F always end a sentence, since Chinese
/// text does not put whitespace after them. Each sentence is trimmed and empty
/// pieces are dropped. A trailing kEndMarker is removed and sets `terminal` on
/// the last sentence.
std::vector<Sentence> segment_sentences(std::string_view text);

/// True when `text` ends with kEndMarker (ignoring trailing whitespace).
bool has_end_marker(std::string_view text);

/// `text` without a trailing kEndMarker.
std::string_view strip_end_marker(std::string_view text);

std::string_view trim(std::string_view s);

/// Sentence texts joined by single spaces.
std::string join_sentences(const std::vector<Sentence>& sentences);

}  // namespace mctsgen
