#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace mctsgen {

/// One QA item. Stored as {"id", "question", "answer", "lang"} per line.
struct QaItem {
  std::string id;
  std::string question;
  std::string reference_answer;
  std::string language_tag = "en";
};

nlohmann::json to_json(const QaItem& item);
QaItem qa_item_from_json(const nlohmann::json& j);

/// Reads a line-delimited dataset. Throws ValidationError on a malformed
/// line (with its 1-based number) or a duplicate id.
std::vector<QaItem> load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const std::vector<QaItem>& items);

/// Writes one compact JSON object per line.
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);

}  // namespace mctsgen
