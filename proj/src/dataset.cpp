#include "mctsgen/dataset.hpp"

#include <fstream>
#include <set>

#include "mctsgen/errors.hpp"

namespace mctsgen {

using nlohmann::json;

json to_json(const QaItem& item) {
  return {{"id", item.id},
          {"question", item.question},
          {"answer", item.reference_answer},
          {"lang", item.language_tag}};
}

QaItem qa_item_from_json(const json& j) {
  QaItem item;
  item.id = j.at("id").get<std::string>();
  item.question = j.at("question").get<std::string>();
  item.reference_answer = j.at("answer").get<std::string>();
  if (auto it = j.find("lang"); it != j.end()) item.language_tag = it->get<std::string>();
  return item;
}

std::vector<QaItem> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset " + path.string());
  std::vector<QaItem> items;
  std::set<std::string> ids;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      items.push_back(qa_item_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!ids.insert(items.back().id).second) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": duplicate id " +
                            items.back().id);
    }
  }
  return items;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (const auto& r : rows) out << r.dump() << '\n';
}

void save_dataset(const std::filesystem::path& path, const std::vector<QaItem>& items) {
  std::vector<json> rows;
  rows.reserve(items.size());
  for (const auto& it : items) rows.push_back(to_json(it));
  write_jsonl(path, rows);
}

}  // namespace mctsgen
