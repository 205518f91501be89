#include "mctsgen/events.hpp"

#include <string>

#include "mctsgen/errors.hpp"

namespace mctsgen {

JsonlEventWriter::JsonlEventWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw Error("cannot open event log " + path.string());
}

void JsonlEventWriter::emit(const nlohmann::json& event) {
  std::lock_guard lock(mu_);
  out_ << event.dump() << '\n';
  out_.flush();
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace mctsgen
