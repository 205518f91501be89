#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <vector>

#include "json.hpp"

namespace mctsgen {

/// Receiver of per-iteration search events (one JSON object per event).
class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void emit(const nlohmann::json& event) = 0;
};

/// Keeps events in memory, mostly for tests and trace post-processing.
class MemoryEventSink final : public EventSink {
 public:
  void emit(const nlohmann::json& event) override { events_.push_back(event); }
  const std::vector<nlohmann::json>& events() const { return events_; }

 private:
  std::vector<nlohmann::json> events_;
};

/// Writes line-delimited JSON, one compact object per line.
class JsonlEventWriter final : public EventSink {
 public:
  explicit JsonlEventWriter(const std::filesystem::path& path);
  void emit(const nlohmann::json& event) override;

 private:
  std::mutex mu_;
  std::ofstream out_;
};

/// Reads a line-delimited JSON file; blank lines are skipped.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

}  // namespace mctsgen
