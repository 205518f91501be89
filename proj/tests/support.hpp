#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mctsgen/models.hpp"
#include "mctsgen/types.hpp"

namespace testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(MCTSGEN_FIXTURE_DIR) / name;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("mctsgen-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Policy answering with a user function over the request.
class ScriptedPolicy final : public mctsgen::PolicyModel {
 public:
  using Fn = std::function<std::vector<std::string>(const mctsgen::PolicyRequest&)>;
  explicit ScriptedPolicy(Fn fn) : fn_(std::move(fn)) {}
  mutable int calls = 0;

 protected:
  std::vector<std::string> generate_raw(const mctsgen::PolicyRequest& r) const override {
    ++calls;
    return fn_(r);
  }

 private:
  Fn fn_;
};

/// Reward computing a likert from the answer text.
class ScriptedReward final : public mctsgen::RewardModel {
 public:
  using Fn = std::function<int(const mctsgen::RewardRequest&)>;
  explicit ScriptedReward(Fn fn) : fn_(std::move(fn)) {}
  mutable std::vector<mctsgen::RewardRequest> seen;

  mctsgen::HallucinationScore score(const mctsgen::RewardRequest& r) const override {
    seen.push_back(r);
    return mctsgen::HallucinationScore::from_likert(
        fn_(r), r.mode == mctsgen::RewardMode::critique ? std::optional<std::string>("ok")
                                                        : std::nullopt);
  }

 private:
  Fn fn_;
};

}  // namespace testing
