#pragma once

#include <chrono>
#include <deque>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"

namespace testing {

// Local chat-completions endpoint answering from a script of canned replies.
// After the script runs out it repeats the last entry.
class StubServer {
 public:
  struct Reply {
    int status = 200;
    std::string body;
    double delay_seconds = 0.0;
  };

  static Reply ok(const std::string& content) {
    return {200, R"({"choices":[{"message":{"role":"assistant","content":")" + content + R"("}}]})",
            0.0};
  }

  explicit StubServer(std::vector<Reply> script) : script_(script.begin(), script.end()) {
    server_.Post(R"(/v1/chat/completions)", [this](const httplib::Request& req, httplib::Response& res) {
      Reply r;
      {
        std::lock_guard lock(mu_);
        ++hits_;
        bodies_.push_back(req.body);
        auth_.push_back(req.get_header_value("Authorization"));
        r = script_.size() > 1 ? script_.front() : script_.back();
        if (script_.size() > 1) script_.pop_front();
      }
      if (r.delay_seconds > 0) std::this_thread::sleep_for(std::chrono::duration<double>(r.delay_seconds));
      res.status = r.status;
      res.set_content(r.body, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int hits() const {
    std::lock_guard lock(mu_);
    return hits_;
  }
  std::vector<std::string> auth_headers() const {
    std::lock_guard lock(mu_);
    return auth_;
  }
  std::vector<std::string> bodies() const {
    std::lock_guard lock(mu_);
    return bodies_;
  }

 private:
  httplib::Server server_;
  std::deque<Reply> script_;
  mutable std::mutex mu_;
  int hits_ = 0;
  std::vector<std::string> bodies_;
  std::vector<std::string> auth_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace testing
