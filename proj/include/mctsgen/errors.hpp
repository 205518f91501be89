#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mctsgen {

/// Base for every recoverable error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (programming error).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Out-of-range or otherwise invalid input value.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class TreeParseError : public Error {
 public:
  TreeParseError(const std::string& what, std::int64_t node_id = -1)
      : Error(node_id >= 0 ? "node " + std::to_string(node_id) + ": " + what : what),
        node_id_(node_id) {}

  /// Offending node id, or -1 when the failure is not tied to a node.
  std::int64_t node_id() const noexcept { return node_id_; }

 private:
  std::int64_t node_id_;
};

/// Unknown question or prefix in a simulated world.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Any failure talking to a model backend.
class BackendError : public Error {
 public:
  using Error::Error;
  virtual bool retryable() const noexcept { return false; }
};

/// Connection failure, timeout or 5xx. Retryable.
class TransportError : public BackendError {
 public:
  using BackendError::BackendError;
  bool retryable() const noexcept override { return true; }
};

/// HTTP 429. Retryable.
class RateLimitError : public BackendError {
 public:
  using BackendError::BackendError;
  bool retryable() const noexcept override { return true; }
};

/// HTTP 4xx other than 429: bad key, bad model name, bad request. Not retryable.
class ConfigurationError : public BackendError {
 public:
  ConfigurationError(const std::string& what, int status = 0)
      : BackendError(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// The backend answered but the reply did not have the expected shape.
class ProtocolError : public BackendError {
 public:
  ProtocolError(const std::string& what, std::string raw_body)
      : BackendError(what), raw_body_(std::move(raw_body)) {}
  const std::string& raw_body() const noexcept { return raw_body_; }

 private:
  std::string raw_body_;
};

/// A reward reply that does not contain a usable Likert score.
class ScoringError : public Error {
 public:
  ScoringError(const std::string& what, std::string raw_reply)
      : Error(what), raw_reply_(std::move(raw_reply)) {}
  const std::string& raw_reply() const noexcept { return raw_reply_; }

 private:
  std::string raw_reply_;
};

/// Evaluation of a child node failed after the per-rollout retry.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, std::uint32_t node_id)
      : Error(what), node_id_(node_id) {}
  std::uint32_t node_id() const noexcept { return node_id_; }

 private:
  std::uint32_t node_id_;
};

}  // namespace mctsgen
