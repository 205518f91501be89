#pragma once

#include <chrono>

namespace mctsgen {

/// Simulated latency accounting.
///
/// Simulated backends charge virtual seconds to the calling thread. A
/// Stopwatch reports wall time from the monotonic clock plus the virtual
/// seconds charged on its thread while it ran, so on the simulated backend
/// timings are deterministic up to the (tiny) real compute time, and with
/// `virtual_only` they are exactly reproducible.
namespace sim_clock {

void charge(double seconds);

/// Virtual seconds charged on this thread so far.
double charged();

}  // namespace sim_clock

class Stopwatch {
 public:
  explicit Stopwatch(bool virtual_only = false);

  /// Elapsed seconds since construction.
  double elapsed() const;

 private:
  bool virtual_only_;
  std::chrono::steady_clock::time_point start_;
  double virtual_start_;
};

}  // namespace mctsgen
