#include "mctsgen/sim_clock.hpp"

namespace mctsgen {
namespace sim_clock {
namespace {
thread_local double t_charged = 0.0;
}

void charge(double seconds) { t_charged += seconds; }
double charged() { return t_charged; }

}  // namespace sim_clock

Stopwatch::Stopwatch(bool virtual_only)
    : virtual_only_(virtual_only),
      start_(std::chrono::steady_clock::now()),
      virtual_start_(sim_clock::charged()) {}

double Stopwatch::elapsed() const {
  const double virt = sim_clock::charged() - virtual_start_;
  if (virtual_only_) return virt;
  const std::chrono::duration<double> real = std::chrono::steady_clock::now() - start_;
  return real.count() + virt;
}

}  // namespace mctsgen
