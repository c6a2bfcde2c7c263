#pragma once

#include <chrono>
#include <cmath>
#include <limits>

namespace ergmeter::detail {

inline double monotonic_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

// Successive samples from one backend must carry strictly increasing stamps.
inline double strictly_after(double last, double candidate) {
  if (candidate > last) return candidate;
  return std::nextafter(last, std::numeric_limits<double>::infinity());
}

}  // namespace ergmeter::detail
