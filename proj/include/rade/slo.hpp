// SLO/SLA value types, the end-to-end composition operator and the strictness
// partial order. The SLA family is fixed to (delay, throughput): end-to-end
// delay is the sum of the per-domain delays, end-to-end throughput is the
// minimum of the per-domain throughputs.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace rade {

struct SloVector {
  double delay_ms = 0.0;
  double throughput_gbps = 0.0;

  bool valid() const {
    return std::isfinite(delay_ms) && std::isfinite(throughput_gbps) && delay_ms >= 0.0 &&
           throughput_gbps >= 0.0;
  }

  friend bool operator==(const SloVector&, const SloVector&) = default;
};

// One partial SLO per domain, in domain order.
struct Decomposition {
  std::vector<SloVector> partials;

  std::size_t size() const { return partials.size(); }

  friend bool operator==(const Decomposition&, const Decomposition&) = default;
};

inline SloVector compose(const Decomposition& d) {
  if (d.partials.empty()) {
    throw std::invalid_argument("compose: empty decomposition");
  }
  double delay_sum = 0.0;
  double throughput_min = d.partials.front().throughput_gbps;
  for (const SloVector& p : d.partials) {
    delay_sum += p.delay_ms;
    throughput_min = std::min(throughput_min, p.throughput_gbps);
  }
  return {delay_sum, throughput_min};
}

// True iff the partials realize `target` within tolerance: delays sum to the
// target delay and no partial requires less throughput than the target.
inline bool is_valid_for(const Decomposition& d, const SloVector& target, double eps = 1e-6) {
  if (eps <= 0.0) {
    throw std::invalid_argument("is_valid_for: eps must be positive");
  }
  if (d.partials.empty()) {
    return false;
  }
  const SloVector e2e = compose(d);
  return std::abs(e2e.delay_ms - target.delay_ms) <= eps &&
         e2e.throughput_gbps >= target.throughput_gbps - eps;
}

// Returns a <= b in the strictness order: a is at least as strict as b when it
// allows less delay and demands at least as much throughput. A stricter SLO is
// never more likely to be accepted.
inline bool strictness_leq(const SloVector& a, const SloVector& b) {
  return a.delay_ms <= b.delay_ms && a.throughput_gbps >= b.throughput_gbps;
}

}  // namespace rade
