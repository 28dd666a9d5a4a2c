// Ground-truth environment. Each domain's controller is abstracted by an
// analytic acceptance model
//
//     P(tau, theta) = (1 - exp(-a * tau / tau_ref)) * exp(-theta / (a * theta_ref)),
//     a = alpha / lambda_t,
//
// a surrogate with the properties that matter: it maps a partial assignment
// to a probability, is monotone non-decreasing in the delay budget and
// non-increasing in the required throughput, grows with the form factor
// alpha, and responds to load through a = alpha / lambda_t. Traffic intensity
// follows a sinusoid over the episode and drives both Poisson arrivals and
// the per-domain acceptance level.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <utility>

#include "rade/rng.hpp"
#include "rade/slo.hpp"

namespace rade {

struct AnalyticDomainModel {
  double alpha = 1.0;
  double tau_ref_ms = 20.0;
  double theta_ref_gbps = 2.0;

  bool valid() const { return alpha > 0.0 && tau_ref_ms > 0.0 && theta_ref_gbps > 0.0; }
};

struct TrafficProcess {
  std::int64_t total_steps = 400;
  double arrival_scale = 0.5;

  bool valid() const { return total_steps >= 1 && arrival_scale > 0.0; }
};

struct CorruptionConfig {
  double p_c = 0.0;

  bool valid() const { return p_c >= 0.0 && p_c <= 1.0; }
};

// Sinusoidal traffic intensity in [0.1, 1.0] with period equal to the episode.
inline double traffic_factor(const TrafficProcess& proc, std::int64_t t) {
  if (t < 0 || t >= proc.total_steps) {
    throw std::invalid_argument("traffic_factor: time step out of range");
  }
  const double phase = 2.0 * std::numbers::pi * static_cast<double>(t) /
                       static_cast<double>(proc.total_steps);
  return 0.5 * (std::sin(phase) + 1.0) * 0.9 + 0.1;
}

inline double acceptance_prob(const AnalyticDomainModel& m, const SloVector& s, double lambda_t) {
  if (!(lambda_t > 0.0)) throw std::invalid_argument("acceptance_prob: lambda_t must be positive");
  const double a = m.alpha / lambda_t;
  return (1.0 - std::exp(-a * s.delay_ms / m.tau_ref_ms)) *
         std::exp(-s.throughput_gbps / (a * m.theta_ref_gbps));
}

// Mean of the period of traffic_factor; dividing by it makes arrival_scale the
// time-averaged Poisson arrival rate in units of kArrivalVolume requests.
inline constexpr double kMeanTrafficFactor = 0.55;

// Requests per unit of arrival_scale. Keeps per-step feedback batches large
// enough that single-step training sets are informative at high load.
inline constexpr double kArrivalVolume = 10.0;

inline int sample_arrivals(const TrafficProcess& proc, std::int64_t t, std::mt19937_64& eng) {
  const double mean =
      kArrivalVolume * proc.arrival_scale * traffic_factor(proc, t) / kMeanTrafficFactor;
  return std::poisson_distribution<int>(mean)(eng);
}

// E2E SLA of one request: delay uniform on [90, 110] ms, throughput uniform
// on [0.4, 0.6] Gbps.
inline SloVector sample_request(std::mt19937_64& eng) {
  const double delay = std::uniform_real_distribution<double>(90.0, 110.0)(eng);
  const double throughput = std::uniform_real_distribution<double>(0.4, 0.6)(eng);
  return {delay, throughput};
}

struct FeedbackDraw {
  bool accepted = false;
  bool corrupted = false;
};

// Bernoulli accept/reject for one partial SLA; with probability p_c the label
// is corrupted and forced to rejection.
inline FeedbackDraw feedback(const AnalyticDomainModel& m, const SloVector& s, double lambda_t,
                             const CorruptionConfig& corr, std::mt19937_64& eng) {
  const double prob = acceptance_prob(m, s, lambda_t);
  bool accepted = uniform01(eng) < prob;
  const bool corrupted = uniform01(eng) < corr.p_c;
  if (corrupted) accepted = false;
  return {accepted, corrupted};
}

}  // namespace rade
