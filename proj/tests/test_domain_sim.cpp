#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "rade/domain_sim.hpp"
#include "rade/rng.hpp"

TEST_CASE("traffic factor traces the sinusoid over one episode") {
  const rade::TrafficProcess proc{400, 0.5};
  CHECK(rade::traffic_factor(proc, 0) == Catch::Approx(0.55).margin(1e-12));
  CHECK(rade::traffic_factor(proc, 100) == Catch::Approx(1.0).margin(1e-12));
  CHECK(rade::traffic_factor(proc, 300) == Catch::Approx(0.1).margin(1e-12));

  for (std::int64_t t = 0; t < proc.total_steps; ++t) {
    const double f = rade::traffic_factor(proc, t);
    CHECK(f >= 0.1 - 1e-12);
    CHECK(f <= 1.0 + 1e-12);
  }
  CHECK_THROWS_AS(rade::traffic_factor(proc, -1), std::invalid_argument);
  CHECK_THROWS_AS(rade::traffic_factor(proc, 400), std::invalid_argument);
}

TEST_CASE("acceptance probability at a worked example") {
  // a = alpha / lambda = 2; (1 - e^(-2*33/35)) * e^(-0.5/(2*0.5)), evaluated
  // independently: 0.84827935117605058 * 0.60653065971263342.
  const rade::AnalyticDomainModel m{1.0, 35.0, 0.5};
  const double p = rade::acceptance_prob(m, {33.0, 0.5}, 0.5);
  CHECK(p == Catch::Approx(0.51450743448941461).margin(1e-12));
  CHECK(p == Catch::Approx((1.0 - std::exp(-2.0 * 33.0 / 35.0)) * std::exp(-0.5))
                 .margin(1e-12));
}

TEST_CASE("acceptance probability limits") {
  const rade::AnalyticDomainModel m{1.0, 35.0, 0.5};
  CHECK(rade::acceptance_prob(m, {0.0, 0.5}, 0.5) == 0.0);
  CHECK(rade::acceptance_prob(m, {1e9, 0.0}, 0.5) == 1.0);
  CHECK_THROWS_AS(rade::acceptance_prob(m, {33.0, 0.5}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(rade::acceptance_prob(m, {33.0, 0.5}, -1.0), std::invalid_argument);
}

TEST_CASE("acceptance probability is monotone in every knob") {
  std::mt19937_64 eng(271828);
  std::uniform_real_distribution<double> delay(1.0, 150.0);
  std::uniform_real_distribution<double> thr(0.05, 1.0);
  std::uniform_real_distribution<double> alpha(0.3, 2.0);
  std::uniform_real_distribution<double> lambda(0.1, 1.0);
  std::uniform_real_distribution<double> bump(0.01, 0.5);

  for (int trial = 0; trial < 1000; ++trial) {
    rade::AnalyticDomainModel m{alpha(eng), 35.0, 0.5};
    const rade::SloVector s{delay(eng), thr(eng)};
    const double l = lambda(eng);
    const double base = rade::acceptance_prob(m, s, l);
    CHECK(base >= 0.0);
    CHECK(base < 1.0);

    // Larger delay budget, smaller throughput demand, larger form factor,
    // and lighter traffic each raise the probability.
    CHECK(rade::acceptance_prob(m, {s.delay_ms + bump(eng) * 50.0, s.throughput_gbps}, l) >= base);
    CHECK(rade::acceptance_prob(m, {s.delay_ms, s.throughput_gbps + bump(eng)}, l) <= base);
    rade::AnalyticDomainModel bigger = m;
    bigger.alpha = m.alpha + bump(eng);
    CHECK(rade::acceptance_prob(bigger, s, l) >= base);
    CHECK(rade::acceptance_prob(m, s, l + bump(eng)) <= base);
  }
}

TEST_CASE("arrival counts follow the scaled traffic factor") {
  const rade::TrafficProcess proc{400, 0.55};

  // Near-zero arrival scale produces no arrivals.
  const rade::TrafficProcess starved{400, 1e-12};
  auto eng0 = rade::substream(1, rade::Stream::arrivals);
  for (int i = 0; i < 10000; ++i) CHECK(rade::sample_arrivals(starved, 0, eng0) == 0);

  // At t=0 the factor is 0.55, cancelling the mean normalization: the Poisson
  // mean is kArrivalVolume * arrival_scale.
  auto eng = rade::substream(2, rade::Stream::arrivals);
  double total = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) total += rade::sample_arrivals(proc, 0, eng);
  const double want = rade::kArrivalVolume * proc.arrival_scale;
  CHECK(total / draws == Catch::Approx(want).epsilon(0.02));

  // Identical substreams give identical sequences.
  auto a = rade::substream(3, rade::Stream::arrivals);
  auto b = rade::substream(3, rade::Stream::arrivals);
  for (std::int64_t t = 0; t < 50; ++t) {
    CHECK(rade::sample_arrivals(proc, t, a) == rade::sample_arrivals(proc, t, b));
  }
}

TEST_CASE("requests sample uniformly from the SLA box") {
  auto eng = rade::substream(4, rade::Stream::request);
  double delay_total = 0.0;
  double thr_total = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const rade::SloVector s = rade::sample_request(eng);
    REQUIRE(s.delay_ms >= 90.0);
    REQUIRE(s.delay_ms <= 110.0);
    REQUIRE(s.throughput_gbps >= 0.4);
    REQUIRE(s.throughput_gbps <= 0.6);
    delay_total += s.delay_ms;
    thr_total += s.throughput_gbps;
  }
  CHECK(delay_total / draws == Catch::Approx(100.0).epsilon(0.005));
  CHECK(thr_total / draws == Catch::Approx(0.5).epsilon(0.005));

  auto a = rade::substream(5, rade::Stream::request);
  auto b = rade::substream(5, rade::Stream::request);
  for (int i = 0; i < 50; ++i) CHECK(rade::sample_request(a) == rade::sample_request(b));
}

TEST_CASE("feedback honours corruption and degenerate probabilities") {
  const rade::AnalyticDomainModel m{1.0, 35.0, 0.5};

  auto eng1 = rade::substream(6, rade::Stream::feedback);
  for (int i = 0; i < 1000; ++i) {
    const rade::FeedbackDraw d = rade::feedback(m, {33.0, 0.5}, 0.5, {1.0}, eng1);
    CHECK_FALSE(d.accepted);
    CHECK(d.corrupted);
  }

  auto eng2 = rade::substream(7, rade::Stream::feedback);
  for (int i = 0; i < 1000; ++i) {
    const rade::FeedbackDraw d = rade::feedback(m, {1e9, 0.0}, 0.5, {0.0}, eng2);
    CHECK(d.accepted);
    CHECK_FALSE(d.corrupted);
  }
}

TEST_CASE("corruption frequency matches the configured rate") {
  const rade::AnalyticDomainModel m{1.0, 35.0, 0.5};
  auto eng = rade::substream(8, rade::Stream::feedback);
  int corrupted = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    corrupted += rade::feedback(m, {33.0, 0.5}, 0.5, {0.3}, eng).corrupted ? 1 : 0;
  }
  CHECK(static_cast<double>(corrupted) / draws == Catch::Approx(0.3).margin(0.003));
}

TEST_CASE("uncorrupted accept frequency converges to the acceptance probability") {
  const rade::AnalyticDomainModel m{1.2, 35.0, 0.5};
  const rade::SloVector s{40.0, 0.45};
  const double lambda = 0.7;
  const double p = rade::acceptance_prob(m, s, lambda);

  auto eng = rade::substream(9, rade::Stream::feedback);
  int accepted = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    accepted += rade::feedback(m, s, lambda, {0.0}, eng).accepted ? 1 : 0;
  }
  const double freq = static_cast<double>(accepted) / draws;
  // Four binomial standard deviations around the true probability.
  const double sigma = std::sqrt(p * (1.0 - p) / draws);
  CHECK(std::abs(freq - p) <= 4.0 * sigma);
}
