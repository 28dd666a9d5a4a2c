#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "rade/runtime.hpp"

namespace {

// Small episode shared by the runtime tests; arrival volume keeps every step
// populated with a handful of requests.
rade::EpisodeConfig small_config(rade::MethodKind method, std::uint64_t seed,
                                 std::int64_t steps = 24) {
  rade::EpisodeConfig cfg;
  cfg.method = method;
  cfg.domains = {{1.0, 20.0, 2.0}, {1.2, 20.0, 2.0}, {0.8, 20.0, 2.0}};
  cfg.traffic = {steps, 0.4};
  cfg.seed = seed;
  return cfg;
}

rade::StepRecord step(std::int64_t t, int m, double sum) { return {t, 0.5, m, sum}; }

}  // namespace

TEST_CASE("an empty episode yields an empty trace without a metric") {
  rade::EpisodeConfig cfg = small_config(rade::MethodKind::Random, 1, 0);
  const rade::RunTrace trace = rade::run_episode(cfg);
  CHECK(trace.steps.empty());
  CHECK(trace.requests.empty());
  CHECK_THROWS_AS(rade::p_avg(trace), rade::NoDataError);
}

TEST_CASE("episodes are deterministic in the configuration and seed") {
  const rade::EpisodeConfig cfg = small_config(rade::MethodKind::Rade, 11);
  const rade::RunTrace a = rade::run_episode(cfg);
  const rade::RunTrace b = rade::run_episode(cfg);
  CHECK(a.steps == b.steps);
  CHECK(a.requests == b.requests);
  CHECK(a.feedback == b.feedback);
  CHECK(a.final_models == b.final_models);
}

TEST_CASE("trace length and metric range follow the episode shape") {
  const rade::EpisodeConfig cfg = small_config(rade::MethodKind::Random, 3, 40);
  const rade::RunTrace trace = rade::run_episode(cfg);
  REQUIRE(trace.steps.size() == 40);
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    CHECK(trace.steps[i].t == static_cast<std::int64_t>(i));
  }
  const double metric = rade::p_avg(trace);
  CHECK(metric >= 0.0);
  CHECK(metric <= 1.0);
  // Every request generated one feedback sample per domain.
  CHECK(trace.feedback.size() == trace.requests.size() * cfg.domains.size());
}

TEST_CASE("methods under one seed face the same request stream") {
  std::vector<rade::RunTrace> traces;
  for (rade::MethodKind m : rade::kAllMethods) {
    traces.push_back(rade::run_episode(small_config(m, 5)));
  }
  for (std::size_t i = 1; i < traces.size(); ++i) {
    REQUIRE(traces[i].steps.size() == traces[0].steps.size());
    REQUIRE(traces[i].requests.size() == traces[0].requests.size());
    for (std::size_t s = 0; s < traces[0].steps.size(); ++s) {
      CHECK(traces[i].steps[s].m_t == traces[0].steps[s].m_t);
      CHECK(traces[i].steps[s].lambda_t == traces[0].steps[s].lambda_t);
    }
    for (std::size_t r = 0; r < traces[0].requests.size(); ++r) {
      CHECK(traces[i].requests[r].sla == traces[0].requests[r].sla);
    }
  }
}

TEST_CASE("the ground-truth method dominates each grid-based method per request") {
  const rade::RunTrace opt = rade::run_episode(small_config(rade::MethodKind::Opt, 5));
  for (rade::MethodKind m :
       {rade::MethodKind::Static, rade::MethodKind::RadeStar, rade::MethodKind::Rade}) {
    const rade::RunTrace other = rade::run_episode(small_config(m, 5));
    REQUIRE(other.requests.size() == opt.requests.size());
    for (std::size_t r = 0; r < opt.requests.size(); ++r) {
      CHECK(opt.requests[r].true_e2e_prob >= other.requests[r].true_e2e_prob - 1e-12);
    }
  }
  // Random is not confined to the search grid, so dominance is aggregate.
  const rade::RunTrace random = rade::run_episode(small_config(rade::MethodKind::Random, 5));
  CHECK(rade::p_avg(opt) >= rade::p_avg(random));
}

TEST_CASE("non-learning methods leave their models untouched") {
  const rade::RunTrace random = rade::run_episode(small_config(rade::MethodKind::Random, 9));
  CHECK(random.final_models.empty());
  const rade::RunTrace opt = rade::run_episode(small_config(rade::MethodKind::Opt, 9));
  CHECK(opt.final_models.empty());

  rade::EpisodeConfig cfg = small_config(rade::MethodKind::Static, 9);
  const std::vector<rade::RiskModelParams> models = rade::make_static_models(cfg);
  cfg.initial_models = models;
  const rade::RunTrace trace = rade::run_episode(cfg);
  CHECK(trace.final_models == models);
}

TEST_CASE("with one step of history the buffered and unbuffered methods coincide") {
  rade::EpisodeConfig base = small_config(rade::MethodKind::Rade, 21, 2);
  const std::vector<rade::RiskModelParams> models =
      rade::make_static_models(small_config(rade::MethodKind::Static, 21, 8));
  base.initial_models = models;
  base.initial_buffers = std::vector<std::vector<rade::FeedbackSample>>(base.domains.size());

  rade::EpisodeConfig star = base;
  star.method = rade::MethodKind::RadeStar;

  const rade::RunTrace rade_trace = rade::run_episode(base);
  const rade::RunTrace star_trace = rade::run_episode(star);
  CHECK(rade_trace.steps == star_trace.steps);
  CHECK(rade_trace.requests == star_trace.requests);
  CHECK(rade_trace.feedback == star_trace.feedback);
  CHECK(rade_trace.final_models == star_trace.final_models);

  // A third step trains on diverged buffer contents.
  base.traffic.total_steps = 3;
  star.traffic.total_steps = 3;
  CHECK(rade::run_episode(base).final_models != rade::run_episode(star).final_models);
}

TEST_CASE("online methods start from the warm-started models") {
  const rade::RunTrace st = rade::run_episode(small_config(rade::MethodKind::Static, 33));
  const rade::RunTrace online = rade::run_episode(small_config(rade::MethodKind::Rade, 33));
  // No feedback has arrived at the first step, so both decompose with the
  // warm-up models and must agree request for request.
  REQUIRE(!st.requests.empty());
  for (std::size_t r = 0; r < st.requests.size(); ++r) {
    if (st.requests[r].t > 0) break;
    CHECK(online.requests[r].partials == st.requests[r].partials);
  }
}

TEST_CASE("warm-up models are a function of the warm-up seed") {
  rade::EpisodeConfig a = small_config(rade::MethodKind::Static, 100);
  rade::EpisodeConfig b = small_config(rade::MethodKind::Static, 200);
  a.static_warmup.warmup_seed = 777;
  b.static_warmup.warmup_seed = 777;
  CHECK(rade::make_static_models(a) == rade::make_static_models(b));
  b.static_warmup.warmup_seed = 778;
  CHECK(rade::make_static_models(a) != rade::make_static_models(b));
}

TEST_CASE("a warm-up without arrivals reports insufficient data") {
  rade::EpisodeConfig cfg = small_config(rade::MethodKind::Static, 1, 10);
  cfg.static_warmup.arrival_scale = 1e-12;
  CHECK_THROWS_AS(rade::make_static_models(cfg), rade::InsufficientDataError);
}

TEST_CASE("warm-up training beats the uninformed predictor on its own data") {
  rade::EpisodeConfig cfg = small_config(rade::MethodKind::Static, 55, 120);
  cfg.static_warmup.epochs = 40;
  const rade::WarmupResult warmup = rade::make_warmup(cfg);
  for (std::size_t d = 0; d < cfg.domains.size(); ++d) {
    std::vector<rade::LabeledSlo> dataset;
    for (const rade::FeedbackSample& s : warmup.feedback[d]) {
      dataset.push_back({s.slo, s.accepted ? 1 : 0});
    }
    REQUIRE(!dataset.empty());
    CHECK(rade::bce_loss(warmup.models[d], dataset, rade::RunMode::eval) <= std::log(2.0));
    // The trained models keep the built-in monotone ordering.
    CHECK(rade::forward(warmup.models[d], {110.0, 0.4}) >=
          rade::forward(warmup.models[d], {90.0, 0.6}));
  }
}

TEST_CASE("metric averages the per-step means over populated steps") {
  rade::RunTrace one;
  one.steps = {step(0, 1, 0.9 * 0.8 * 0.5)};
  CHECK(rade::p_avg(one) == Catch::Approx(0.36).margin(1e-12));

  rade::RunTrace two;
  two.steps = {step(0, 1, 1.0), step(1, 1, 0.0)};
  CHECK(rade::p_avg(two) == 0.5);

  // Hand-built traces with mixed request counts; expected values computed by
  // hand: (1.3/2 + 1.8/3)/2, (0.36 + 0.5 + 0.04)/3, and (2.0/4 + 1.0/5)/2.
  rade::RunTrace a;
  a.steps = {step(0, 2, 1.3), step(1, 0, 0.0), step(2, 3, 1.8)};
  CHECK(rade::p_avg(a) == Catch::Approx(0.625).margin(1e-12));

  rade::RunTrace b;
  b.steps = {step(0, 1, 0.36), step(1, 1, 0.5), step(2, 1, 0.04)};
  CHECK(rade::p_avg(b) == Catch::Approx(0.3).margin(1e-12));

  rade::RunTrace c;
  c.steps = {step(0, 4, 2.0), step(1, 5, 1.0)};
  CHECK(rade::p_avg(c) == Catch::Approx(0.35).margin(1e-12));
}

TEST_CASE("episode validation rejects inconsistent configurations") {
  rade::EpisodeConfig cfg = small_config(rade::MethodKind::Rade, 1);
  rade::validate(cfg);

  rade::EpisodeConfig bad = cfg;
  bad.domains.clear();
  CHECK_THROWS_AS(rade::validate(bad), rade::ConfigError);

  bad = cfg;
  bad.domains[0].alpha = -1.0;
  CHECK_THROWS_AS(rade::validate(bad), rade::ConfigError);

  bad = cfg;
  bad.corruption.p_c = 1.5;
  CHECK_THROWS_AS(rade::validate(bad), rade::ConfigError);

  bad = cfg;
  bad.buffer_capacity = 0;
  CHECK_THROWS_AS(rade::validate(bad), rade::ConfigError);

  bad = cfg;
  bad.static_warmup.arrival_scale = 0.0;
  CHECK_THROWS_AS(rade::validate(bad), rade::ConfigError);

  bad = cfg;
  bad.ogd.step_size = 0.0;
  CHECK_THROWS_AS(rade::validate(bad), rade::ConfigError);

  bad = cfg;
  bad.initial_models = std::vector<rade::RiskModelParams>{};
  CHECK_THROWS_AS(rade::validate(bad), rade::ConfigError);

  bad = cfg;
  bad.initial_buffers = std::vector<std::vector<rade::FeedbackSample>>(2);
  CHECK_THROWS_AS(rade::validate(bad), rade::ConfigError);

  bad = cfg;
  bad.traffic.arrival_scale = 0.0;
  CHECK_THROWS_AS(rade::validate(bad), rade::ConfigError);
}

TEST_CASE("method names round-trip through parsing") {
  for (rade::MethodKind m : rade::kAllMethods) {
    const auto parsed = rade::parse_method(rade::method_name(m));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == m);
  }
  CHECK_FALSE(rade::parse_method("bogus").has_value());
}
