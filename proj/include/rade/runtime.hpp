// Episode driver. Each time step first ingests the feedback generated at the
// previous step (FIFO push followed by OGD passes over a buffer snapshot),
// then decomposes the step's arrivals with the current model snapshots, so the
// models used at step t depend only on feedback from steps before t. All
// randomness comes from substreams keyed by (seed, purpose, t, request,
// domain); methods run under the same seed therefore face identical request
// sequences.
#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rade/decomposer.hpp"
#include "rade/domain_sim.hpp"
#include "rade/errors.hpp"
#include "rade/feedback.hpp"
#include "rade/risk_model.hpp"
#include "rade/rng.hpp"
#include "rade/slo.hpp"

namespace rade {

enum class MethodKind { Random, Static, RadeStar, Rade, Opt };

inline constexpr MethodKind kAllMethods[] = {MethodKind::Random, MethodKind::Static,
                                             MethodKind::RadeStar, MethodKind::Rade,
                                             MethodKind::Opt};

inline std::string method_name(MethodKind m) {
  switch (m) {
    case MethodKind::Random: return "random";
    case MethodKind::Static: return "static";
    case MethodKind::RadeStar: return "rade_star";
    case MethodKind::Rade: return "rade";
    case MethodKind::Opt: return "opt";
  }
  throw std::invalid_argument("method_name: unknown method");
}

inline std::optional<MethodKind> parse_method(const std::string& name) {
  for (MethodKind m : kAllMethods) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

// True for methods that carry learned risk models.
inline bool uses_risk_models(MethodKind m) {
  return m == MethodKind::Static || m == MethodKind::RadeStar || m == MethodKind::Rade;
}

// True for methods that keep updating those models online.
inline bool learns_online(MethodKind m) {
  return m == MethodKind::RadeStar || m == MethodKind::Rade;
}

struct StaticWarmup {
  int epochs = 1;
  // Arrival scale of the warm-up run. The warm-up is a one-time data
  // collection pass, so its traffic volume is a fixed reference rather than
  // whatever rate the episode itself runs at.
  double arrival_scale = 0.25;
  // Seed of the warm-up run; derived from the episode seed when unset.
  std::optional<std::uint64_t> warmup_seed;
};

struct EpisodeConfig {
  MethodKind method = MethodKind::Rade;
  std::vector<AnalyticDomainModel> domains;
  TrafficProcess traffic;
  CorruptionConfig corruption;
  OgdConfig ogd;
  int buffer_capacity = 2048;
  DecomposerConfig decomposer;
  std::uint64_t seed = 0;
  StaticWarmup static_warmup;
  ModelShape model_shape;
  // Pre-trained per-domain models; skips the warm-up run when present.
  std::optional<std::vector<RiskModelParams>> initial_models;
  // Per-domain feedback seeded into the memory buffers before step 0. When
  // absent and a warm-up runs, the warm-up feedback is used; when models are
  // supplied externally the buffers start empty unless this is set.
  std::optional<std::vector<std::vector<FeedbackSample>>> initial_buffers;
};

inline std::uint64_t resolved_warmup_seed(const EpisodeConfig& cfg) {
  if (cfg.static_warmup.warmup_seed.has_value()) return *cfg.static_warmup.warmup_seed;
  return splitmix64(cfg.seed ^ 0x7761726d75702173ULL);
}

inline void validate(const EpisodeConfig& cfg) {
  if (cfg.domains.empty()) throw ConfigError("episode: need at least one domain");
  for (const AnalyticDomainModel& d : cfg.domains) {
    if (!d.valid()) throw ConfigError("episode: domain parameters must be positive");
  }
  if (cfg.traffic.total_steps < 0 || !(cfg.traffic.arrival_scale > 0.0)) {
    throw ConfigError("episode: traffic.total_steps >= 0 and traffic.arrival_scale > 0 required");
  }
  if (!cfg.corruption.valid()) throw ConfigError("episode: corruption.p_c must lie in [0, 1]");
  if (cfg.buffer_capacity < 1) throw ConfigError("episode: buffer capacity must be positive");
  if (cfg.static_warmup.epochs < 0) throw ConfigError("episode: static warm-up epochs < 0");
  if (!(cfg.static_warmup.arrival_scale > 0.0)) {
    throw ConfigError("episode: static warm-up arrival scale must be positive");
  }
  try {
    validate(cfg.ogd);
    validate(cfg.decomposer);
    if (cfg.initial_models.has_value()) {
      if (cfg.initial_models->size() != cfg.domains.size()) {
        throw ConfigError("episode: initial model count does not match domain count");
      }
      for (const RiskModelParams& m : *cfg.initial_models) validate(m);
    }
    if (cfg.initial_buffers.has_value() && cfg.initial_buffers->size() != cfg.domains.size()) {
      throw ConfigError("episode: initial buffer count does not match domain count");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("episode: ") + e.what());
  }
}

struct StepRecord {
  std::int64_t t = 0;
  double lambda_t = 0.0;
  int m_t = 0;
  double sum_true_e2e = 0.0;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct RequestRecord {
  std::int64_t t = 0;
  int index = 0;
  SloVector sla;
  Decomposition partials;
  double true_e2e_prob = 0.0;

  friend bool operator==(const RequestRecord&, const RequestRecord&) = default;
};

struct FeedbackRecord {
  FeedbackSample sample;
  bool corrupted = false;

  friend bool operator==(const FeedbackRecord&, const FeedbackRecord&) = default;
};

struct RunTrace {
  std::vector<StepRecord> steps;
  std::vector<RequestRecord> requests;
  std::vector<FeedbackRecord> feedback;
  std::vector<RiskModelParams> final_models;
};

// Average E2E acceptance probability: mean over steps (with at least one
// request) of the per-step mean of the requests' true E2E probabilities.
inline double p_avg(const RunTrace& trace) {
  double total = 0.0;
  std::int64_t active_steps = 0;
  for (const StepRecord& s : trace.steps) {
    if (s.m_t > 0) {
      total += s.sum_true_e2e / s.m_t;
      ++active_steps;
    }
  }
  if (active_steps == 0) throw NoDataError("p_avg: trace has no requests");
  return total / static_cast<double>(active_steps);
}

inline RunTrace run_episode(const EpisodeConfig& cfg);

struct WarmupResult {
  std::vector<RiskModelParams> models;
  // Feedback collected by the warm-up run, grouped by domain; seeds the
  // online methods' memory buffers.
  std::vector<std::vector<FeedbackSample>> feedback;
};

// Runs the warm-up: one full episode with the Random method under the warm-up
// seed, then per-domain shuffled-minibatch training on the collected
// feedback. The trained parameter sets serve as the Static models and as the
// starting point for the online methods.
inline WarmupResult make_warmup(const EpisodeConfig& cfg) {
  EpisodeConfig warmup = cfg;
  warmup.method = MethodKind::Random;
  warmup.seed = resolved_warmup_seed(cfg);
  warmup.traffic.arrival_scale = cfg.static_warmup.arrival_scale;
  warmup.initial_models.reset();
  warmup.initial_buffers.reset();
  const RunTrace trace = run_episode(warmup);

  const std::size_t domains = cfg.domains.size();
  WarmupResult result;
  result.feedback.resize(domains);
  std::vector<std::vector<LabeledSlo>> datasets(domains);
  for (const FeedbackRecord& rec : trace.feedback) {
    const auto d = static_cast<std::size_t>(rec.sample.domain_id);
    result.feedback[d].push_back(rec.sample);
    datasets[d].push_back({rec.sample.slo, rec.sample.accepted ? 1 : 0});
  }
  for (std::size_t d = 0; d < domains; ++d) {
    if (datasets[d].empty()) {
      throw InsufficientDataError("make_static_models: warm-up produced no feedback for domain " +
                                  std::to_string(d));
    }
  }

  ModelShape shape = cfg.model_shape;
  shape.bn_epsilon = cfg.ogd.bn_epsilon;
  result.models.reserve(domains);
  for (std::size_t d = 0; d < domains; ++d) {
    auto init_eng = substream(warmup.seed, Stream::model_init, d);
    auto shuffle_eng = substream(warmup.seed, Stream::train_shuffle, d);
    RiskModelParams initial = make_risk_model(shape, init_eng);
    result.models.push_back(train_to_convergence(initial, datasets[d], cfg.static_warmup.epochs,
                                                 cfg.ogd, shuffle_eng)
                                .params);
  }
  return result;
}

inline std::vector<RiskModelParams> make_static_models(const EpisodeConfig& cfg) {
  return make_warmup(cfg).models;
}

namespace detail {

// One set of OGD passes over a snapshot of the domain's buffer.
inline RiskModelParams run_ogd_passes(RiskModelParams model, std::span<const FeedbackSample> snap,
                                      const OgdConfig& cfg, std::mt19937_64& shuffle_eng) {
  std::vector<LabeledSlo> data(snap.size());
  for (std::size_t i = 0; i < snap.size(); ++i) {
    data[i] = {snap[i].slo, snap[i].accepted ? 1 : 0};
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<LabeledSlo> batch;
  for (int pass = 0; pass < cfg.passes_per_step; ++pass) {
    std::shuffle(order.begin(), order.end(), shuffle_eng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.minibatch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.minibatch_size));
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(data[order[i]]);
      model = ogd_step(model, batch, cfg);
    }
  }
  return model;
}

}  // namespace detail

inline RunTrace run_episode(const EpisodeConfig& cfg) {
  validate(cfg);
  const int domains = static_cast<int>(cfg.domains.size());

  RunTrace trace;
  std::vector<RiskModelParams> models;
  std::vector<std::vector<FeedbackSample>> seed_feedback(static_cast<std::size_t>(domains));
  if (uses_risk_models(cfg.method)) {
    if (cfg.initial_models.has_value()) {
      models = *cfg.initial_models;
      if (cfg.initial_buffers.has_value()) seed_feedback = *cfg.initial_buffers;
    } else {
      WarmupResult warmup = make_warmup(cfg);
      models = std::move(warmup.models);
      seed_feedback =
          cfg.initial_buffers.has_value() ? *cfg.initial_buffers : std::move(warmup.feedback);
    }
  }

  std::vector<FifoBuffer> buffers;
  if (learns_online(cfg.method)) {
    buffers.assign(domains, FifoBuffer(static_cast<std::size_t>(cfg.buffer_capacity)));
    for (int d = 0; d < domains; ++d) {
      buffers[d] = push_batch(std::move(buffers[d]), seed_feedback[static_cast<std::size_t>(d)]);
    }
  }

  std::vector<std::vector<FeedbackSample>> pending(domains);
  for (std::int64_t t = 0; t < cfg.traffic.total_steps; ++t) {
    const double lambda_t = traffic_factor(cfg.traffic, t);

    // Learning phase: ingest feedback from step t-1, then update. Updates
    // run only when fresh feedback arrived; re-fitting an unchanged buffer
    // during arrival gaps would just overfit stale data.
    if (learns_online(cfg.method)) {
      for (int d = 0; d < domains; ++d) {
        if (pending[d].empty()) continue;
        if (cfg.method == MethodKind::RadeStar) buffers[d].clear();
        buffers[d] = push_batch(std::move(buffers[d]), pending[d]);
        const std::vector<FeedbackSample> snap = buffers[d].snapshot();
        auto shuffle_eng = substream(cfg.seed, Stream::ogd_shuffle, t, d);
        models[d] = detail::run_ogd_passes(std::move(models[d]), snap, cfg.ogd, shuffle_eng);
      }
    }
    for (auto& q : pending) q.clear();

    // Inference phase: decompose this step's arrivals with the current models.
    auto arrivals_eng = substream(cfg.seed, Stream::arrivals, t);
    const int m_t = sample_arrivals(cfg.traffic, t, arrivals_eng);
    double sum_true = 0.0;
    for (int m = 0; m < m_t; ++m) {
      auto request_eng = substream(cfg.seed, Stream::request, t, m);
      const SloVector sla = sample_request(request_eng);

      Decomposition partials;
      switch (cfg.method) {
        case MethodKind::Random: {
          auto split_eng = substream(cfg.seed, Stream::random_split, t, m);
          partials = decompose_random(sla, domains, split_eng);
          break;
        }
        case MethodKind::Static:
        case MethodKind::RadeStar:
        case MethodKind::Rade:
          partials = decompose(models, sla, cfg.decomposer).partials;
          break;
        case MethodKind::Opt:
          partials = decompose_opt(cfg.domains, lambda_t, sla, cfg.decomposer).partials;
          break;
      }

      double true_prob = 1.0;
      for (int d = 0; d < domains; ++d) {
        true_prob *= acceptance_prob(cfg.domains[d], partials.partials[d], lambda_t);
      }
      sum_true += true_prob;
      trace.requests.push_back({t, m, sla, partials, true_prob});

      for (int d = 0; d < domains; ++d) {
        auto feedback_eng = substream(cfg.seed, Stream::feedback, t, m, d);
        const FeedbackDraw draw =
            feedback(cfg.domains[d], partials.partials[d], lambda_t, cfg.corruption, feedback_eng);
        const FeedbackSample sample{d, partials.partials[d], draw.accepted, t};
        pending[d].push_back(sample);
        trace.feedback.push_back({sample, draw.corrupted});
      }
    }
    trace.steps.push_back({t, lambda_t, m_t, sum_true});
  }

  trace.final_models = std::move(models);
  return trace;
}

}  // namespace rade
