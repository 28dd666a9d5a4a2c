// Experiment front end behind the CLI: trace CSV emission, the sweep runner
// with warm-up and episode caches, Static model materialization, and the
// finite-difference gradient check. All CSV output goes through format_g6 and
// is written atomically (tmp file + rename), so identical inputs produce
// byte-identical files.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "rade/config.hpp"
#include "rade/csv.hpp"
#include "rade/model_io.hpp"
#include "rade/runtime.hpp"

namespace rade {

inline constexpr const char* kRunCsvHeader = "t,lambda_t,m_t,method,mean_e2e_prob";

inline std::string episode_csv(const RunTrace& trace, MethodKind method) {
  std::string out = std::string(kRunCsvHeader) + "\n";
  const std::string name = method_name(method);
  for (const StepRecord& s : trace.steps) {
    out += format_int(s.t);
    out += ',';
    out += format_g6(s.lambda_t);
    out += ',';
    out += format_int(s.m_t);
    out += ',';
    out += name;
    out += ',';
    if (s.m_t > 0) out += format_g6(s.sum_true_e2e / s.m_t);
    out += '\n';
  }
  return out;
}

inline std::string feedback_csv(const RunTrace& trace) {
  std::string out = "time_step,domain_id,delay_ms,throughput_gbps,accepted,corrupted\n";
  for (const FeedbackRecord& r : trace.feedback) {
    out += format_int(r.sample.time_step);
    out += ',';
    out += format_int(r.sample.domain_id);
    out += ',';
    out += format_g6(r.sample.slo.delay_ms);
    out += ',';
    out += format_g6(r.sample.slo.throughput_gbps);
    out += ',';
    out += r.sample.accepted ? '1' : '0';
    out += ',';
    out += r.corrupted ? '1' : '0';
    out += '\n';
  }
  return out;
}

inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open output file '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

// Loads pre-trained Static models when the config points at a directory of
// parameter files; otherwise run_episode trains its own where needed.
inline EpisodeConfig materialize_run(const RunConfig& rc) {
  EpisodeConfig cfg = rc.episode;
  if (rc.static_params_dir.has_value() && uses_risk_models(cfg.method)) {
    std::vector<RiskModelParams> models;
    const std::filesystem::path dir = *rc.static_params_dir;
    for (std::size_t d = 0; d < cfg.domains.size(); ++d) {
      models.push_back(load_model((dir / model_file_name(static_cast<int>(d))).string()));
    }
    cfg.initial_models = std::move(models);
  }
  return cfg;
}

inline void cmd_run(const std::string& config_path, const std::string& out_path,
                    std::optional<std::uint64_t> seed_override,
                    const std::optional<std::string>& feedback_log_path, bool verbose,
                    std::ostream& log) {
  ConfigMap cm = ConfigMap::parse_file(config_path);
  RunConfig rc = load_run_config(cm);
  if (seed_override.has_value()) rc.episode.seed = *seed_override;
  const EpisodeConfig cfg = materialize_run(rc);
  const RunTrace trace = run_episode(cfg);
  write_file_atomic(out_path, episode_csv(trace, cfg.method));
  if (feedback_log_path.has_value()) write_file_atomic(*feedback_log_path, feedback_csv(trace));
  if (verbose) {
    bool any = false;
    for (const StepRecord& s : trace.steps) any = any || s.m_t > 0;
    log << "run: method=" << method_name(cfg.method) << " seed=" << cfg.seed
        << " steps=" << trace.steps.size() << " requests=" << trace.requests.size()
        << " p_avg=" << (any ? format_g6(p_avg(trace)) : std::string("n/a")) << '\n';
  }
}

inline void cmd_train_static(const std::string& config_path, const std::string& out_dir,
                             std::optional<std::uint64_t> seed_override, bool verbose,
                             std::ostream& log) {
  ConfigMap cm = ConfigMap::parse_file(config_path);
  EpisodeConfig cfg =
      load_episode_config(cm, /*require_method=*/false, /*require_arrival_scale=*/true);
  cm.find_string("static.params_dir");  // accepted so run configs can be reused; not read here
  cm.reject_unknown();
  if (seed_override.has_value()) cfg.seed = *seed_override;

  const std::vector<RiskModelParams> models = make_static_models(cfg);
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  for (std::size_t d = 0; d < models.size(); ++d) {
    const fs::path path = fs::path(out_dir) / model_file_name(static_cast<int>(d));
    save_model(path.string(), models[d]);
    if (verbose) log << "train-static: wrote " << path.string() << '\n';
  }
}

namespace detail {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

inline MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  double acc = 0.0;
  for (double x : xs) acc += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(acc / static_cast<double>(xs.size()));
  return out;
}

}  // namespace detail

// Runs sweep cells on demand and caches both trained Static models (shared by
// Static/RadeStar/Rade at the same cell) and finished episode traces, so
// overlapping figure grids never recompute an episode.
class SweepRunner {
 public:
  explicit SweepRunner(SweepSpec spec, std::ostream* log = nullptr)
      : spec_(std::move(spec)), log_(log) {}

  const SweepSpec& spec() const { return spec_; }

  const RunTrace& cell_trace(MethodKind method, double rate, double p_c, std::uint64_t seed) {
    const auto key = std::make_tuple(static_cast<int>(method), rate, p_c, seed);
    auto it = episodes_.find(key);
    if (it == episodes_.end()) {
      EpisodeConfig cfg = cell_config(method, rate, p_c, seed);
      if (uses_risk_models(method)) {
        const WarmupResult& warmup = cell_warmup(rate, p_c, seed);
        cfg.initial_models = warmup.models;
        if (learns_online(method)) cfg.initial_buffers = warmup.feedback;
      }
      it = episodes_.emplace(key, run_episode(cfg)).first;
      if (log_ != nullptr) {
        bool any = false;
        for (const StepRecord& s : it->second.steps) any = any || s.m_t > 0;
        *log_ << "sweep: method=" << method_name(method) << " rate=" << format_g6(rate)
              << " p_c=" << format_g6(p_c) << " seed=" << seed
              << " p_avg=" << (any ? format_g6(p_avg(it->second)) : std::string("n/a")) << '\n';
      }
    }
    return it->second;
  }

  double cell_p_avg(MethodKind method, double rate, double p_c, std::uint64_t seed) {
    return p_avg(cell_trace(method, rate, p_c, seed));
  }

  detail::MeanStd aggregate(MethodKind method, double rate, double p_c) {
    std::vector<double> vals;
    vals.reserve(spec_.seeds.size());
    for (std::uint64_t seed : spec_.seeds) vals.push_back(cell_p_avg(method, rate, p_c, seed));
    return detail::mean_std(vals);
  }

  const WarmupResult& cell_warmup(double rate, double p_c, std::uint64_t seed) {
    const auto key = std::make_tuple(rate, p_c, seed);
    auto it = warmups_.find(key);
    if (it == warmups_.end()) {
      const EpisodeConfig cfg = cell_config(MethodKind::Static, rate, p_c, seed);
      it = warmups_.emplace(key, make_warmup(cfg)).first;
    }
    return it->second;
  }

 private:
  EpisodeConfig cell_config(MethodKind method, double rate, double p_c,
                            std::uint64_t seed) const {
    EpisodeConfig cfg = spec_.base;
    cfg.method = method;
    cfg.traffic.arrival_scale = rate;
    cfg.corruption.p_c = p_c;
    cfg.seed = seed;
    cfg.initial_models.reset();
    cfg.initial_buffers.reset();
    return cfg;
  }

  SweepSpec spec_;
  std::ostream* log_;
  std::map<std::tuple<int, double, double, std::uint64_t>, RunTrace> episodes_;
  std::map<std::tuple<double, double, std::uint64_t>, WarmupResult> warmups_;
};

inline std::string fig3_csv(SweepRunner& runner) {
  std::string out = "method,arrival_rate,p_avg_mean,p_avg_std\n";
  for (MethodKind m : runner.spec().methods) {
    for (double rate : runner.spec().arrival_rates) {
      const detail::MeanStd agg = runner.aggregate(m, rate, 0.0);
      out += method_name(m);
      out += ',';
      out += format_g6(rate);
      out += ',';
      out += format_g6(agg.mean);
      out += ',';
      out += format_g6(agg.std);
      out += '\n';
    }
  }
  return out;
}

inline std::string fig5_csv(SweepRunner& runner) {
  std::string out = "method,corruption_rate,p_avg_mean,p_avg_std\n";
  for (MethodKind m : runner.spec().methods) {
    for (double p_c : runner.spec().corruption_rates) {
      const detail::MeanStd agg = runner.aggregate(m, runner.spec().fig5_arrival_rate, p_c);
      out += method_name(m);
      out += ',';
      out += format_g6(p_c);
      out += ',';
      out += format_g6(agg.mean);
      out += ',';
      out += format_g6(agg.std);
      out += '\n';
    }
  }
  return out;
}

// Per-step overlay of every method for one designated seed. Methods under the
// same seed see identical arrivals, so m_t is a single shared column.
inline std::string fig4_csv(SweepRunner& runner) {
  const SweepSpec& spec = runner.spec();
  std::vector<const RunTrace*> traces;
  for (MethodKind m : spec.methods) {
    traces.push_back(&runner.cell_trace(m, spec.fig4_arrival_rate, 0.0, spec.fig4_seed));
  }

  std::string out = "t,lambda_t,m_t";
  for (MethodKind m : spec.methods) out += "," + method_name(m);
  out += '\n';

  const std::size_t steps = traces.empty() ? 0 : traces.front()->steps.size();
  for (std::size_t i = 0; i < steps; ++i) {
    const StepRecord& ref = traces.front()->steps[i];
    out += format_int(ref.t);
    out += ',';
    out += format_g6(ref.lambda_t);
    out += ',';
    out += format_int(ref.m_t);
    for (const RunTrace* tr : traces) {
      const StepRecord& s = tr->steps[i];
      if (s.m_t != ref.m_t) throw std::logic_error("fig4: paired seeding violated");
      out += ',';
      if (s.m_t > 0) out += format_g6(s.sum_true_e2e / s.m_t);
    }
    out += '\n';
  }
  return out;
}

inline void cmd_sweep(const std::string& spec_path, const std::string& out_dir,
                      std::optional<std::uint64_t> seed_override, bool verbose,
                      std::ostream& log) {
  ConfigMap cm = ConfigMap::parse_file(spec_path);
  SweepSpec spec = load_sweep_spec(cm);
  if (seed_override.has_value()) {
    spec.seeds = {*seed_override};
    spec.fig4_seed = *seed_override;
  }
  SweepRunner runner(std::move(spec), verbose ? &log : nullptr);

  namespace fs = std::filesystem;
  write_file_atomic(fs::path(out_dir) / "fig3.csv", fig3_csv(runner));
  write_file_atomic(fs::path(out_dir) / "fig5.csv", fig5_csv(runner));
  write_file_atomic(fs::path(out_dir) / "fig4_trace.csv", fig4_csv(runner));
}

struct GradCheckReport {
  double max_rel_err = 0.0;
  int trials = 0;
  bool pass() const { return max_rel_err < 1e-4; }
};

namespace detail {

// Keeps |v| >= margin so a finite-difference probe never crosses the
// absolute-value kink at zero.
inline double away_from_zero(double v, double margin) {
  return v >= 0.0 ? v + margin : v - margin;
}

}  // namespace detail

// Compares the analytic gradient against central finite differences over
// randomized model shapes, parameters, batch-norm states, and batch sizes.
// `corrupt_layer` flips the sign of that hidden layer's weight gradient, for
// exercising the check's ability to catch a broken backward pass.
inline GradCheckReport run_gradcheck(std::uint64_t seed, int trials = 100,
                                     std::optional<int> corrupt_layer = std::nullopt) {
  if (trials <= 0) throw std::invalid_argument("run_gradcheck: trials must be positive");
  GradCheckReport report;
  report.trials = trials;
  const double h = 1e-5;

  for (int trial = 0; trial < trials; ++trial) {
    auto eng = substream(seed, Stream::model_init, static_cast<std::uint64_t>(trial));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> sym(-0.5, 0.5);

    ModelShape shape;
    shape.hidden_depth = 1 + static_cast<int>(eng() % 3);
    shape.hidden_width = 2 + static_cast<int>(eng() % 7);
    RiskModelParams p = make_risk_model(shape, eng);
    for (HiddenLayer& layer : p.hidden) {
      for (double& w : layer.weight) w = detail::away_from_zero(sym(eng), 0.05);
      for (double& b : layer.bias) b = 0.2 * sym(eng);
      for (double& g : layer.gamma) g = detail::away_from_zero(sym(eng), 0.05);
      for (double& b : layer.beta) b = 0.2 * sym(eng);
      for (double& m : layer.running_mean) m = 0.2 * sym(eng);
      for (double& v : layer.running_var) v = 0.5 + unit(eng);
    }
    for (double& w : p.out_weight) w = detail::away_from_zero(sym(eng), 0.05);
    p.out_bias = 0.2 * sym(eng);

    const int batch_size = 1 + static_cast<int>(eng() % 8);
    std::vector<LabeledSlo> batch(static_cast<std::size_t>(batch_size));
    for (LabeledSlo& sample : batch) {
      sample.slo = {1.0 + 199.0 * unit(eng), 0.05 + 1.45 * unit(eng)};
      sample.label = unit(eng) < 0.5 ? 0 : 1;
    }

    ModelGrad grad = gradient(p, batch, RunMode::train);
    if (corrupt_layer.has_value() && *corrupt_layer < p.depth()) {
      for (double& g : grad.hidden[static_cast<std::size_t>(*corrupt_layer)].weight) g = -g;
    }
    const std::vector<double> analytic = flatten(grad);
    const std::vector<double*> values = trainable_values(p);

    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = *values[i];
      *values[i] = original + h;
      const double up = bce_loss(p, batch, RunMode::train);
      *values[i] = original - h;
      const double down = bce_loss(p, batch, RunMode::train);
      *values[i] = original;
      const double fd = (up - down) / (2.0 * h);
      const double scale = std::max({std::abs(analytic[i]), std::abs(fd), 1e-3});
      report.max_rel_err = std::max(report.max_rel_err, std::abs(analytic[i] - fd) / scale);
    }
  }
  return report;
}

}  // namespace rade
