// Splits an end-to-end SLA into per-domain partials. Throughput is not a
// search dimension: every acceptance model is monotone non-increasing in the
// required throughput and composition takes the minimum, so assigning the
// end-to-end throughput to every domain is optimal. The delay budget is
// searched exhaustively over integer compositions of a grid (grid point g of
// domain d maps to delay target.delay_ms * g / grid_divisions), maximizing
// the sum of log acceptance probabilities, then refined by pairwise delay
// transfers at a tenth of the grid cell. Every domain is assigned at least
// one grid cell: a zero delay budget is never acceptable in any domain, so
// zero-delay assignments are excluded from the feasible set (they would also
// let a miscalibrated model starve a domain forever, since a starved domain
// only ever generates rejection feedback). Enumeration is in ascending
// lexicographic order and only strict improvements are kept, so ties resolve
// to the lexicographically smallest delay tuple.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "rade/domain_sim.hpp"
#include "rade/risk_model.hpp"
#include "rade/slo.hpp"

namespace rade {

struct DecomposerConfig {
  int grid_divisions = 10;
  int refine_iters = 2;
  double prob_floor = 1e-9;
};

inline void validate(const DecomposerConfig& cfg) {
  if (cfg.grid_divisions < 1 || cfg.refine_iters < 0 ||
      !(cfg.prob_floor > 0.0 && cfg.prob_floor < 0.5)) {
    throw std::invalid_argument("DecomposerConfig: grid_divisions >= 1, refine_iters >= 0, "
                                "prob_floor in (0, 0.5)");
  }
}

struct DecomposeResult {
  Decomposition partials;
  double e2e_prob = 0.0;  // product of the per-domain probabilities at the result
};

namespace detail {

// Shared search procedure; `prob(d, tau)` scores domain d at delay budget tau
// (throughput fixed to the target's). Bit-for-bit reproducible: candidate
// objectives accumulate left to right over domains.
template <typename ProbFn>
DecomposeResult decompose_with(int domains, const SloVector& target, const DecomposerConfig& cfg,
                               ProbFn&& prob) {
  validate(cfg);
  if (domains < 1) throw std::invalid_argument("decompose: need at least one domain");
  if (!target.valid()) throw std::invalid_argument("decompose: invalid target");

  const int grid = cfg.grid_divisions;
  if (target.delay_ms > 0.0 && grid < domains) {
    throw std::invalid_argument("decompose: grid_divisions must be >= the domain count");
  }
  const auto tau_of = [&](int g) {
    return (target.delay_ms * static_cast<double>(g)) / static_cast<double>(grid);
  };
  const auto log_term = [&](double probability) {
    return std::log(std::max(probability, cfg.prob_floor));
  };

  std::vector<double> taus(domains, 0.0);

  if (target.delay_ms > 0.0) {
    // Per-domain tables over the grid: probability and clamped log term.
    std::vector<std::vector<double>> table_log(domains, std::vector<double>(grid + 1));
    for (int d = 0; d < domains; ++d) {
      for (int g = 0; g <= grid; ++g) table_log[d][g] = log_term(prob(d, tau_of(g)));
    }

    std::vector<int> cells(domains, 0);
    std::vector<int> best_cells(domains, 0);
    double best_obj = -std::numeric_limits<double>::infinity();
    const std::function<void(int, int, double)> search = [&](int d, int remaining, double acc) {
      if (d == domains - 1) {
        cells[d] = remaining;
        const double obj = acc + table_log[d][remaining];
        if (obj > best_obj) {
          best_obj = obj;
          best_cells = cells;
        }
        return;
      }
      // Leave at least one cell for each remaining domain.
      for (int g = 1; g <= remaining - (domains - 1 - d); ++g) {
        cells[d] = g;
        search(d + 1, remaining - g, acc + table_log[d][g]);
      }
    };
    search(0, grid, 0.0);
    for (int d = 0; d < domains; ++d) taus[d] = tau_of(best_cells[d]);

    // Pairwise refinement at a tenth of the grid granularity. Moves never
    // take a domain below one grid cell, the same floor the search honours.
    const double cell = target.delay_ms / static_cast<double>(grid);
    const double delta = cell / 10.0;
    std::vector<double> terms(domains);
    for (int d = 0; d < domains; ++d) terms[d] = table_log[d][best_cells[d]];
    for (int pass = 0; pass < cfg.refine_iters; ++pass) {
      for (int i = 0; i < domains; ++i) {
        for (int j = 0; j < domains; ++j) {
          if (i == j) continue;
          const double tau_i = taus[i] - delta;
          if (tau_i < cell) continue;
          const double tau_j = taus[j] + delta;
          const double term_i = log_term(prob(i, tau_i));
          const double term_j = log_term(prob(j, tau_j));
          if (term_i + term_j > terms[i] + terms[j]) {
            taus[i] = tau_i;
            taus[j] = tau_j;
            terms[i] = term_i;
            terms[j] = term_j;
          }
        }
      }
    }
  }
  // A zero delay budget admits only the all-zeros split.

  DecomposeResult result;
  result.partials.partials.resize(domains);
  result.e2e_prob = 1.0;
  for (int d = 0; d < domains; ++d) {
    result.partials.partials[d] = {taus[d], target.throughput_gbps};
    result.e2e_prob *= prob(d, taus[d]);
  }
  return result;
}

}  // namespace detail

// Risk-model-guided decomposition: maximizes the predicted log E2E acceptance
// probability under the learned models.
inline DecomposeResult decompose(std::span<const RiskModelParams> models, const SloVector& target,
                                 const DecomposerConfig& cfg) {
  if (models.empty()) throw std::invalid_argument("decompose: need at least one model");
  return detail::decompose_with(
      static_cast<int>(models.size()), target, cfg, [&](int d, double tau) {
        return forward(models[d], SloVector{tau, target.throughput_gbps}, RunMode::eval);
      });
}

// Ground-truth decomposition: the same search scored with the simulator's
// analytic acceptance probabilities at the current traffic intensity.
inline DecomposeResult decompose_opt(std::span<const AnalyticDomainModel> domains, double lambda_t,
                                     const SloVector& target, const DecomposerConfig& cfg) {
  if (domains.empty()) throw std::invalid_argument("decompose_opt: need at least one domain");
  return detail::decompose_with(
      static_cast<int>(domains.size()), target, cfg, [&](int d, double tau) {
        return acceptance_prob(domains[d], SloVector{tau, target.throughput_gbps}, lambda_t);
      });
}

// Uniform random decomposition: the delay split is drawn uniformly from the
// simplex (gaps between sorted uniforms), throughput mirrors the target.
inline Decomposition decompose_random(const SloVector& target, int domains,
                                      std::mt19937_64& eng) {
  if (domains < 1) throw std::invalid_argument("decompose_random: need at least one domain");
  if (!target.valid()) throw std::invalid_argument("decompose_random: invalid target");
  std::vector<double> cuts;
  cuts.reserve(domains + 1);
  cuts.push_back(0.0);
  for (int i = 0; i < domains - 1; ++i) {
    cuts.push_back(std::uniform_real_distribution<double>(0.0, target.delay_ms)(eng));
  }
  cuts.push_back(target.delay_ms);
  std::sort(cuts.begin(), cuts.end());
  Decomposition d;
  d.partials.resize(domains);
  for (int i = 0; i < domains; ++i) {
    d.partials[i] = {cuts[i + 1] - cuts[i], target.throughput_gbps};
  }
  return d;
}

}  // namespace rade
