// Per-domain acceptance-probability model: a small MLP made monotone by
// taking absolute values of the linear weights and the batch-norm scales in
// the forward computation, with inputs sign-encoded so the output is
// non-decreasing in delay budget and non-increasing in required throughput.
// Hidden layers apply linear -> tanh -> batch norm; the output is a sigmoid.
//
// Training is by online gradient descent on the mean binary cross-entropy of
// accept/reject labels. The backward pass differentiates |w| with the
// sub-derivative sign(w), sign(0) = 0, and goes through batch norm with
// whichever statistics the forward pass used.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rade/errors.hpp"
#include "rade/slo.hpp"

namespace rade {

// Forward outputs stay inside the open interval (0, 1).
inline constexpr double kForwardClampLo = 1e-15;
// Probabilities are clamped here before logarithms in the loss.
inline constexpr double kLossClampLo = 1e-9;

struct OgdConfig {
  double step_size = 0.02;
  int passes_per_step = 2;
  int minibatch_size = 256;
  double bn_momentum = 0.1;
  double bn_epsilon = 1e-5;
};

inline void validate(const OgdConfig& cfg) {
  if (!(cfg.step_size > 0.0) || cfg.passes_per_step <= 0 || cfg.minibatch_size <= 0 ||
      !(cfg.bn_momentum > 0.0 && cfg.bn_momentum < 1.0) || !(cfg.bn_epsilon > 0.0)) {
    throw std::invalid_argument("OgdConfig: all fields must be positive, bn_momentum in (0,1)");
  }
}

struct ModelShape {
  int hidden_depth = 3;
  int hidden_width = 8;
  double delay_ref_ms = 100.0;
  double throughput_ref_gbps = 1.0;
  double bn_epsilon = 1e-5;
};

struct HiddenLayer {
  int in = 0;
  int out = 0;
  std::vector<double> weight;  // row-major, out x in
  std::vector<double> bias;
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;

  friend bool operator==(const HiddenLayer&, const HiddenLayer&) = default;
};

struct RiskModelParams {
  std::vector<HiddenLayer> hidden;
  std::vector<double> out_weight;
  double out_bias = 0.0;
  // Per-feature normalization constants: (delay_ref_ms, throughput_ref_gbps).
  std::array<double, 2> input_scale{100.0, 1.0};
  // +1 for delay, -1 for throughput: encodes the monotone direction.
  std::array<double, 2> sign_mask{1.0, -1.0};
  double bn_epsilon = 1e-5;

  int depth() const { return static_cast<int>(hidden.size()); }
  int width() const { return hidden.empty() ? 0 : hidden.back().out; }

  friend bool operator==(const RiskModelParams&, const RiskModelParams&) = default;
};

inline void validate(const RiskModelParams& p) {
  if (p.hidden.empty()) throw std::invalid_argument("risk model: no hidden layers");
  int expected_in = 2;
  for (std::size_t l = 0; l < p.hidden.size(); ++l) {
    const HiddenLayer& layer = p.hidden[l];
    if (layer.in != expected_in || layer.out <= 0 ||
        layer.weight.size() != static_cast<std::size_t>(layer.in * layer.out) ||
        layer.bias.size() != static_cast<std::size_t>(layer.out) ||
        layer.gamma.size() != static_cast<std::size_t>(layer.out) ||
        layer.beta.size() != static_cast<std::size_t>(layer.out) ||
        layer.running_mean.size() != static_cast<std::size_t>(layer.out) ||
        layer.running_var.size() != static_cast<std::size_t>(layer.out)) {
      throw std::invalid_argument("risk model: inconsistent layer shapes at layer " +
                                  std::to_string(l));
    }
    for (double v : layer.running_var) {
      if (!(v > 0.0)) throw std::invalid_argument("risk model: running variance must be positive");
    }
    expected_in = layer.out;
  }
  if (p.out_weight.size() != static_cast<std::size_t>(expected_in)) {
    throw std::invalid_argument("risk model: output weight size mismatch");
  }
  if (!(p.input_scale[0] > 0.0) || !(p.input_scale[1] > 0.0)) {
    throw std::invalid_argument("risk model: input scales must be positive");
  }
  for (double s : p.sign_mask) {
    if (s != 1.0 && s != -1.0) throw std::invalid_argument("risk model: sign mask must be +/-1");
  }
  if (!(p.bn_epsilon > 0.0)) throw std::invalid_argument("risk model: bn_epsilon must be positive");
}

// Fresh model: weights uniform in [-0.5, 0.5], biases zero, identity-like BN.
inline RiskModelParams make_risk_model(const ModelShape& shape, std::mt19937_64& eng) {
  if (shape.hidden_depth <= 0 || shape.hidden_width <= 0) {
    throw std::invalid_argument("make_risk_model: depth and width must be positive");
  }
  std::uniform_real_distribution<double> init(-0.5, 0.5);
  RiskModelParams p;
  p.input_scale = {shape.delay_ref_ms, shape.throughput_ref_gbps};
  p.sign_mask = {1.0, -1.0};
  p.bn_epsilon = shape.bn_epsilon;
  int in = 2;
  for (int l = 0; l < shape.hidden_depth; ++l) {
    HiddenLayer layer;
    layer.in = in;
    layer.out = shape.hidden_width;
    layer.weight.resize(static_cast<std::size_t>(layer.in) * layer.out);
    for (double& w : layer.weight) w = init(eng);
    layer.bias.assign(layer.out, 0.0);
    layer.gamma.assign(layer.out, 1.0);
    layer.beta.assign(layer.out, 0.0);
    layer.running_mean.assign(layer.out, 0.0);
    layer.running_var.assign(layer.out, 1.0);
    in = layer.out;
    p.hidden.push_back(std::move(layer));
  }
  p.out_weight.resize(in);
  for (double& w : p.out_weight) w = init(eng);
  p.out_bias = 0.0;
  return p;
}

enum class RunMode { train, eval };

// Batch statistics are only trusted once the batch has this many samples;
// smaller batches normalize with the running statistics even in train mode.
inline constexpr int kBatchStatsMinSamples = 4;

struct LayerCache {
  std::vector<double> a;     // K x out, tanh outputs
  std::vector<double> xhat;  // K x out, normalized activations
  std::vector<double> h;     // K x out, post-BN outputs
  std::vector<double> used_mean, used_var;    // statistics used to normalize
  std::vector<double> batch_mean, batch_var;  // statistics of this batch
  bool used_batch_stats = false;
};

struct ForwardCache {
  std::vector<double> features;  // K x 2
  std::vector<LayerCache> layers;
  std::vector<double> probs;  // K
};

struct LabeledSlo {
  SloVector slo;
  int label = 0;  // 1 = accepted, 0 = rejected
};

namespace detail {

inline double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

inline double sign0(double w) { return w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0); }

}  // namespace detail

// Batched forward pass. In train mode, layers normalize with the batch's own
// statistics once the batch is large enough; eval mode always uses the running
// statistics. Batch statistics are recorded in the cache either way so an
// update step can refresh the running statistics.
inline std::vector<double> forward_batch(const RiskModelParams& p, std::span<const SloVector> xs,
                                         RunMode mode, ForwardCache* cache = nullptr) {
  const int K = static_cast<int>(xs.size());
  if (K == 0) return {};
  const bool batch_stats = (mode == RunMode::train && K >= kBatchStatsMinSamples);

  std::vector<double> features(static_cast<std::size_t>(K) * 2);
  for (int i = 0; i < K; ++i) {
    features[2 * i + 0] = p.sign_mask[0] * (xs[i].delay_ms / p.input_scale[0]);
    features[2 * i + 1] = p.sign_mask[1] * (xs[i].throughput_gbps / p.input_scale[1]);
  }

  std::vector<LayerCache> layers(p.hidden.size());
  const std::vector<double>* input = &features;
  for (std::size_t l = 0; l < p.hidden.size(); ++l) {
    const HiddenLayer& layer = p.hidden[l];
    LayerCache& lc = layers[l];
    const int in = layer.in;
    const int out = layer.out;
    lc.a.resize(static_cast<std::size_t>(K) * out);
    for (int i = 0; i < K; ++i) {
      const double* row_in = input->data() + static_cast<std::size_t>(i) * in;
      for (int j = 0; j < out; ++j) {
        double z = layer.bias[j];
        const double* w = layer.weight.data() + static_cast<std::size_t>(j) * in;
        for (int k = 0; k < in; ++k) z += std::abs(w[k]) * row_in[k];
        lc.a[static_cast<std::size_t>(i) * out + j] = std::tanh(z);
      }
    }
    lc.batch_mean.assign(out, 0.0);
    lc.batch_var.assign(out, 0.0);
    for (int j = 0; j < out; ++j) {
      double m = 0.0;
      for (int i = 0; i < K; ++i) m += lc.a[static_cast<std::size_t>(i) * out + j];
      m /= K;
      double v = 0.0;
      for (int i = 0; i < K; ++i) {
        const double d = lc.a[static_cast<std::size_t>(i) * out + j] - m;
        v += d * d;
      }
      lc.batch_mean[j] = m;
      lc.batch_var[j] = v / K;
    }
    lc.used_batch_stats = batch_stats;
    lc.used_mean = batch_stats ? lc.batch_mean : layer.running_mean;
    lc.used_var = batch_stats ? lc.batch_var : layer.running_var;

    lc.xhat.resize(static_cast<std::size_t>(K) * out);
    lc.h.resize(static_cast<std::size_t>(K) * out);
    for (int j = 0; j < out; ++j) {
      const double inv = 1.0 / std::sqrt(lc.used_var[j] + p.bn_epsilon);
      const double g = std::abs(layer.gamma[j]);
      for (int i = 0; i < K; ++i) {
        const std::size_t idx = static_cast<std::size_t>(i) * out + j;
        lc.xhat[idx] = (lc.a[idx] - lc.used_mean[j]) * inv;
        lc.h[idx] = g * lc.xhat[idx] + layer.beta[j];
      }
    }
    for (double v : lc.h) {
      if (!std::isfinite(v)) {
        throw NumericError("forward: non-finite activation in hidden layer " + std::to_string(l));
      }
    }
    input = &lc.h;
  }

  std::vector<double> probs(K);
  const int width = p.width();
  for (int i = 0; i < K; ++i) {
    double u = p.out_bias;
    const double* h = input->data() + static_cast<std::size_t>(i) * width;
    for (int k = 0; k < width; ++k) u += std::abs(p.out_weight[k]) * h[k];
    const double prob = detail::sigmoid(u);
    if (!std::isfinite(prob)) throw NumericError("forward: non-finite value in output layer");
    probs[i] = std::clamp(prob, kForwardClampLo, 1.0 - kForwardClampLo);
  }

  if (cache != nullptr) {
    cache->features = std::move(features);
    cache->layers = std::move(layers);
    cache->probs = probs;
  }
  return probs;
}

inline double forward(const RiskModelParams& p, const SloVector& s,
                      RunMode mode = RunMode::eval) {
  const SloVector xs[1] = {s};
  return forward_batch(p, xs, mode).front();
}

// Mean binary cross-entropy of given probabilities against 0/1 labels.
inline double bce_from_probs(std::span<const double> probs, std::span<const int> labels) {
  if (probs.empty() || probs.size() != labels.size()) {
    throw std::invalid_argument("bce_from_probs: empty or mismatched batch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double q = std::clamp(probs[i], kLossClampLo, 1.0 - kLossClampLo);
    total += labels[i] != 0 ? -std::log(q) : -std::log(1.0 - q);
  }
  return total / static_cast<double>(probs.size());
}

inline double bce_loss(const RiskModelParams& p, std::span<const LabeledSlo> batch,
                       RunMode mode = RunMode::train) {
  if (batch.empty()) throw std::invalid_argument("bce_loss: empty batch");
  std::vector<SloVector> xs(batch.size());
  std::vector<int> ys(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    xs[i] = batch[i].slo;
    ys[i] = batch[i].label;
  }
  const std::vector<double> probs = forward_batch(p, xs, mode);
  return bce_from_probs(probs, ys);
}

struct LayerGrad {
  std::vector<double> weight, bias, gamma, beta;
};

struct ModelGrad {
  std::vector<LayerGrad> hidden;
  std::vector<double> out_weight;
  double out_bias = 0.0;
};

namespace detail {

// Backward pass for the mean BCE loss. `cache` must come from a forward pass
// of the same batch; the BN backward follows the statistics mode recorded
// there (batch statistics couple the samples, running statistics do not).
inline ModelGrad backprop(const RiskModelParams& p, std::span<const LabeledSlo> batch,
                          const ForwardCache& cache) {
  const int K = static_cast<int>(batch.size());
  const int width = p.width();

  ModelGrad grad;
  grad.hidden.resize(p.hidden.size());
  for (std::size_t l = 0; l < p.hidden.size(); ++l) {
    grad.hidden[l].weight.assign(p.hidden[l].weight.size(), 0.0);
    grad.hidden[l].bias.assign(p.hidden[l].bias.size(), 0.0);
    grad.hidden[l].gamma.assign(p.hidden[l].gamma.size(), 0.0);
    grad.hidden[l].beta.assign(p.hidden[l].beta.size(), 0.0);
  }
  grad.out_weight.assign(p.out_weight.size(), 0.0);

  // Output layer: d(mean BCE)/du = (prob - y)/K while the loss clamp is
  // inactive, zero once the probability saturates past the clamp.
  std::vector<double> du(K);
  for (int i = 0; i < K; ++i) {
    const double prob = cache.probs[i];
    const bool active = prob > kLossClampLo && prob < 1.0 - kLossClampLo;
    du[i] = active ? (prob - static_cast<double>(batch[i].label)) / K : 0.0;
  }
  const std::vector<double>& h_last = cache.layers.back().h;
  std::vector<double> dh(static_cast<std::size_t>(K) * width);
  for (int k = 0; k < width; ++k) {
    double acc = 0.0;
    for (int i = 0; i < K; ++i) acc += du[i] * h_last[static_cast<std::size_t>(i) * width + k];
    grad.out_weight[k] = sign0(p.out_weight[k]) * acc;
    const double w_abs = std::abs(p.out_weight[k]);
    for (int i = 0; i < K; ++i) dh[static_cast<std::size_t>(i) * width + k] = du[i] * w_abs;
  }
  grad.out_bias = std::accumulate(du.begin(), du.end(), 0.0);

  for (int l = static_cast<int>(p.hidden.size()) - 1; l >= 0; --l) {
    const HiddenLayer& layer = p.hidden[l];
    const LayerCache& lc = cache.layers[l];
    LayerGrad& lg = grad.hidden[l];
    const int in = layer.in;
    const int out = layer.out;
    const std::vector<double>& input =
        l == 0 ? cache.features : cache.layers[static_cast<std::size_t>(l) - 1].h;

    std::vector<double> dz(static_cast<std::size_t>(K) * out);
    for (int j = 0; j < out; ++j) {
      double sum_dh = 0.0;
      double sum_dh_xhat = 0.0;
      for (int i = 0; i < K; ++i) {
        const std::size_t idx = static_cast<std::size_t>(i) * out + j;
        sum_dh += dh[idx];
        sum_dh_xhat += dh[idx] * lc.xhat[idx];
      }
      lg.beta[j] = sum_dh;
      lg.gamma[j] = sign0(layer.gamma[j]) * sum_dh_xhat;

      const double g = std::abs(layer.gamma[j]);
      const double inv = 1.0 / std::sqrt(lc.used_var[j] + p.bn_epsilon);
      for (int i = 0; i < K; ++i) {
        const std::size_t idx = static_cast<std::size_t>(i) * out + j;
        double da;
        if (lc.used_batch_stats) {
          da = g * inv * (dh[idx] - sum_dh / K - lc.xhat[idx] * sum_dh_xhat / K);
        } else {
          da = g * inv * dh[idx];
        }
        dz[idx] = da * (1.0 - lc.a[idx] * lc.a[idx]);
      }
    }

    for (int j = 0; j < out; ++j) {
      double db = 0.0;
      for (int i = 0; i < K; ++i) db += dz[static_cast<std::size_t>(i) * out + j];
      lg.bias[j] = db;
      for (int k = 0; k < in; ++k) {
        double acc = 0.0;
        for (int i = 0; i < K; ++i) {
          acc += dz[static_cast<std::size_t>(i) * out + j] *
                 input[static_cast<std::size_t>(i) * in + k];
        }
        lg.weight[static_cast<std::size_t>(j) * in + k] =
            sign0(layer.weight[static_cast<std::size_t>(j) * in + k]) * acc;
      }
    }

    if (l > 0) {
      std::vector<double> dprev(static_cast<std::size_t>(K) * in, 0.0);
      for (int i = 0; i < K; ++i) {
        for (int j = 0; j < out; ++j) {
          const double d = dz[static_cast<std::size_t>(i) * out + j];
          const double* w = layer.weight.data() + static_cast<std::size_t>(j) * in;
          for (int k = 0; k < in; ++k) {
            dprev[static_cast<std::size_t>(i) * in + k] += d * std::abs(w[k]);
          }
        }
      }
      dh = std::move(dprev);
    }
  }

  for (const LayerGrad& lg : grad.hidden) {
    for (const auto* vec : {&lg.weight, &lg.bias, &lg.gamma, &lg.beta}) {
      for (double v : *vec) {
        if (!std::isfinite(v)) throw NumericError("gradient: non-finite value");
      }
    }
  }
  for (double v : grad.out_weight) {
    if (!std::isfinite(v)) throw NumericError("gradient: non-finite value");
  }
  if (!std::isfinite(grad.out_bias)) throw NumericError("gradient: non-finite value");
  return grad;
}

}  // namespace detail

// Exact gradient of bce_loss with respect to every trainable parameter.
inline ModelGrad gradient(const RiskModelParams& p, std::span<const LabeledSlo> batch,
                          RunMode mode = RunMode::train) {
  if (batch.empty()) throw std::invalid_argument("gradient: empty batch");
  std::vector<SloVector> xs(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) xs[i] = batch[i].slo;
  ForwardCache cache;
  forward_batch(p, xs, mode, &cache);
  return detail::backprop(p, batch, cache);
}

// One online-gradient-descent step on a batch. Returns the updated parameter
// set; BN running statistics move toward the batch statistics with momentum,
// but only when the batch was large enough for its statistics to be used —
// degenerate small-batch statistics (variance 0 for a single sample) must not
// bleed into the running state. Input scaling and sign encoding are left
// untouched.
inline RiskModelParams ogd_step(const RiskModelParams& p, std::span<const LabeledSlo> batch,
                                const OgdConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("ogd_step: empty batch");
  std::vector<SloVector> xs(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) xs[i] = batch[i].slo;
  ForwardCache cache;
  forward_batch(p, xs, RunMode::train, &cache);
  const ModelGrad grad = detail::backprop(p, batch, cache);

  RiskModelParams next = p;
  const double eta = cfg.step_size;
  for (std::size_t l = 0; l < next.hidden.size(); ++l) {
    HiddenLayer& layer = next.hidden[l];
    const LayerGrad& lg = grad.hidden[l];
    for (std::size_t i = 0; i < layer.weight.size(); ++i) layer.weight[i] -= eta * lg.weight[i];
    for (std::size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] -= eta * lg.bias[i];
    for (std::size_t i = 0; i < layer.gamma.size(); ++i) layer.gamma[i] -= eta * lg.gamma[i];
    for (std::size_t i = 0; i < layer.beta.size(); ++i) layer.beta[i] -= eta * lg.beta[i];
    const LayerCache& lc = cache.layers[l];
    if (lc.used_batch_stats) {
      for (int j = 0; j < layer.out; ++j) {
        layer.running_mean[j] =
            (1.0 - cfg.bn_momentum) * layer.running_mean[j] + cfg.bn_momentum * lc.batch_mean[j];
        layer.running_var[j] =
            (1.0 - cfg.bn_momentum) * layer.running_var[j] + cfg.bn_momentum * lc.batch_var[j];
      }
    }
  }
  for (std::size_t i = 0; i < next.out_weight.size(); ++i) {
    next.out_weight[i] -= eta * grad.out_weight[i];
  }
  next.out_bias -= eta * grad.out_bias;
  return next;
}

struct TrainResult {
  RiskModelParams params;
  double final_loss = 0.0;
};

// Shuffled-minibatch training for the given number of epochs.
inline TrainResult train_to_convergence(const RiskModelParams& initial,
                                        std::span<const LabeledSlo> dataset, int epochs,
                                        const OgdConfig& cfg, std::mt19937_64& eng) {
  if (dataset.empty()) throw std::invalid_argument("train_to_convergence: empty dataset");
  if (epochs < 0) throw std::invalid_argument("train_to_convergence: negative epochs");
  validate(cfg);
  RiskModelParams p = initial;
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<LabeledSlo> batch;
  for (int e = 0; e < epochs; ++e) {
    std::shuffle(order.begin(), order.end(), eng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.minibatch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.minibatch_size));
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(dataset[order[i]]);
      p = ogd_step(p, batch, cfg);
    }
  }
  const double final_loss = bce_loss(p, dataset, RunMode::train);
  return {std::move(p), final_loss};
}

// Flat views over the trainable parameters, in a fixed traversal order
// (per layer: weight, bias, gamma, beta; then output weight and bias).
inline std::vector<double*> trainable_values(RiskModelParams& p) {
  std::vector<double*> out;
  for (HiddenLayer& layer : p.hidden) {
    for (auto* vec : {&layer.weight, &layer.bias, &layer.gamma, &layer.beta}) {
      for (double& v : *vec) out.push_back(&v);
    }
  }
  for (double& v : p.out_weight) out.push_back(&v);
  out.push_back(&p.out_bias);
  return out;
}

inline std::vector<double> flatten(const ModelGrad& g) {
  std::vector<double> out;
  for (const LayerGrad& lg : g.hidden) {
    for (const auto* vec : {&lg.weight, &lg.bias, &lg.gamma, &lg.beta}) {
      out.insert(out.end(), vec->begin(), vec->end());
    }
  }
  out.insert(out.end(), g.out_weight.begin(), g.out_weight.end());
  out.push_back(g.out_bias);
  return out;
}

}  // namespace rade
