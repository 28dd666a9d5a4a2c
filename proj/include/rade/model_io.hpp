// Versioned JSON serialization of risk-model parameters. Matrices are stored
// row-major as nested arrays; files carry a format marker and version so stale
// or foreign files fail loudly instead of deserializing garbage.
#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rade/errors.hpp"
#include "rade/risk_model.hpp"

namespace rade {

inline constexpr const char* kModelFormatName = "rade-risk-model";
inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline nlohmann::json matrix_to_json(const std::vector<double>& row_major, int rows, int cols) {
  nlohmann::json out = nlohmann::json::array();
  for (int r = 0; r < rows; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < cols; ++c) row.push_back(row_major[static_cast<std::size_t>(r) * cols + c]);
    out.push_back(std::move(row));
  }
  return out;
}

inline std::vector<double> matrix_from_json(const nlohmann::json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) throw ConfigError("model file: '" + name + "' must be a nonempty array of rows");
  std::vector<double> out;
  const std::size_t cols = j.front().size();
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != cols) {
      throw ConfigError("model file: ragged rows in '" + name + "'");
    }
    for (const auto& v : row) out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace detail

inline nlohmann::json model_to_json(const RiskModelParams& p) {
  validate(p);
  nlohmann::json j;
  j["format"] = kModelFormatName;
  j["format_version"] = kModelFormatVersion;
  j["input_scale"] = p.input_scale;
  j["sign_mask"] = p.sign_mask;
  j["bn_epsilon"] = p.bn_epsilon;
  nlohmann::json hidden = nlohmann::json::array();
  for (const HiddenLayer& layer : p.hidden) {
    nlohmann::json l;
    l["weight"] = detail::matrix_to_json(layer.weight, layer.out, layer.in);
    l["bias"] = layer.bias;
    l["gamma"] = layer.gamma;
    l["beta"] = layer.beta;
    l["running_mean"] = layer.running_mean;
    l["running_var"] = layer.running_var;
    hidden.push_back(std::move(l));
  }
  j["hidden"] = std::move(hidden);
  j["out_weight"] = p.out_weight;
  j["out_bias"] = p.out_bias;
  return j;
}

inline RiskModelParams model_from_json(const nlohmann::json& j) {
  if (!j.contains("format") || j["format"] != kModelFormatName) {
    throw ConfigError("model file: missing or wrong format marker, expected '" +
                      std::string(kModelFormatName) + "'");
  }
  if (!j.contains("format_version") || j["format_version"].get<int>() != kModelFormatVersion) {
    throw ConfigError("model file: unsupported format_version");
  }
  RiskModelParams p;
  p.input_scale = j.at("input_scale").get<std::array<double, 2>>();
  p.sign_mask = j.at("sign_mask").get<std::array<double, 2>>();
  p.bn_epsilon = j.at("bn_epsilon").get<double>();
  for (const auto& l : j.at("hidden")) {
    HiddenLayer layer;
    const auto& w = l.at("weight");
    layer.out = static_cast<int>(w.size());
    layer.in = layer.out > 0 ? static_cast<int>(w.front().size()) : 0;
    layer.weight = detail::matrix_from_json(w, "weight");
    layer.bias = l.at("bias").get<std::vector<double>>();
    layer.gamma = l.at("gamma").get<std::vector<double>>();
    layer.beta = l.at("beta").get<std::vector<double>>();
    layer.running_mean = l.at("running_mean").get<std::vector<double>>();
    layer.running_var = l.at("running_var").get<std::vector<double>>();
    p.hidden.push_back(std::move(layer));
  }
  p.out_weight = j.at("out_weight").get<std::vector<double>>();
  p.out_bias = j.at("out_bias").get<double>();
  validate(p);
  return p;
}

inline void save_model(const std::string& path, const RiskModelParams& p) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open model file for writing: '" + path + "'");
  out << model_to_json(p).dump(2) << '\n';
  if (!out) throw ConfigError("write failed for model file: '" + path + "'");
}

inline RiskModelParams load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file: '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("model file '" + path + "': " + e.what());
  }
  try {
    return model_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("model file '" + path + "': " + e.what());
  }
}

inline std::string model_file_name(int domain_id) {
  return "domain_" + std::to_string(domain_id) + ".json";
}

}  // namespace rade
