#ifndef BFSGD_HARNESS_CONFIG_HPP
#define BFSGD_HARNESS_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "bfsgd/types.hpp"

namespace bfsgd::harness {

using Json = nlohmann::json;

struct ExperimentConfig {
  std::string problem;
  std::string algorithm;
  Json params = Json::object();
  std::uint64_t seed = 0;
  std::filesystem::path output = "out";
};

inline const std::set<std::string>& problem_names() {
  static const std::set<std::string> names = {"example1", "topopt-a", "topopt-b", "topopt-c", "quadratic"};
  return names;
}

inline const std::set<std::string>& algorithm_names() {
  static const std::set<std::string> names = {"sgd", "sag", "bfsag", "svrg", "bfsvrg"};
  return names;
}

inline ExperimentConfig parse_config(const Json& j) {
  if (!j.is_object()) throw ConfigFault("config must be a JSON object");
  static const std::set<std::string> keys = {"problem", "algorithm", "params", "seed", "output"};
  for (const auto& [key, value] : j.items())
    if (!keys.contains(key)) throw ConfigFault("unknown config key '" + key + "'");

  ExperimentConfig c;
  if (!j.contains("problem") || !j["problem"].is_string()) throw ConfigFault("config needs a string 'problem'");
  if (!j.contains("algorithm") || !j["algorithm"].is_string())
    throw ConfigFault("config needs a string 'algorithm'");
  c.problem = j["problem"].get<std::string>();
  c.algorithm = j["algorithm"].get<std::string>();
  if (!problem_names().contains(c.problem)) throw ConfigFault("unknown problem '" + c.problem + "'");
  if (!algorithm_names().contains(c.algorithm)) throw ConfigFault("unknown algorithm '" + c.algorithm + "'");
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw ConfigFault("'params' must be an object");
    c.params = j["params"];
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<std::int64_t>() < 0)
      throw ConfigFault("'seed' must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("output")) {
    if (!j["output"].is_string()) throw ConfigFault("'output' must be a string");
    c.output = j["output"].get<std::string>();
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigFault("cannot open config " + path.string());
  try {
    return parse_config(Json::parse(is));
  } catch (const Json::exception& e) {
    throw ConfigFault("malformed config " + path.string() + ": " + e.what());
  }
}

/// Typed access to the flat parameter object. Every key must be read by the
/// time `finish` runs, so misspelled keys are reported instead of ignored.
class ParamReader {
 public:
  explicit ParamReader(const Json& params) : params_(params) {}

  bool has(const std::string& key) const { return params_.contains(key); }

  double real(const std::string& key, double fallback) {
    if (!take(key)) return fallback;
    const auto& v = params_[key];
    if (!v.is_number()) throw ConfigFault("parameter '" + key + "' must be a number");
    return v.get<double>();
  }

  double positive(const std::string& key, double fallback) {
    const double v = real(key, fallback);
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigFault("parameter '" + key + "' must be positive");
    return v;
  }

  Index count(const std::string& key, Index fallback, Index minimum = 1) {
    if (!take(key)) return fallback;
    const auto& v = params_[key];
    if (!v.is_number_integer()) throw ConfigFault("parameter '" + key + "' must be an integer");
    const auto n = v.get<std::int64_t>();
    if (n < minimum) throw ConfigFault("parameter '" + key + "' must be at least " + std::to_string(minimum));
    return static_cast<Index>(n);
  }

  bool flag(const std::string& key, bool fallback) {
    if (!take(key)) return fallback;
    if (!params_[key].is_boolean()) throw ConfigFault("parameter '" + key + "' must be true or false");
    return params_[key].get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!take(key)) return fallback;
    if (!params_[key].is_string()) throw ConfigFault("parameter '" + key + "' must be a string");
    return params_[key].get<std::string>();
  }

  /// A number broadcast to `n` entries, or an array of exactly `n` numbers.
  std::optional<Vector> vector(const std::string& key, Index n) {
    if (!take(key)) return std::nullopt;
    const auto& v = params_[key];
    if (v.is_number()) return Vector::Constant(n, v.get<double>());
    if (!v.is_array() || static_cast<Index>(v.size()) != n)
      throw ConfigFault("parameter '" + key + "' must be a number or an array of length " + std::to_string(n));
    Vector out(n);
    for (Index i = 0; i < n; ++i) {
      if (!v[static_cast<std::size_t>(i)].is_number()) throw ConfigFault("parameter '" + key + "' must be numeric");
      out[i] = v[static_cast<std::size_t>(i)].get<double>();
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : params_.items())
      if (!used_.contains(key)) throw ConfigFault("unknown parameter '" + key + "'");
  }

 private:
  bool take(const std::string& key) {
    used_.insert(key);
    return params_.contains(key) && !params_[key].is_null();
  }

  const Json& params_;
  std::set<std::string> used_;
};

}  // namespace bfsgd::harness

#endif  // BFSGD_HARNESS_CONFIG_HPP
