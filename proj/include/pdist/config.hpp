#pragma once

// JSON plumbing for the CLI and experiment spec files: resolving a command
// spec (config file merged with flags, flags winning), validating it, and
// rendering results. ordered_json keeps key order stable so identical specs
// serialize byte-identically.

#include <json.hpp>

#include <fstream>
#include <optional>
#include <string>

#include "pdist/channel.hpp"
#include "pdist/distill.hpp"
#include "pdist/pgm.hpp"
#include "pdist/rates.hpp"

namespace pdist {

using json = nlohmann::ordered_json;

class spec_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace cfg {

inline json load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw spec_error("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw spec_error("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw spec_error("config file must hold a JSON object");
  return j;
}

inline double number(const json& spec, const std::string& key) {
  if (!spec.contains(key)) throw spec_error("missing required key '" + key + "'");
  if (!spec[key].is_number()) throw spec_error("key '" + key + "' must be a number");
  return spec[key].get<double>();
}

inline double number_or(const json& spec, const std::string& key, double fallback) {
  return spec.contains(key) ? number(spec, key) : fallback;
}

inline int integer(const json& spec, const std::string& key) {
  if (!spec.contains(key)) throw spec_error("missing required key '" + key + "'");
  if (!spec[key].is_number_integer()) throw spec_error("key '" + key + "' must be an integer");
  return spec[key].get<int>();
}

inline std::string text_or(const json& spec, const std::string& key, const std::string& fallback) {
  if (!spec.contains(key)) return fallback;
  if (!spec[key].is_string()) throw spec_error("key '" + key + "' must be a string");
  return spec[key].get<std::string>();
}

inline std::uint64_t seed(const json& spec) {
  if (!spec.contains("seed")) throw spec_error("this command is stochastic: --seed is required");
  if (!spec["seed"].is_number_unsigned() && !spec["seed"].is_number_integer())
    throw spec_error("key 'seed' must be an integer");
  return spec["seed"].get<std::uint64_t>();
}

// protocol: "bb84" | "six-state" | "custom" (accepts the config alias "kind")
inline ProtocolModel protocol(const json& spec) {
  const std::string kind = text_or(spec, "protocol", text_or(spec, "kind", "bb84"));
  try {
    if (kind == "bb84") return ProtocolModel(ProtocolKind::BB84, number(spec, "Q"));
    if (kind == "six-state" || kind == "sixstate")
      return ProtocolModel(ProtocolKind::SixState, number(spec, "Q"));
    if (kind == "custom") {
      const PauliDistribution d(number(spec, "p00"), number(spec, "p01"), number(spec, "p10"),
                                number(spec, "p11"));
      return ProtocolModel::custom_model(d);
    }
  } catch (const std::invalid_argument& e) {
    throw spec_error(e.what());
  }
  throw spec_error("unknown protocol '" + kind + "' (expected bb84, six-state or custom)");
}

// "full" | "empty" | "rank:<k>"
inline CodeSpec code(const json& spec, const std::string& key, const std::string& fallback) {
  const std::string text = text_or(spec, key, fallback);
  if (text == "full") return CodeSpec::full();
  if (text == "empty") return CodeSpec::empty();
  if (text.rfind("rank:", 0) == 0) {
    try {
      return CodeSpec::random(std::stoi(text.substr(5)));
    } catch (const std::exception&) {
      throw spec_error("bad code spec '" + text + "'");
    }
  }
  throw spec_error("bad code spec '" + text + "' (expected full, empty or rank:<k>)");
}

inline SubsetMethod subset_method(const json& spec) {
  const std::string m = text_or(spec, "method", "coset");
  if (m == "coset") return SubsetMethod::RandomCoset;
  if (m == "uniform") return SubsetMethod::UniformSubset;
  throw spec_error("unknown subset method '" + m + "' (expected coset or uniform)");
}

inline json describe_protocol(const ProtocolModel& m) {
  json j;
  switch (m.kind) {
    case ProtocolKind::BB84: j["protocol"] = "bb84"; j["Q"] = m.Q; break;
    case ProtocolKind::SixState: j["protocol"] = "six-state"; j["Q"] = m.Q; break;
    case ProtocolKind::Custom:
      j["protocol"] = "custom";
      j["p00"] = m.custom->p00;
      j["p01"] = m.custom->p01;
      j["p10"] = m.custom->p10;
      j["p11"] = m.custom->p11;
      break;
  }
  return j;
}

inline json rate_to_json(const RateResult& r) {
  json j;
  j["R"] = r.R;
  j["bit_cost"] = r.bit_cost;      // H2(p~)
  j["phase_cost"] = r.phase_cost;  // sum_u p_u H2(p_{1|u})
  j["shield_gain"] = r.shield_gain;
  j["p_tilde"] = r.p_tilde;
  return j;
}

}  // namespace cfg
}  // namespace pdist
