#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <string>
#include <string_view>

#include "sqzkit/detail/text.hpp"
#include "sqzkit/errors.hpp"
#include "sqzkit/opo_model.hpp"

namespace sqzkit {

// Full description of one experiment: the cavity, the detection chain, and
// the default operating point commands fall back to.
struct ExperimentConfig {
  CavityParams cavity;
  DetectionChain detection;
  OperatingPoint operating_point;
};

// Flat `key = value` file with `#` comments.  Angles are degrees and powers
// are milliwatts on this boundary; storage is radians and watts.  Unknown and
// duplicate keys are rejected so typos cannot silently fall back to defaults.
inline ExperimentConfig load_config(std::istream& in) {
  static constexpr std::array<std::string_view, 12> known_keys = {
      "round_trip_length_m", "output_coupling",        "intracavity_loss",
      "nonlinear_coeff_per_w", "bliira_slope_per_w",   "propagation_efficiency",
      "homodyne_efficiency", "quantum_efficiency",     "circuit_noise_db",
      "phase_jitter_deg",    "pump_power_mw",          "sideband_hz",
  };
  static constexpr std::array<std::string_view, 10> required_keys = {
      "round_trip_length_m", "output_coupling",        "intracavity_loss",
      "nonlinear_coeff_per_w", "propagation_efficiency", "homodyne_efficiency",
      "circuit_noise_db",    "phase_jitter_deg",       "pump_power_mw",
      "sideband_hz",
  };

  std::map<std::string, double, std::less<>> values;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::string_view text = line;
    if (const auto comment = text.find('#'); comment != std::string_view::npos) {
      text = text.substr(0, comment);
    }
    text = detail::trim(text);
    if (text.empty()) continue;
    const auto equals = text.find('=');
    if (equals == std::string_view::npos) {
      throw parse_error("expected 'key = value'", line_number);
    }
    const std::string_view key = detail::trim(text.substr(0, equals));
    const std::string_view value_text = detail::trim(text.substr(equals + 1));
    if (std::find(known_keys.begin(), known_keys.end(), key) == known_keys.end()) {
      throw parse_error("unknown key '" + std::string(key) + "'", line_number);
    }
    if (values.contains(key)) {
      throw parse_error("duplicate key '" + std::string(key) + "'", line_number);
    }
    values[std::string(key)] = detail::parse_number(value_text, line_number);
  }
  for (const std::string_view key : required_keys) {
    if (!values.contains(key)) {
      throw parse_error("missing required key '" + std::string(key) + "'", 0);
    }
  }

  const auto get = [&](std::string_view key) {
    return values.find(key)->second;
  };
  const auto get_or = [&](std::string_view key, double fallback) {
    const auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
  };

  ExperimentConfig config;
  config.cavity.round_trip_length_m = get("round_trip_length_m");
  config.cavity.output_coupling = get("output_coupling");
  config.cavity.intracavity_loss = get("intracavity_loss");
  config.cavity.nonlinear_coefficient_per_w = get("nonlinear_coeff_per_w");
  config.cavity.bliira_slope_per_w = get_or("bliira_slope_per_w", 0.0);
  config.detection.propagation_efficiency = get("propagation_efficiency");
  config.detection.homodyne_efficiency = get("homodyne_efficiency");
  config.detection.quantum_efficiency = get_or("quantum_efficiency", 1.0);
  config.detection.circuit_noise_db = get("circuit_noise_db");
  config.detection.phase_jitter_rad =
      get("phase_jitter_deg") * std::numbers::pi / 180.0;
  config.operating_point.pump_power_w = get("pump_power_mw") * 1e-3;
  config.operating_point.sideband_hz = get("sideband_hz");

  config.cavity.validate();
  config.detection.validate();
  config.operating_point.validate();
  return config;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw parse_error("cannot open '" + path.string() + "'", 0);
  }
  return load_config(in);
}

}  // namespace sqzkit
