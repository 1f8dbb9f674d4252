#pragma once

#include <cmath>
#include <cstdio>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sqzkit/decibel.hpp"
#include "sqzkit/errors.hpp"
#include "sqzkit/qi_metrics.hpp"
#include "sqzkit/quadrature.hpp"

namespace sqzkit {

inline constexpr double speed_of_light_m_per_s = 299792458.0;

namespace detail {

// Powers are watts inside the library but milliwatts in every user-facing
// message, matching how such experiments are quoted.
inline std::string mw_str(double watts) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", watts * 1e3);
  return buf;
}

}  // namespace detail

// Cavity geometry and losses of the parametric oscillator.
struct CavityParams {
  double round_trip_length_m;         // optical round-trip length
  double output_coupling;             // T, power transmission of the coupler
  double intracavity_loss;            // L0, nominal round-trip loss (pump off)
  double nonlinear_coefficient_per_w; // E_NL, parametric conversion strength
  double bliira_slope_per_w = 0.0;    // pump-induced extra loss per watt

  void validate() const {
    if (!std::isfinite(round_trip_length_m) || round_trip_length_m <= 0.0) {
      throw domain_error("round-trip length must be positive");
    }
    if (!std::isfinite(output_coupling) || output_coupling <= 0.0 ||
        output_coupling >= 1.0) {
      throw domain_error("output coupling must lie in (0, 1)");
    }
    if (!std::isfinite(intracavity_loss) || intracavity_loss < 0.0 ||
        intracavity_loss >= 1.0) {
      throw domain_error("intra-cavity loss must lie in [0, 1)");
    }
    if (output_coupling + intracavity_loss >= 1.0) {
      throw domain_error("output coupling plus intra-cavity loss must stay below 1");
    }
    if (!std::isfinite(nonlinear_coefficient_per_w) ||
        nonlinear_coefficient_per_w <= 0.0) {
      throw domain_error("nonlinear coefficient must be positive");
    }
    if (!std::isfinite(bliira_slope_per_w) || bliira_slope_per_w < 0.0) {
      throw domain_error("pump-loss slope must be non-negative");
    }
  }
};

// Everything between the cavity output and the recorded noise level.
struct DetectionChain {
  double propagation_efficiency;   // eta_P, path transmission
  double homodyne_efficiency;      // eta_H, interference visibility squared
  double quantum_efficiency = 1.0; // eta_Q of the photodiodes
  double circuit_noise_db;         // electronics floor, dB re shot noise (< 0)
  double phase_jitter_rad = 0.0;   // residual rms phase error of the LO lock

  void validate() const {
    auto check_efficiency = [](double value, const char* name) {
      if (!std::isfinite(value) || value <= 0.0 || value > 1.0) {
        throw domain_error(std::string(name) + " must lie in (0, 1]");
      }
    };
    check_efficiency(propagation_efficiency, "propagation efficiency");
    check_efficiency(homodyne_efficiency, "homodyne efficiency");
    check_efficiency(quantum_efficiency, "quantum efficiency");
    if (!std::isfinite(circuit_noise_db) || circuit_noise_db >= 0.0) {
      throw domain_error("circuit noise level must be negative (dB re shot noise)");
    }
    if (!std::isfinite(phase_jitter_rad) || phase_jitter_rad < 0.0 ||
        phase_jitter_rad >= std::numbers::pi / 4.0) {
      throw domain_error("phase jitter must lie in [0, pi/4) radians");
    }
  }
};

// One measurement condition: pump drive and the analysis sideband.
struct OperatingPoint {
  double pump_power_w;
  double sideband_hz;

  void validate() const {
    if (!std::isfinite(pump_power_w) || pump_power_w < 0.0) {
      throw domain_error("pump power must be non-negative");
    }
    if (!std::isfinite(sideband_hz) || sideband_hz <= 0.0) {
      throw domain_error("sideband frequency must be positive");
    }
  }
};

// Oscillation threshold (T + L0)^2 / (4 E_NL).  Deliberately uses the nominal
// loss, not the pump-dependent one, so a single fixed threshold is quoted even
// when a pump-loss slope is configured.
inline double threshold_power(const CavityParams& cavity) {
  cavity.validate();
  const double coupling_sum = cavity.output_coupling + cavity.intracavity_loss;
  return coupling_sum * coupling_sum / (4.0 * cavity.nonlinear_coefficient_per_w);
}

// Drive parameter x = sqrt(P / P_th) in [0, 1).  The sub-threshold model has
// no meaning at or above threshold, so that is a hard error, not a clamp.
inline double pump_ratio(double pump_power_w, double threshold_w) {
  if (!std::isfinite(threshold_w) || threshold_w <= 0.0) {
    throw domain_error("threshold power must be positive");
  }
  if (!std::isfinite(pump_power_w) || pump_power_w < 0.0) {
    throw domain_error("pump power must be non-negative");
  }
  if (pump_power_w >= threshold_w) {
    throw above_threshold_error(
        "pump power " + detail::mw_str(pump_power_w) +
        " mW is at or above the oscillation threshold " +
        detail::mw_str(threshold_w) + " mW; the sub-threshold model does not apply");
  }
  return std::sqrt(pump_power_w / threshold_w);
}

// Round-trip loss at the given pump power, L0 + slope * P.
inline double effective_loss(const CavityParams& cavity, double pump_power_w) {
  cavity.validate();
  if (!std::isfinite(pump_power_w) || pump_power_w < 0.0) {
    throw domain_error("pump power must be non-negative");
  }
  const double loss = cavity.intracavity_loss + cavity.bliira_slope_per_w * pump_power_w;
  if (loss >= 1.0 - cavity.output_coupling) {
    throw domain_error("effective intra-cavity loss " + std::to_string(loss) +
                       " at " + detail::mw_str(pump_power_w) +
                       " mW pump reaches 1 minus the output coupling");
  }
  return loss;
}

// Cavity amplitude decay rate gamma = c (T + L) / (2 l_rt) in rad/s, the
// half-width of the cavity Lorentzian.  The loss term follows the pump power
// so a configured pump-loss slope widens the line consistently.
inline double cavity_decay_rate(const CavityParams& cavity, double pump_power_w = 0.0) {
  const double loss = effective_loss(cavity, pump_power_w);
  return speed_of_light_m_per_s * (cavity.output_coupling + loss) /
         (2.0 * cavity.round_trip_length_m);
}

// Escape efficiency T/(T+L) times every detection-chain efficiency.
inline double total_efficiency(const CavityParams& cavity, const DetectionChain& det,
                               double pump_power_w) {
  det.validate();
  const double loss = effective_loss(cavity, pump_power_w);
  const double escape = cavity.output_coupling / (cavity.output_coupling + loss);
  return escape * det.propagation_efficiency * det.homodyne_efficiency *
         det.quantum_efficiency;
}

// Sub-threshold quadrature noise spectra at normalized sideband frequency
// omega_norm = Omega/gamma:
//
//   R_minus = 1 - eta_tot * 4x / ((1 + x)^2 + omega_norm^2)
//   R_plus  = 1 + eta_tot * 4x / ((1 - x)^2 + omega_norm^2)
//
// Linear variances re shot noise; the product is exactly 1 when eta_tot = 1.
inline QuadraturePair ideal_spectra(double x, double omega_norm, double eta_tot) {
  if (!std::isfinite(x) || x < 0.0 || x >= 1.0) {
    throw domain_error("pump ratio must lie in [0, 1), got " + std::to_string(x));
  }
  if (!std::isfinite(omega_norm) || omega_norm < 0.0) {
    throw domain_error("normalized sideband frequency must be non-negative");
  }
  if (!std::isfinite(eta_tot) || eta_tot <= 0.0 || eta_tot > 1.0) {
    throw domain_error("total efficiency must lie in (0, 1]");
  }
  const double omega_sq = omega_norm * omega_norm;
  const double squeezed = 1.0 - eta_tot * 4.0 * x / ((1.0 + x) * (1.0 + x) + omega_sq);
  const double anti = 1.0 + eta_tot * 4.0 * x / ((1.0 - x) * (1.0 - x) + omega_sq);
  return {squeezed, anti};
}

// Phase-sensitive gains of a classical seed, G = 1/(1 -+ x)^2.
struct ParametricGain {
  double amplified;
  double deamplified;
};

inline ParametricGain classical_gain(double x) {
  if (!std::isfinite(x) || x < 0.0) {
    throw domain_error("pump ratio must be non-negative");
  }
  if (x >= 1.0) {
    throw above_threshold_error("pump ratio " + std::to_string(x) +
                                " is at or above 1; gain diverges at threshold");
  }
  return {1.0 / ((1.0 - x) * (1.0 - x)), 1.0 / ((1.0 + x) * (1.0 + x))};
}

// Recovers x from a measured amplified gain, the usual way the drive strength
// is anchored when the pump power calibration is not trusted.
inline double pump_ratio_from_gain(double amplified_gain) {
  if (!std::isfinite(amplified_gain) || amplified_gain < 1.0) {
    throw domain_error("amplified gain must be at least 1, got " +
                       std::to_string(amplified_gain));
  }
  return 1.0 - 1.0 / std::sqrt(amplified_gain);
}

namespace detail {

inline void check_jitter_angle(double theta_rad) {
  if (!std::isfinite(theta_rad) || theta_rad < 0.0 ||
      theta_rad >= std::numbers::pi / 4.0) {
    throw domain_error("phase jitter must lie in [0, pi/4) radians, got " +
                       std::to_string(theta_rad));
  }
}

// Linear floor for a circuit noise level, which must sit below shot noise.
inline double circuit_floor_linear(double circuit_db) {
  if (!std::isfinite(circuit_db) || circuit_db >= 0.0) {
    throw domain_error("circuit noise level must be negative (dB re shot noise)");
  }
  return db_to_linear(circuit_db);
}

}  // namespace detail

// Residual LO phase jitter mixes the two quadratures:
//   R'_-+ = R_-+ cos^2(theta) + R_+- sin^2(theta)
// The sum R_- + R_+ is preserved.  Beyond theta = pi/4 the labels would swap,
// so the angle is capped there.
inline QuadraturePair apply_phase_jitter(const QuadraturePair& pair, double theta_rad) {
  detail::check_jitter_angle(theta_rad);
  const double c = std::cos(theta_rad);
  const double s = std::sin(theta_rad);
  const double c2 = c * c;
  const double s2 = s * s;
  return {pair.squeezed() * c2 + pair.anti_squeezed() * s2,
          pair.anti_squeezed() * c2 + pair.squeezed() * s2};
}

// Algebraic inverse of apply_phase_jitter.  An observed pair too degenerate
// for the claimed angle would imply a non-positive underlying variance, which
// is rejected rather than returned.
inline QuadraturePair unmix_phase_jitter(const QuadraturePair& observed, double theta_rad) {
  detail::check_jitter_angle(theta_rad);
  const double c = std::cos(theta_rad);
  const double s = std::sin(theta_rad);
  const double c2 = c * c;
  const double s2 = s * s;
  const double cos_two_theta = c2 - s2;  // positive for theta < pi/4
  const double squeezed =
      (observed.squeezed() * c2 - observed.anti_squeezed() * s2) / cos_two_theta;
  const double anti =
      (observed.anti_squeezed() * c2 - observed.squeezed() * s2) / cos_two_theta;
  if (!(squeezed > 0.0)) {
    throw domain_error(
        "observed pair is incompatible with a phase jitter of " +
        std::to_string(theta_rad) + " rad; unmixing yields a non-positive variance");
  }
  return {squeezed, anti};
}

// Detector electronics noise is independent of the optical signal, so it adds
// in linear power to both quadratures.
inline QuadraturePair add_circuit_noise(const QuadraturePair& pair, double circuit_db) {
  const double floor = detail::circuit_floor_linear(circuit_db);
  return {pair.squeezed() + floor, pair.anti_squeezed() + floor};
}

inline QuadraturePair remove_circuit_noise(const QuadraturePair& measured, double circuit_db) {
  const double floor = detail::circuit_floor_linear(circuit_db);
  if (measured.squeezed() <= floor) {
    throw domain_error("measured variance " + std::to_string(measured.squeezed()) +
                       " is at or below the circuit-noise floor " +
                       std::to_string(floor) + "; nothing optical remains");
  }
  return {measured.squeezed() - floor, measured.anti_squeezed() - floor};
}

// Every intermediate quantity of the forward model at one operating point.
struct PredictionStages {
  double threshold_w;
  double pump_ratio;  // x
  double omega_norm;  // sideband over cavity decay rate
  double eta_tot;
  QuadraturePair ideal;     // cavity output after all efficiencies
  QuadraturePair jittered;  // plus LO phase jitter
  QuadraturePair observed;  // plus electronics floor
};

// Forward model: spectra at the operating point, degraded by phase jitter,
// then the electronics floor on top.  Pure function of its inputs.
inline PredictionStages predict_stages(const CavityParams& cavity,
                                       const DetectionChain& det,
                                       const OperatingPoint& op) {
  op.validate();
  det.validate();
  const double threshold_w = threshold_power(cavity);
  const double x = pump_ratio(op.pump_power_w, threshold_w);
  const double gamma = cavity_decay_rate(cavity, op.pump_power_w);
  const double omega_norm = 2.0 * std::numbers::pi * op.sideband_hz / gamma;
  const double eta_tot = total_efficiency(cavity, det, op.pump_power_w);
  const QuadraturePair ideal = ideal_spectra(x, omega_norm, eta_tot);
  const QuadraturePair jittered = apply_phase_jitter(ideal, det.phase_jitter_rad);
  const QuadraturePair observed = add_circuit_noise(jittered, det.circuit_noise_db);
  return {threshold_w, x, omega_norm, eta_tot, ideal, jittered, observed};
}

inline QuadraturePair predict_observed(const CavityParams& cavity,
                                       const DetectionChain& det,
                                       const OperatingPoint& op) {
  return predict_stages(cavity, det, op).observed;
}

struct SweepRow {
  double pump_power_w;
  double squeezed_db;
  double anti_squeezed_db;
  double purity;
};

// Forward model over a list of pump powers, rows in input order.
inline std::vector<SweepRow> sweep(const CavityParams& cavity, const DetectionChain& det,
                                   std::span<const double> pump_powers_w,
                                   double sideband_hz) {
  std::vector<SweepRow> rows;
  rows.reserve(pump_powers_w.size());
  for (std::size_t i = 0; i < pump_powers_w.size(); ++i) {
    try {
      const QuadraturePair observed =
          predict_observed(cavity, det, {pump_powers_w[i], sideband_hz});
      rows.push_back({pump_powers_w[i], observed.squeezed_db(),
                      observed.anti_squeezed_db(), purity(observed)});
    } catch (const above_threshold_error& e) {
      throw above_threshold_error("row " + std::to_string(i) + ": " + e.what());
    }
  }
  return rows;
}

// Inverse of the threshold formula, for reporting the conversion strength
// implied by a fitted threshold.
inline double nonlinear_coeff_from_threshold(const CavityParams& cavity,
                                             double threshold_w) {
  cavity.validate();
  if (!std::isfinite(threshold_w) || threshold_w <= 0.0) {
    throw domain_error("threshold power must be positive");
  }
  const double coupling_sum = cavity.output_coupling + cavity.intracavity_loss;
  return coupling_sum * coupling_sum / (4.0 * threshold_w);
}

}  // namespace sqzkit
