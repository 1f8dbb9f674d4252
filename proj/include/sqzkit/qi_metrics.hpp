#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "sqzkit/decibel.hpp"
#include "sqzkit/errors.hpp"
#include "sqzkit/quadrature.hpp"

namespace sqzkit {

// Quadrature squeezing needed before unconditional quantum dense coding can
// outperform the best classical channel: more squeezing than this (i.e. a
// more negative level) wins.
inline constexpr double holevo_criterion_db = -6.78;

// Squeezing degree r of a minimum-uncertainty description with squeezed
// variance e^{-2r}.  Dimensionless, non-negative.
struct SqueezingParameter {
  double r = 0.0;
};

// Maps a squeezed noise level (dB re shot, <= 0) to the squeezing degree via
// e^{-2r} = linear variance, i.e. r = |level| ln(10) / 20.
inline SqueezingParameter squeezing_parameter(double squeezed_level_db) {
  if (!std::isfinite(squeezed_level_db) || squeezed_level_db > 0.0) {
    throw domain_error("squeezed level must be <= 0 dB re shot noise, got " +
                       std::to_string(squeezed_level_db));
  }
  return {-squeezed_level_db * std::numbers::ln10 / 20.0};
}

// Fidelity of n cascaded teleportation hops over a channel built from this
// squeezing: F = 1 / (1 + n e^{-2r}).
inline double teleport_fidelity(int hops, SqueezingParameter sq) {
  if (hops < 1) {
    throw domain_error("number of teleportation hops must be at least 1");
  }
  if (!std::isfinite(sq.r) || sq.r < 0.0) {
    throw domain_error("squeezing parameter must be finite and non-negative");
  }
  return 1.0 / (1.0 + static_cast<double>(hops) * std::exp(-2.0 * sq.r));
}

// Dense-coding channel capacity I = ln(1 + n_s e^{2r}) in nats, where n_s is
// the mean photon number spent on signal modulation.
inline double dense_coding_capacity(double mean_photon_number, SqueezingParameter sq) {
  if (!std::isfinite(mean_photon_number) || mean_photon_number < 0.0) {
    throw domain_error("mean photon number must be non-negative");
  }
  if (!std::isfinite(sq.r) || sq.r < 0.0) {
    throw domain_error("squeezing parameter must be finite and non-negative");
  }
  return std::log1p(mean_photon_number * std::exp(2.0 * sq.r));
}

// Purity Tr(rho^2) of a zero-mean Gaussian state with these quadrature
// variances: 1 / sqrt(V_- V_+).  Equals 1 exactly on the minimum-uncertainty
// family, less once loss or added noise inflates the product.
inline double purity(const QuadraturePair& pair) {
  return 1.0 / std::sqrt(pair.squeezed() * pair.anti_squeezed());
}

// Strict comparison: the boundary itself does not count as exceeding.
inline bool beats_holevo(double squeezed_level_db) {
  if (!std::isfinite(squeezed_level_db)) {
    throw domain_error("squeezed level must be finite");
  }
  return squeezed_level_db < holevo_criterion_db;
}

}  // namespace sqzkit
