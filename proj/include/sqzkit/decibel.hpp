#pragma once

#include <cmath>
#include <string>

#include "sqzkit/errors.hpp"

namespace sqzkit {

// Noise powers are handled as linear variances relative to shot noise
// (vacuum = 1) everywhere inside the library; decibels appear only at the
// boundaries.  These two helpers are the boundary.

inline double db_to_linear(double level_db) {
  if (!std::isfinite(level_db)) {
    throw domain_error("decibel level must be finite");
  }
  return std::pow(10.0, level_db / 10.0);
}

inline double linear_to_db(double variance) {
  if (!std::isfinite(variance) || variance <= 0.0) {
    throw domain_error("variance must be finite and positive, got " +
                       std::to_string(variance));
  }
  return 10.0 * std::log10(variance);
}

}  // namespace sqzkit
