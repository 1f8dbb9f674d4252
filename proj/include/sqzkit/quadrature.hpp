#pragma once

#include <cmath>
#include <string>

#include "sqzkit/decibel.hpp"
#include "sqzkit/errors.hpp"

namespace sqzkit {

// Noise variances of the two conjugate quadratures at one measurement point,
// linear relative to shot noise.  Construction enforces that both are positive
// and that the squeezed one is not above the anti-squeezed one; it does not
// enforce a Heisenberg product, because measured pairs degraded by loss or
// electronics may sit anywhere above it and synthetic test pairs below.
class QuadraturePair {
 public:
  QuadraturePair(double squeezed_variance, double anti_squeezed_variance)
      : squeezed_(squeezed_variance), anti_squeezed_(anti_squeezed_variance) {
    if (!std::isfinite(squeezed_) || !std::isfinite(anti_squeezed_) ||
        squeezed_ <= 0.0 || anti_squeezed_ <= 0.0) {
      throw domain_error("quadrature variances must be finite and positive");
    }
    if (squeezed_ > anti_squeezed_) {
      throw domain_error(
          "squeezed variance " + std::to_string(squeezed_) +
          " exceeds anti-squeezed variance " + std::to_string(anti_squeezed_));
    }
  }

  double squeezed() const { return squeezed_; }
  double anti_squeezed() const { return anti_squeezed_; }

  double squeezed_db() const { return linear_to_db(squeezed_); }
  double anti_squeezed_db() const { return linear_to_db(anti_squeezed_); }

 private:
  double squeezed_;
  double anti_squeezed_;
};

}  // namespace sqzkit
