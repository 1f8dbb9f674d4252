#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace sqzkit {

// Standard-normal stream with a fully pinned algorithm: mt19937_64 for the
// uniform bits and an explicit Box-Muller transform on top.  We do not use
// std::normal_distribution because its algorithm is implementation-defined,
// which would make seeded traces differ across standard libraries.  Every
// sample consumes exactly two engine draws and nothing is cached, so the
// stream is reproducible and seekable by construction.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    const double u1 = next_unit_open();
    const double u2 = next_unit_open();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  // Uniform on (0, 1]: top 53 bits, shifted up by one so log() never sees 0.
  double next_unit_open() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  std::mt19937_64 engine_;
};

// Decorrelates per-replicate seeds derived from one master seed (splitmix64
// finalizer).  Consecutive integers make poor mt19937_64 seeds directly.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace sqzkit
