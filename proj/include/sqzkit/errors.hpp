#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sqzkit {

// Physically or mathematically invalid input: negative variance, efficiency
// outside (0,1], loss so large the model breaks down, and so on.
class domain_error : public std::runtime_error {
 public:
  explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

// Pump at or above oscillation threshold.  The below-threshold spectra diverge
// there, so every entry point that takes a pump power rejects this early.
class above_threshold_error : public domain_error {
 public:
  explicit above_threshold_error(const std::string& what) : domain_error(what) {}
};

// Malformed text input (config file, CSV).  Carries the 1-based line number of
// the first offending line; 0 means the problem is not tied to one line.
class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& what, std::size_t line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what
                                    : what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace sqzkit
