#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "sqzkit/decibel.hpp"
#include "sqzkit/detail/text.hpp"
#include "sqzkit/errors.hpp"
#include "sqzkit/quadrature.hpp"
#include "sqzkit/random.hpp"

namespace sqzkit {

enum class TraceLabel { shot, squeezed, anti_squeezed, scan };

inline std::string_view to_string(TraceLabel label) {
  switch (label) {
    case TraceLabel::shot: return "shot";
    case TraceLabel::squeezed: return "squeezed";
    case TraceLabel::anti_squeezed: return "anti_squeezed";
    case TraceLabel::scan: return "scan";
  }
  throw domain_error("unknown trace label");
}

inline TraceLabel trace_label_from_string(std::string_view name) {
  if (name == "shot") return TraceLabel::shot;
  if (name == "squeezed") return TraceLabel::squeezed;
  if (name == "anti_squeezed") return TraceLabel::anti_squeezed;
  if (name == "scan") return TraceLabel::scan;
  throw domain_error("unknown trace label '" + std::string(name) + "'");
}

// Zero-span measurement settings of the analyzer plus the noise seed.
struct ZeroSpanConfig {
  double center_frequency_hz = 1e6;  // informational, not used numerically
  double resolution_bandwidth_hz = 30e3;
  double video_bandwidth_hz = 300.0;
  double sweep_duration_s = 0.1;
  std::size_t points = 1000;
  std::size_t averages = 20;
  std::uint64_t seed = 0;

  void validate() const {
    if (!std::isfinite(center_frequency_hz) || center_frequency_hz < 0.0) {
      throw domain_error("center frequency must be non-negative");
    }
    if (!std::isfinite(resolution_bandwidth_hz) || resolution_bandwidth_hz <= 0.0) {
      throw domain_error("resolution bandwidth must be positive");
    }
    if (!std::isfinite(video_bandwidth_hz) || video_bandwidth_hz <= 0.0) {
      throw domain_error("video bandwidth must be positive");
    }
    if (video_bandwidth_hz > resolution_bandwidth_hz) {
      throw domain_error("video bandwidth must not exceed the resolution bandwidth");
    }
    if (!std::isfinite(sweep_duration_s) || sweep_duration_s <= 0.0) {
      throw domain_error("sweep duration must be positive");
    }
    if (points < 2) {
      throw domain_error("a trace needs at least 2 points");
    }
    if (averages < 1) {
      throw domain_error("averages must be at least 1");
    }
  }
};

// Per-sample fluctuation of the displayed level, in dB.  Standard averaged
// detector approximation: the video filter leaves N_eff = RBW/(2 VBW)
// independent looks per sample, trace averaging multiplies the count, and the
// relative power fluctuation 1/sqrt(N) maps to dB via 10/ln10.  A modeling
// choice for realistic-looking traces, not a physical claim about any
// particular instrument.
inline double detector_sigma_db(double resolution_bandwidth_hz,
                                double video_bandwidth_hz, std::size_t averages) {
  const double looks =
      resolution_bandwidth_hz / (2.0 * video_bandwidth_hz) * static_cast<double>(averages);
  return (10.0 / std::numbers::ln10) / std::sqrt(looks);
}

inline double detector_sigma_db(const ZeroSpanConfig& cfg) {
  cfg.validate();
  return detector_sigma_db(cfg.resolution_bandwidth_hz, cfg.video_bandwidth_hz,
                           cfg.averages);
}

// One synthesized zero-span record: level versus time at fixed frequency.
// Sampling is uniform, t_i = i * sweep_duration / points.
struct Trace {
  TraceLabel label = TraceLabel::shot;
  std::vector<double> time_s;
  std::vector<double> level_db;
};

// Trace with the LO phase held, so the mean level is constant and only the
// detector fluctuation remains.  Same seed, settings, and level give a
// bit-identical trace.
inline Trace synth_locked_trace(double mean_level_db, const ZeroSpanConfig& cfg,
                                TraceLabel label = TraceLabel::squeezed) {
  cfg.validate();
  if (!std::isfinite(mean_level_db)) {
    throw domain_error("mean level must be finite");
  }
  const double sigma = detector_sigma_db(cfg);
  const double dt = cfg.sweep_duration_s / static_cast<double>(cfg.points);
  GaussianStream noise(cfg.seed);
  Trace trace;
  trace.label = label;
  trace.time_s.reserve(cfg.points);
  trace.level_db.reserve(cfg.points);
  for (std::size_t i = 0; i < cfg.points; ++i) {
    trace.time_s.push_back(static_cast<double>(i) * dt);
    trace.level_db.push_back(mean_level_db + sigma * noise.next());
  }
  return trace;
}

// Trace with the LO phase ramped linearly, theta(t) = pi * t / scan_period,
// so the mean sweeps between the squeezed and anti-squeezed levels of the
// given pair.  One scan period covers a half turn of the quadrature ellipse;
// averaging is off (averages = 1) because the display is not stationary.
inline Trace synth_scan_trace(const QuadraturePair& observed, double scan_period_s,
                              const ZeroSpanConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(scan_period_s) || scan_period_s <= 0.0) {
    throw domain_error("scan period must be positive");
  }
  const double sigma = detector_sigma_db(cfg.resolution_bandwidth_hz,
                                         cfg.video_bandwidth_hz, 1);
  const double dt = cfg.sweep_duration_s / static_cast<double>(cfg.points);
  GaussianStream noise(cfg.seed);
  Trace trace;
  trace.label = TraceLabel::scan;
  trace.time_s.reserve(cfg.points);
  trace.level_db.reserve(cfg.points);
  for (std::size_t i = 0; i < cfg.points; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double phase = std::numbers::pi * t / scan_period_s;
    const double cos_phase = std::cos(phase);
    const double sin_phase = std::sin(phase);
    const double variance = observed.squeezed() * cos_phase * cos_phase +
                            observed.anti_squeezed() * sin_phase * sin_phase;
    trace.time_s.push_back(t);
    trace.level_db.push_back(linear_to_db(variance) + sigma * noise.next());
  }
  return trace;
}

inline void write_trace_csv(const Trace& trace, std::ostream& out) {
  if (trace.time_s.size() != trace.level_db.size()) {
    throw domain_error("trace time and level arrays differ in length");
  }
  out << "time_s,level_db,label\n";
  const std::string_view label = to_string(trace.label);
  for (std::size_t i = 0; i < trace.time_s.size(); ++i) {
    out << detail::format_sig9(trace.time_s[i]) << ','
        << detail::format_sig9(trace.level_db[i]) << ',' << label << '\n';
  }
}

inline void write_trace_csv(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  }
  write_trace_csv(trace, out);
  if (!out) {
    throw std::runtime_error("write to '" + path.string() + "' failed");
  }
}

inline Trace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw parse_error("empty trace file", 0);
  }
  if (detail::trim(line) != "time_s,level_db,label") {
    throw parse_error("expected header 'time_s,level_db,label'", 1);
  }
  Trace trace;
  bool have_label = false;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (detail::trim(line).empty()) {
      throw parse_error("blank line inside trace data", line_number);
    }
    const auto fields = detail::split(line, ',');
    if (fields.size() != 3) {
      throw parse_error("expected 3 columns, got " + std::to_string(fields.size()),
                        line_number);
    }
    const double t = detail::parse_number(fields[0], line_number);
    const double level = detail::parse_number(fields[1], line_number);
    TraceLabel label;
    try {
      label = trace_label_from_string(detail::trim(fields[2]));
    } catch (const domain_error& e) {
      throw parse_error(e.what(), line_number);
    }
    if (!have_label) {
      trace.label = label;
      have_label = true;
    } else if (label != trace.label) {
      throw parse_error("label changes mid-trace", line_number);
    }
    trace.time_s.push_back(t);
    trace.level_db.push_back(level);
  }
  if (trace.time_s.empty()) {
    throw parse_error("trace file has a header but no data rows", 0);
  }
  // The contract is a uniformly sampled record; tolerate only the rounding
  // introduced by 9-significant-digit serialization.
  if (trace.time_s.size() >= 2) {
    const double dt = trace.time_s[1] - trace.time_s[0];
    if (!(dt > 0.0)) {
      throw parse_error("time must be strictly increasing", 3);
    }
    for (std::size_t i = 2; i < trace.time_s.size(); ++i) {
      const double step = trace.time_s[i] - trace.time_s[i - 1];
      if (!(step > 0.0) || std::abs(step - dt) > 1e-3 * dt) {
        throw parse_error("time samples are not uniformly spaced", i + 2);
      }
    }
  }
  return trace;
}

inline Trace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw parse_error("cannot open '" + path.string() + "'", 0);
  }
  return read_trace_csv(in);
}

}  // namespace sqzkit
