#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sqzkit/config.hpp"
#include "sqzkit/decibel.hpp"
#include "sqzkit/errors.hpp"
#include "sqzkit/estimation.hpp"
#include "sqzkit/opo_model.hpp"
#include "sqzkit/qi_metrics.hpp"
#include "sqzkit/trace_synth.hpp"

namespace sqzkit {
namespace detail {

// Report values: 6 significant digits keeps the lines readable while staying
// well inside every tolerance the toolkit works to.
inline std::string num6(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

inline double degrees_to_radians(double degrees) {
  return degrees * std::numbers::pi / 180.0;
}

inline double radians_to_degrees(double radians) {
  return radians * 180.0 / std::numbers::pi;
}

struct PredictOpts {
  std::string config_path;
  double pump_mw = 0.0;
  std::optional<double> theta_deg;
  bool no_circuit_noise = false;
};

inline int run_predict(const PredictOpts& o, std::ostream& out) {
  ExperimentConfig config = load_config(std::filesystem::path(o.config_path));
  if (o.theta_deg) {
    config.detection.phase_jitter_rad = degrees_to_radians(*o.theta_deg);
    config.detection.validate();
  }
  const OperatingPoint op{o.pump_mw * 1e-3, config.operating_point.sideband_hz};
  const PredictionStages stages = predict_stages(config.cavity, config.detection, op);
  const QuadraturePair& final_pair =
      o.no_circuit_noise ? stages.jittered : stages.observed;
  out << "threshold_mw: " << num6(stages.threshold_w * 1e3) << '\n'
      << "pump_ratio: " << num6(stages.pump_ratio) << '\n'
      << "omega_over_gamma: " << num6(stages.omega_norm) << '\n'
      << "eta_tot: " << num6(stages.eta_tot) << '\n'
      << "ideal_squeezed_db: " << num6(stages.ideal.squeezed_db()) << '\n'
      << "ideal_antisqueezed_db: " << num6(stages.ideal.anti_squeezed_db()) << '\n'
      << "jittered_squeezed_db: " << num6(stages.jittered.squeezed_db()) << '\n'
      << "jittered_antisqueezed_db: " << num6(stages.jittered.anti_squeezed_db())
      << '\n'
      << "observed_squeezed_db: " << num6(final_pair.squeezed_db()) << '\n'
      << "observed_antisqueezed_db: " << num6(final_pair.anti_squeezed_db()) << '\n'
      << "purity: " << num6(purity(final_pair)) << '\n';
  return 0;
}

struct SweepOpts {
  std::string config_path;
  std::string range;
  std::string out_path;
};

// START:STOP:STEP in milliwatts, STOP inclusive.
inline std::vector<double> parse_pump_range_w(const std::string& range) {
  const auto fields = split(range, ':');
  if (fields.size() != 3) {
    throw parse_error("expected range START:STOP:STEP, got '" + range + "'", 0);
  }
  const double start_mw = parse_number(fields[0], 0);
  const double stop_mw = parse_number(fields[1], 0);
  const double step_mw = parse_number(fields[2], 0);
  if (!(step_mw > 0.0)) {
    throw parse_error("range step must be positive", 0);
  }
  if (stop_mw < start_mw) {
    throw parse_error("range stop must not be below start", 0);
  }
  const auto count =
      static_cast<std::size_t>((stop_mw - start_mw) / step_mw + 1e-9) + 1;
  std::vector<double> powers_w;
  powers_w.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    powers_w.push_back((start_mw + static_cast<double>(i) * step_mw) * 1e-3);
  }
  return powers_w;
}

inline int run_sweep(const SweepOpts& o, std::ostream&) {
  const ExperimentConfig config = load_config(std::filesystem::path(o.config_path));
  const std::vector<double> powers_w = parse_pump_range_w(o.range);
  const std::vector<SweepRow> rows = sweep(config.cavity, config.detection, powers_w,
                                           config.operating_point.sideband_hz);
  std::ofstream file(o.out_path, std::ios::binary);
  if (!file) {
    throw std::runtime_error("cannot open '" + o.out_path + "' for writing");
  }
  file << "pump_mw,squeezed_db,antisqueezed_db,purity\n";
  for (const SweepRow& row : rows) {
    file << format_sig9(row.pump_power_w * 1e3) << ',' << format_sig9(row.squeezed_db)
         << ',' << format_sig9(row.anti_squeezed_db) << ',' << format_sig9(row.purity)
         << '\n';
  }
  if (!file) {
    throw std::runtime_error("write to '" + o.out_path + "' failed");
  }
  return 0;
}

struct MetricsOpts {
  double squeezed_db = 0.0;
  double anti_squeezed_db = 0.0;
  int hops = 1;
  double mean_photon_number = 1.0;
};

inline int run_metrics(const MetricsOpts& o, std::ostream& out) {
  if (o.anti_squeezed_db < 0.0) {
    throw domain_error("anti-squeezed level must be >= 0 dB re shot noise, got " +
                       std::to_string(o.anti_squeezed_db));
  }
  const SqueezingParameter sq = squeezing_parameter(o.squeezed_db);
  const QuadraturePair pair(db_to_linear(o.squeezed_db),
                            db_to_linear(o.anti_squeezed_db));
  const double capacity_nats = dense_coding_capacity(o.mean_photon_number, sq);
  const double state_purity = purity(pair);
  out << "r: " << num6(sq.r) << '\n';
  for (int hops = 1; hops <= o.hops; ++hops) {
    out << "fidelity_" << hops << ": " << num6(teleport_fidelity(hops, sq)) << '\n';
  }
  out << "mean_photon_number: " << num6(o.mean_photon_number) << '\n'
      << "capacity_nats: " << num6(capacity_nats) << '\n'
      << "capacity_bits: " << num6(capacity_nats / std::numbers::ln2) << '\n'
      << "purity: " << num6(state_purity) << '\n'
      << "holevo_criterion_db: " << num6(holevo_criterion_db) << '\n'
      << "holevo: " << (beats_holevo(o.squeezed_db) ? "exceeded" : "not_exceeded")
      << '\n';
  if (state_purity < 1.0) {
    out << "purity_advisory: capacity comparison presumes a purer state "
           "(purity < 1)\n";
  }
  return 0;
}

struct TraceOpts {
  std::string config_path;
  std::string mode;
  std::string out_path;
  std::uint64_t seed = 0;
  double rbw_hz = 30e3;
  double vbw_hz = 300.0;
  std::size_t averages = 20;
  std::size_t points = 1000;
  double duration_s = 0.1;
  double scan_period_s = 0.05;
};

inline int run_trace(const TraceOpts& o, std::ostream&) {
  const ExperimentConfig config = load_config(std::filesystem::path(o.config_path));
  ZeroSpanConfig cfg;
  cfg.center_frequency_hz = config.operating_point.sideband_hz;
  cfg.resolution_bandwidth_hz = o.rbw_hz;
  cfg.video_bandwidth_hz = o.vbw_hz;
  cfg.sweep_duration_s = o.duration_s;
  cfg.points = o.points;
  cfg.averages = o.averages;
  cfg.seed = o.seed;
  cfg.validate();

  Trace trace;
  if (o.mode == "shot") {
    trace = synth_locked_trace(0.0, cfg, TraceLabel::shot);
  } else {
    const QuadraturePair observed =
        predict_observed(config.cavity, config.detection, config.operating_point);
    if (o.mode == "squeezed") {
      trace = synth_locked_trace(observed.squeezed_db(), cfg, TraceLabel::squeezed);
    } else if (o.mode == "antisqueezed") {
      trace = synth_locked_trace(observed.anti_squeezed_db(), cfg,
                                 TraceLabel::anti_squeezed);
    } else {
      trace = synth_scan_trace(observed, o.scan_period_s, cfg);
    }
  }
  write_trace_csv(trace, std::filesystem::path(o.out_path));
  return 0;
}

struct FitOpts {
  std::string data_path;
  std::string config_path;
  std::optional<double> init_threshold_mw;
  double init_eta = 0.9;
  double init_theta_deg = 2.0;
  std::size_t bootstrap_replicates = 0;
  std::string bootstrap_out_path;
  std::uint64_t seed = 1234;
  bool strict = false;
};

inline int run_fit(const FitOpts& o, std::ostream& out) {
  const ExperimentConfig config = load_config(std::filesystem::path(o.config_path));
  const MeasurementSet data = load_measurements(std::filesystem::path(o.data_path));
  const double sideband_hz = config.operating_point.sideband_hz;
  const double circuit_db = config.detection.circuit_noise_db;

  double max_pump_w = 0.0;
  for (const MeasurementRow& row : data) {
    max_pump_w = std::max(max_pump_w, row.pump_power_w);
  }
  const FitOptions options;
  FitParams init;
  init.threshold_w = o.init_threshold_mw
                         ? *o.init_threshold_mw * 1e-3
                         : std::min(2.0 * max_pump_w, options.threshold_max_w);
  init.eta_tot = o.init_eta;
  init.theta_rad = degrees_to_radians(o.init_theta_deg);

  const FitResult result =
      fit(data, config.cavity, sideband_hz, circuit_db, init, options);
  out << "converged: " << (result.converged ? "true" : "false") << '\n'
      << "iterations: " << result.iterations << '\n'
      << "residual_norm: " << num6(result.residual_norm) << '\n'
      << "threshold_mw: " << num6(result.threshold_w * 1e3) << '\n'
      << "eta_tot: " << num6(result.eta_tot) << '\n'
      << "theta_deg: " << num6(radians_to_degrees(result.theta_rad)) << '\n'
      << "nonlinear_coeff_per_w: "
      << num6(nonlinear_coeff_from_threshold(config.cavity, result.threshold_w))
      << '\n';

  if (o.bootstrap_replicates > 0) {
    if (!result.converged) {
      out << "bootstrap: skipped (fit did not converge)\n";
    } else {
      const BootstrapResult boot =
          bootstrap_fit(data, config.cavity, sideband_hz, circuit_db, result,
                        o.bootstrap_replicates, o.seed, options);
      out << "bootstrap_replicates: " << boot.replicates.size() << '\n'
          << "threshold_mw_lo95: " << num6(boot.threshold_w.lower * 1e3) << '\n'
          << "threshold_mw_hi95: " << num6(boot.threshold_w.upper * 1e3) << '\n'
          << "eta_tot_lo95: " << num6(boot.eta_tot.lower) << '\n'
          << "eta_tot_hi95: " << num6(boot.eta_tot.upper) << '\n'
          << "theta_deg_lo95: " << num6(radians_to_degrees(boot.theta_rad.lower))
          << '\n'
          << "theta_deg_hi95: " << num6(radians_to_degrees(boot.theta_rad.upper))
          << '\n';
      if (!o.bootstrap_out_path.empty()) {
        std::ofstream file(o.bootstrap_out_path, std::ios::binary);
        if (!file) {
          throw std::runtime_error("cannot open '" + o.bootstrap_out_path +
                                   "' for writing");
        }
        file << "replicate,threshold_mw,eta_tot,theta_deg\n";
        for (std::size_t i = 0; i < boot.replicates.size(); ++i) {
          const FitResult& r = boot.replicates[i];
          file << i << ',' << format_sig9(r.threshold_w * 1e3) << ','
               << format_sig9(r.eta_tot) << ','
               << format_sig9(radians_to_degrees(r.theta_rad)) << '\n';
        }
        if (!file) {
          throw std::runtime_error("write to '" + o.bootstrap_out_path + "' failed");
        }
      }
    }
  }
  if (!result.converged && o.strict) {
    return 1;
  }
  return 0;
}

}  // namespace detail

// Full command-line front end, parameterized on streams so it is testable
// in-process.  Arguments are argv[1..] in natural order.  Exit codes: 0 on
// success, 1 on domain errors (and non-convergence under --strict), 2 on
// config, CSV, or usage errors.
inline int run_cli(std::vector<std::string> args, std::ostream& out,
                   std::ostream& err) {
  CLI::App app{"Sub-threshold optical parametric oscillator squeezing toolkit: "
               "forward model, synthetic analyzer traces, and parameter fits"};
  app.require_subcommand(1);

  detail::PredictOpts predict_opts;
  CLI::App* predict = app.add_subcommand(
      "predict", "Predict quadrature noise levels at one pump power");
  predict->add_option("--config", predict_opts.config_path, "Experiment config file")
      ->required();
  predict->add_option("--pump-mw", predict_opts.pump_mw, "Pump power in mW")
      ->required();
  predict->add_option("--theta-deg", predict_opts.theta_deg,
                      "Override the config's LO phase jitter (degrees)");
  predict->add_flag("--no-circuit-noise", predict_opts.no_circuit_noise,
                    "Report levels without the electronics floor");

  detail::SweepOpts sweep_opts;
  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "Tabulate predicted levels over a pump power range");
  sweep_cmd->add_option("--config", sweep_opts.config_path, "Experiment config file")
      ->required();
  sweep_cmd
      ->add_option("--pump-mw-range", sweep_opts.range,
                   "Pump powers START:STOP:STEP in mW, STOP inclusive")
      ->required();
  sweep_cmd->add_option("--out", sweep_opts.out_path, "Output CSV path")->required();

  detail::MetricsOpts metrics_opts;
  CLI::App* metrics = app.add_subcommand(
      "metrics", "Quantum-information figures of merit for a measured pair");
  metrics
      ->add_option("--squeezed-db", metrics_opts.squeezed_db,
                   "Squeezed level, dB re shot noise (<= 0)")
      ->required();
  metrics
      ->add_option("--antisqueezed-db", metrics_opts.anti_squeezed_db,
                   "Anti-squeezed level, dB re shot noise (>= 0)")
      ->required();
  metrics->add_option("--hops", metrics_opts.hops,
                      "Report teleportation fidelity for 1..N cascaded hops");
  metrics->add_option("--ns", metrics_opts.mean_photon_number,
                      "Mean photon number spent on dense-coding modulation");

  detail::TraceOpts trace_opts;
  CLI::App* trace = app.add_subcommand(
      "trace", "Synthesize a zero-span analyzer trace as CSV");
  trace->add_option("--config", trace_opts.config_path, "Experiment config file")
      ->required();
  trace
      ->add_option("--mode", trace_opts.mode,
                   "What the LO phase does during the record")
      ->required()
      ->check(CLI::IsMember({"shot", "squeezed", "antisqueezed", "scan"}));
  trace->add_option("--out", trace_opts.out_path, "Output CSV path")->required();
  trace->add_option("--seed", trace_opts.seed, "Noise seed (default 0)");
  trace->add_option("--rbw-hz", trace_opts.rbw_hz, "Resolution bandwidth (Hz)");
  trace->add_option("--vbw-hz", trace_opts.vbw_hz, "Video bandwidth (Hz)");
  trace->add_option("--averages", trace_opts.averages,
                    "Trace averages (locked modes; scans always use 1)");
  trace->add_option("--points", trace_opts.points, "Samples per trace");
  trace->add_option("--duration-s", trace_opts.duration_s, "Sweep duration (s)");
  trace->add_option("--scan-period-s", trace_opts.scan_period_s,
                    "Half-turn period of the scanned LO phase (s)");

  detail::FitOpts fit_opts;
  CLI::App* fit_cmd = app.add_subcommand(
      "fit", "Estimate threshold, efficiency, and jitter from measured levels");
  fit_cmd->add_option("--data", fit_opts.data_path, "Measurement CSV")->required();
  fit_cmd->add_option("--config", fit_opts.config_path, "Experiment config file")
      ->required();
  fit_cmd->add_option("--init-pth-mw", fit_opts.init_threshold_mw,
                      "Initial threshold guess in mW (default: twice the largest "
                      "pump in the data)");
  fit_cmd->add_option("--init-eta", fit_opts.init_eta,
                      "Initial total-efficiency guess");
  fit_cmd->add_option("--init-theta-deg", fit_opts.init_theta_deg,
                      "Initial jitter guess (degrees)");
  fit_cmd->add_option("--bootstrap", fit_opts.bootstrap_replicates,
                      "Residual-resampling replicates for 95% intervals (0 = off)");
  fit_cmd->add_option("--bootstrap-out", fit_opts.bootstrap_out_path,
                      "Write per-replicate parameters to this CSV");
  fit_cmd->add_option("--seed", fit_opts.seed, "Bootstrap master seed");
  fit_cmd->add_flag("--strict", fit_opts.strict,
                    "Exit nonzero when the fit does not converge");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (predict->parsed()) return detail::run_predict(predict_opts, out);
    if (sweep_cmd->parsed()) return detail::run_sweep(sweep_opts, out);
    if (metrics->parsed()) return detail::run_metrics(metrics_opts, out);
    if (trace->parsed()) return detail::run_trace(trace_opts, out);
    if (fit_cmd->parsed()) return detail::run_fit(fit_opts, out);
  } catch (const parse_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const domain_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace sqzkit
