#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numbers>
#include <string>
#include <vector>

#include "sqzkit/detail/text.hpp"
#include "sqzkit/errors.hpp"
#include "sqzkit/opo_model.hpp"
#include "sqzkit/random.hpp"

namespace sqzkit {

// One calibrated observation: both quadrature levels at one pump power, with
// the 1-sigma level uncertainty used to weight the fit.
struct MeasurementRow {
  double pump_power_w;
  double squeezed_db;
  double anti_squeezed_db;
  double sigma_db;
};

using MeasurementSet = std::vector<MeasurementRow>;

inline constexpr double default_sigma_db = 0.2;

// Reads `pump_mw,squeezed_db,antisqueezed_db[,sigma_db]` rows.  Powers arrive
// in milliwatts and are stored in watts; a missing sigma column applies the
// default uncertainty to every row.
inline MeasurementSet load_measurements(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw parse_error("empty measurement file", 0);
  }
  const std::string_view header = detail::trim(line);
  bool has_sigma = false;
  if (header == "pump_mw,squeezed_db,antisqueezed_db,sigma_db") {
    has_sigma = true;
  } else if (header != "pump_mw,squeezed_db,antisqueezed_db") {
    throw parse_error(
        "expected header 'pump_mw,squeezed_db,antisqueezed_db[,sigma_db]'", 1);
  }
  const std::size_t expected_fields = has_sigma ? 4 : 3;
  MeasurementSet rows;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (detail::trim(line).empty()) {
      throw parse_error("blank line inside measurement data", line_number);
    }
    const auto fields = detail::split(line, ',');
    if (fields.size() != expected_fields) {
      throw parse_error("expected " + std::to_string(expected_fields) +
                            " columns, got " + std::to_string(fields.size()),
                        line_number);
    }
    MeasurementRow row;
    row.pump_power_w = detail::parse_number(fields[0], line_number) * 1e-3;
    row.squeezed_db = detail::parse_number(fields[1], line_number);
    row.anti_squeezed_db = detail::parse_number(fields[2], line_number);
    row.sigma_db =
        has_sigma ? detail::parse_number(fields[3], line_number) : default_sigma_db;
    if (!(row.pump_power_w > 0.0)) {
      throw parse_error("pump power must be positive", line_number);
    }
    if (row.squeezed_db > 0.0) {
      throw parse_error("squeezed level must be <= 0 dB re shot noise", line_number);
    }
    if (row.anti_squeezed_db < 0.0) {
      throw parse_error("anti-squeezed level must be >= 0 dB re shot noise",
                        line_number);
    }
    if (!(row.sigma_db > 0.0)) {
      throw parse_error("sigma must be positive", line_number);
    }
    rows.push_back(row);
  }
  if (rows.empty()) {
    throw parse_error("measurement file has a header but no data rows", 0);
  }
  return rows;
}

inline MeasurementSet load_measurements(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw parse_error("cannot open '" + path.string() + "'", 0);
  }
  return load_measurements(in);
}

// The three quantities the fit adjusts.  Cavity geometry stays fixed: the
// threshold is the identifiable drive-strength parameter, the composed
// efficiency absorbs every loss after the cavity, and the jitter angle
// absorbs the lock quality.
struct FitParams {
  double threshold_w;
  double eta_tot;
  double theta_rad;
};

struct FitOptions {
  std::size_t max_iterations = 2000;
  // Stop when the objective spread across the simplex falls below this.
  double objective_spread_tol = 1e-10;
  // Box constraints; the lower threshold bound is the largest observed pump.
  double threshold_max_w = 10.0;
  double eta_tot_min = 0.01;
  // Initial simplex displacements per parameter.
  double step_threshold_w = 0.0125;
  double step_eta = 0.04;
  double step_theta_rad = std::numbers::pi / 1800.0;
};

struct FitResult {
  double threshold_w = 0.0;
  double eta_tot = 0.0;
  double theta_rad = 0.0;
  double residual_norm = 0.0;  // sum of squared sigma-scaled residuals
  std::size_t iterations = 0;
  bool converged = false;
};

// Finite stand-in residual for a trial point whose model is invalid (a row at
// or above the candidate threshold, or parameters outside the box).  Large
// enough to dominate any real residual, finite so the simplex can retreat.
inline constexpr double fit_penalty_residual = 1e3;

// Sigma-scaled (predicted - measured) residuals, two per row, squeezed first.
// The model is the full forward pipeline with the candidate threshold and
// efficiency in place of the cavity-derived ones.
inline std::vector<double> model_residuals(const FitParams& params,
                                           const MeasurementSet& data,
                                           const CavityParams& cavity,
                                           double sideband_hz, double circuit_db) {
  cavity.validate();
  if (!std::isfinite(sideband_hz) || sideband_hz <= 0.0) {
    throw domain_error("sideband frequency must be positive");
  }
  std::vector<double> residuals;
  residuals.reserve(2 * data.size());
  for (const MeasurementRow& row : data) {
    if (row.pump_power_w >= params.threshold_w) {
      residuals.push_back(fit_penalty_residual);
      residuals.push_back(fit_penalty_residual);
      continue;
    }
    const double x = pump_ratio(row.pump_power_w, params.threshold_w);
    const double gamma = cavity_decay_rate(cavity, row.pump_power_w);
    const double omega_norm = 2.0 * std::numbers::pi * sideband_hz / gamma;
    const QuadraturePair ideal = ideal_spectra(x, omega_norm, params.eta_tot);
    const QuadraturePair jittered = apply_phase_jitter(ideal, params.theta_rad);
    const QuadraturePair observed = add_circuit_noise(jittered, circuit_db);
    residuals.push_back((observed.squeezed_db() - row.squeezed_db) / row.sigma_db);
    residuals.push_back((observed.anti_squeezed_db() - row.anti_squeezed_db) /
                        row.sigma_db);
  }
  return residuals;
}

namespace detail {

inline bool fit_params_in_bounds(const FitParams& p, double max_pump_w,
                                 const FitOptions& options) {
  return p.threshold_w > max_pump_w && p.threshold_w <= options.threshold_max_w &&
         p.eta_tot > options.eta_tot_min && p.eta_tot <= 1.0 &&
         p.theta_rad >= 0.0 && p.theta_rad < std::numbers::pi / 4.0;
}

// Sum of squared residuals, with the whole-vector penalty plateau for
// out-of-bounds trial points (same value an all-rows-above-threshold vector
// would produce, so the two invalid regions join up smoothly).
inline double fit_objective(const FitParams& p, const MeasurementSet& data,
                            const CavityParams& cavity, double sideband_hz,
                            double circuit_db, double max_pump_w,
                            const FitOptions& options) {
  if (!fit_params_in_bounds(p, max_pump_w, options)) {
    return 2.0 * static_cast<double>(data.size()) * fit_penalty_residual *
           fit_penalty_residual;
  }
  double sum = 0.0;
  for (const double r : model_residuals(p, data, cavity, sideband_hz, circuit_db)) {
    sum += r * r;
  }
  return sum;
}

}  // namespace detail

// Weighted least squares via the Nelder-Mead simplex (reflection 1, expansion
// 2, contraction 0.5, shrink 0.5).  Derivative-free, deterministic, and
// entirely adequate for a 3-parameter problem.  Non-convergence within the
// iteration budget is reported through the converged flag, not an exception.
inline FitResult fit(const MeasurementSet& data, const CavityParams& cavity,
                     double sideband_hz, double circuit_db, const FitParams& init,
                     const FitOptions& options = {}) {
  cavity.validate();
  if (!std::isfinite(circuit_db) || circuit_db >= 0.0) {
    throw domain_error("circuit noise level must be negative (dB re shot noise)");
  }
  if (data.empty()) {
    throw domain_error("measurement set is empty");
  }
  double max_pump_w = 0.0;
  for (const MeasurementRow& row : data) {
    max_pump_w = std::max(max_pump_w, row.pump_power_w);
  }
  if (!detail::fit_params_in_bounds(init, max_pump_w, options)) {
    throw domain_error(
        "initial fit parameters violate the bounds: threshold in (max pump, " +
        std::to_string(options.threshold_max_w) + "] W, efficiency in (" +
        std::to_string(options.eta_tot_min) + ", 1], jitter in [0, pi/4)");
  }

  auto objective = [&](const std::array<double, 3>& v) {
    return detail::fit_objective({v[0], v[1], v[2]}, data, cavity, sideband_hz,
                                 circuit_db, max_pump_w, options);
  };

  auto make_result = [&](const std::array<double, 3>& v, double value,
                         std::size_t iterations, bool converged) {
    FitResult result;
    result.threshold_w = v[0];
    result.eta_tot = v[1];
    result.theta_rad = v[2];
    result.residual_norm = value;
    result.iterations = iterations;
    // A converged result must be a usable parameter set, not a penalty
    // plateau point.
    result.converged =
        converged && detail::fit_params_in_bounds({v[0], v[1], v[2]}, max_pump_w, options);
    return result;
  };

  // Three parameters, so a 4-vertex simplex seeded along the axes.
  constexpr std::size_t n = 3;
  std::array<std::array<double, 3>, n + 1> simplex;
  simplex[0] = {init.threshold_w, init.eta_tot, init.theta_rad};
  const std::array<double, 3> steps = {options.step_threshold_w, options.step_eta,
                                       options.step_theta_rad};
  for (std::size_t i = 0; i < n; ++i) {
    simplex[i + 1] = simplex[0];
    simplex[i + 1][i] += steps[i];
  }
  std::array<double, n + 1> values;
  for (std::size_t i = 0; i <= n; ++i) {
    values[i] = objective(simplex[i]);
  }

  // Underdetermined: a 3-parameter fit needs at least 3 rows to say anything
  // about all of threshold, efficiency, and jitter at once.
  if (data.size() < 3) {
    return make_result(simplex[0], values[0], 0, false);
  }

  std::size_t iteration = 0;
  while (true) {
    // Order vertices best to worst.
    std::array<std::size_t, n + 1> order = {0, 1, 2, 3};
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const auto old_simplex = simplex;
    const auto old_values = values;
    for (std::size_t i = 0; i <= n; ++i) {
      simplex[i] = old_simplex[order[i]];
      values[i] = old_values[order[i]];
    }

    if (values[n] - values[0] < options.objective_spread_tol) {
      return make_result(simplex[0], values[0], iteration, true);
    }
    if (iteration >= options.max_iterations) {
      return make_result(simplex[0], values[0], iteration, false);
    }
    ++iteration;

    // Centroid of all vertices but the worst.
    std::array<double, 3> centroid = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        centroid[j] += simplex[i][j] / static_cast<double>(n);
      }
    }

    std::array<double, 3> reflected;
    for (std::size_t j = 0; j < 3; ++j) {
      reflected[j] = centroid[j] + (centroid[j] - simplex[n][j]);
    }
    const double reflected_value = objective(reflected);

    if (reflected_value < values[0]) {
      std::array<double, 3> expanded;
      for (std::size_t j = 0; j < 3; ++j) {
        expanded[j] = centroid[j] + 2.0 * (centroid[j] - simplex[n][j]);
      }
      const double expanded_value = objective(expanded);
      if (expanded_value < reflected_value) {
        simplex[n] = expanded;
        values[n] = expanded_value;
      } else {
        simplex[n] = reflected;
        values[n] = reflected_value;
      }
    } else if (reflected_value < values[n - 1]) {
      simplex[n] = reflected;
      values[n] = reflected_value;
    } else {
      // Contract outside toward the reflected point when it improved on the
      // worst vertex, inside toward the worst vertex otherwise.
      std::array<double, 3> contracted;
      if (reflected_value < values[n]) {
        for (std::size_t j = 0; j < 3; ++j) {
          contracted[j] = centroid[j] + 0.5 * (reflected[j] - centroid[j]);
        }
      } else {
        for (std::size_t j = 0; j < 3; ++j) {
          contracted[j] = centroid[j] + 0.5 * (simplex[n][j] - centroid[j]);
        }
      }
      const double contracted_value = objective(contracted);
      if (contracted_value < std::min(reflected_value, values[n])) {
        simplex[n] = contracted;
        values[n] = contracted_value;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t j = 0; j < 3; ++j) {
            simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
          }
          values[i] = objective(simplex[i]);
        }
      }
    }
  }
}

// Lock-error calibration: the rms error-signal voltage divided by the
// discriminator slope is the rms phase excursion.
inline double jitter_from_error_rms(double rms_error_v, double slope_v_per_rad) {
  if (!std::isfinite(slope_v_per_rad) || slope_v_per_rad <= 0.0) {
    throw domain_error("error-signal slope must be positive");
  }
  if (!std::isfinite(rms_error_v) || rms_error_v < 0.0) {
    throw domain_error("rms error must be non-negative");
  }
  return rms_error_v / slope_v_per_rad;
}

struct BootstrapInterval {
  double lower;
  double upper;
};

struct BootstrapResult {
  std::vector<FitResult> replicates;  // in replicate order
  BootstrapInterval threshold_w;      // central 95% of the replicate spread
  BootstrapInterval eta_tot;
  BootstrapInterval theta_rad;
};

namespace detail {

inline double percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double position = q * static_cast<double>(values.size() - 1);
  const auto below = static_cast<std::size_t>(position);
  if (below + 1 >= values.size()) {
    return values.back();
  }
  const double fraction = position - static_cast<double>(below);
  return values[below] + fraction * (values[below + 1] - values[below]);
}

}  // namespace detail

// Residual-resampling bootstrap around a converged fit.  Each replicate
// rebuilds the dataset from the fitted predictions plus resampled scaled
// residuals, refits from the base parameters, and the replicate parameter
// spread yields central 95% intervals.  Replicate k draws from its own
// generator seeded by derive_seed(master_seed, k), so the result is
// reproducible and independent of evaluation order.
inline BootstrapResult bootstrap_fit(const MeasurementSet& data,
                                     const CavityParams& cavity, double sideband_hz,
                                     double circuit_db, const FitResult& base,
                                     std::size_t replicate_count,
                                     std::uint64_t master_seed,
                                     const FitOptions& options = {}) {
  if (!base.converged) {
    throw domain_error("bootstrap needs a converged base fit");
  }
  if (replicate_count < 2) {
    throw domain_error("bootstrap needs at least 2 replicates");
  }
  const FitParams fitted = {base.threshold_w, base.eta_tot, base.theta_rad};
  const std::vector<double> fitted_residuals =
      model_residuals(fitted, data, cavity, sideband_hz, circuit_db);
  // measured = predicted + sigma * scaled_residual, so the pool to resample
  // is measured-minus-predicted in sigma units.
  std::vector<double> pool;
  pool.reserve(fitted_residuals.size());
  for (const double r : fitted_residuals) {
    pool.push_back(-r);
  }

  BootstrapResult result;
  result.replicates.reserve(replicate_count);
  for (std::size_t rep = 0; rep < replicate_count; ++rep) {
    std::mt19937_64 engine(derive_seed(master_seed, rep));
    // Modulo draw: the bias is ~pool_size/2^64, irrelevant here, and the
    // mapping stays identical across platforms unlike the std distributions.
    auto draw = [&]() { return pool[engine() % pool.size()]; };
    MeasurementSet replicate_data = data;
    for (MeasurementRow& row : replicate_data) {
      const FitParams p = fitted;
      const double x = pump_ratio(row.pump_power_w, p.threshold_w);
      const double gamma = cavity_decay_rate(cavity, row.pump_power_w);
      const double omega_norm = 2.0 * std::numbers::pi * sideband_hz / gamma;
      const QuadraturePair observed = add_circuit_noise(
          apply_phase_jitter(ideal_spectra(x, omega_norm, p.eta_tot), p.theta_rad),
          circuit_db);
      row.squeezed_db = observed.squeezed_db() + row.sigma_db * draw();
      row.anti_squeezed_db = observed.anti_squeezed_db() + row.sigma_db * draw();
    }
    result.replicates.push_back(
        fit(replicate_data, cavity, sideband_hz, circuit_db, fitted, options));
  }

  std::vector<double> thresholds, etas, thetas;
  for (const FitResult& r : result.replicates) {
    thresholds.push_back(r.threshold_w);
    etas.push_back(r.eta_tot);
    thetas.push_back(r.theta_rad);
  }
  result.threshold_w = {detail::percentile(thresholds, 0.025),
                        detail::percentile(thresholds, 0.975)};
  result.eta_tot = {detail::percentile(etas, 0.025), detail::percentile(etas, 0.975)};
  result.theta_rad = {detail::percentile(thetas, 0.025),
                      detail::percentile(thetas, 0.975)};
  return result;
}

}  // namespace sqzkit
