#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "sqzkit/estimation.hpp"
#include "sqzkit/opo_model.hpp"
#include "sqzkit/random.hpp"

using namespace sqzkit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

CavityParams reference_cavity() {
  return {0.5, 0.123, 0.006, 0.023, 0.0};
}

// Frozen forward-model values for the reference cavity (see test_opo_model).
constexpr double truth_threshold_w = 0.1808804347826087;
constexpr double truth_eta = 0.925074418604651;
constexpr double truth_theta_rad = 0.06806784082777885;  // 3.9 degrees
constexpr double sideband_hz = 1e6;
constexpr double circuit_db = -18.5;

// Builds measurement rows straight from the forward pipeline, optionally with
// reproducible Gaussian level noise on top.
MeasurementSet synthesize_rows(double theta_rad, double sigma_db,
                               std::uint64_t noise_seed = 0) {
  const CavityParams cavity = reference_cavity();
  const DetectionChain detection = {0.99, 0.98, 1.0, circuit_db, theta_rad};
  GaussianStream noise(noise_seed);
  MeasurementSet rows;
  for (double pump_mw = 20.0; pump_mw <= 160.0 + 1e-9; pump_mw += 20.0) {
    const OperatingPoint op = {pump_mw * 1e-3, sideband_hz};
    const QuadraturePair observed = predict_observed(cavity, detection, op);
    MeasurementRow row;
    row.pump_power_w = op.pump_power_w;
    row.squeezed_db = observed.squeezed_db();
    row.anti_squeezed_db = observed.anti_squeezed_db();
    row.sigma_db = sigma_db;
    if (noise_seed != 0) {
      row.squeezed_db += sigma_db * noise.next();
      row.anti_squeezed_db += sigma_db * noise.next();
    }
    rows.push_back(row);
  }
  return rows;
}

FitParams default_init() {
  return {0.25, 0.9, std::numbers::pi / 90.0};  // 2 degrees of jitter
}

}  // namespace

TEST_CASE("measurement CSV without a sigma column", "[estimation][io]") {
  std::istringstream in(
      "pump_mw,squeezed_db,antisqueezed_db\n"
      "20,-3.4,3.9\n"
      "100,-9.3,14.9\n");
  const MeasurementSet rows = load_measurements(in);
  REQUIRE(rows.size() == 2);
  CHECK_THAT(rows[0].pump_power_w, WithinRel(0.02, 1e-12));
  CHECK(rows[0].squeezed_db == -3.4);
  CHECK(rows[0].anti_squeezed_db == 3.9);
  CHECK(rows[0].sigma_db == default_sigma_db);
  CHECK_THAT(rows[1].pump_power_w, WithinRel(0.1, 1e-12));
}

TEST_CASE("measurement CSV with explicit uncertainties", "[estimation][io]") {
  std::istringstream in(
      "pump_mw,squeezed_db,antisqueezed_db,sigma_db\n"
      "50,-7.26,9.42,0.15\n");
  const MeasurementSet rows = load_measurements(in);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].sigma_db == 0.15);
}

TEST_CASE("measurement CSV rejects malformed input", "[estimation][io]") {
  auto load_string = [](const std::string& text) {
    std::istringstream in(text);
    return load_measurements(in);
  };
  auto expect_line = [&](const std::string& text, std::size_t line) {
    try {
      load_string(text);
      FAIL("expected parse_error for: " << text);
    } catch (const parse_error& e) {
      CHECK(e.line() == line);
    }
  };

  expect_line("", 0);
  expect_line("pump,squeezed\n20,-3\n", 1);
  expect_line("pump_mw,squeezed_db,antisqueezed_db\n", 0);
  expect_line("pump_mw,squeezed_db,antisqueezed_db\n20,-3.4\n", 2);
  expect_line("pump_mw,squeezed_db,antisqueezed_db\n20,-3.4,3.9\n\n", 3);
  expect_line("pump_mw,squeezed_db,antisqueezed_db\n20,minus,3.9\n", 2);
  expect_line("pump_mw,squeezed_db,antisqueezed_db\n0,-3.4,3.9\n", 2);
  expect_line("pump_mw,squeezed_db,antisqueezed_db\n20,0.4,3.9\n", 2);
  expect_line("pump_mw,squeezed_db,antisqueezed_db\n20,-3.4,-0.1\n", 2);
  expect_line("pump_mw,squeezed_db,antisqueezed_db,sigma_db\n20,-3.4,3.9,0\n", 2);
  expect_line("pump_mw,squeezed_db,antisqueezed_db,sigma_db\n20,-3.4,3.9\n", 2);

  CHECK_THROWS_AS(load_measurements(std::filesystem::path("/nonexistent/data.csv")),
                  parse_error);
}

TEST_CASE("phase jitter from lock-error calibration", "[estimation]") {
  // 3.4 mV rms over a 50 mV/rad slope is 0.068 rad, i.e. about 3.9 degrees.
  CHECK_THAT(jitter_from_error_rms(0.0034033920413889424, 0.05),
             WithinRel(truth_theta_rad, 1e-13));
  CHECK(jitter_from_error_rms(0.0, 0.05) == 0.0);
  CHECK_THAT(jitter_from_error_rms(0.02, 0.05),
             WithinRel(2.0 * jitter_from_error_rms(0.01, 0.05), 1e-13));
  CHECK_THROWS_AS(jitter_from_error_rms(0.01, 0.0), domain_error);
  CHECK_THROWS_AS(jitter_from_error_rms(0.01, -0.1), domain_error);
  CHECK_THROWS_AS(jitter_from_error_rms(-0.01, 0.05), domain_error);
}

TEST_CASE("model residuals vanish at the generating parameters", "[estimation]") {
  const MeasurementSet data = synthesize_rows(truth_theta_rad, 0.2);
  const FitParams truth = {truth_threshold_w, truth_eta, truth_theta_rad};
  const std::vector<double> residuals =
      model_residuals(truth, data, reference_cavity(), sideband_hz, circuit_db);
  REQUIRE(residuals.size() == 2 * data.size());
  for (double r : residuals) {
    CHECK_THAT(r, WithinAbs(0.0, 1e-9));
  }
}

TEST_CASE("rows at or above the candidate threshold become penalties",
          "[estimation]") {
  MeasurementSet data = synthesize_rows(0.0, 0.2);
  data.push_back({0.2, -9.0, 14.0, 0.2});  // above the 180.88 mW threshold
  const FitParams truth = {truth_threshold_w, truth_eta, 0.0};
  const std::vector<double> residuals =
      model_residuals(truth, data, reference_cavity(), sideband_hz, circuit_db);
  REQUIRE(residuals.size() == 2 * data.size());
  CHECK(residuals[residuals.size() - 2] == fit_penalty_residual);
  CHECK(residuals[residuals.size() - 1] == fit_penalty_residual);
  // The in-range rows are unaffected.
  CHECK_THAT(residuals[0], WithinAbs(0.0, 1e-9));
}

TEST_CASE("residual signs respond to a threshold shift", "[estimation]") {
  // Raising the candidate threshold weakens the predicted squeezing: the
  // squeezed level moves toward 0 (predicted > measured) and the
  // anti-squeezed level drops (predicted < measured).
  const MeasurementSet data = synthesize_rows(0.0, 0.2);
  const FitParams shifted = {truth_threshold_w * 1.01, truth_eta, 0.0};
  const std::vector<double> residuals =
      model_residuals(shifted, data, reference_cavity(), sideband_hz, circuit_db);
  for (std::size_t i = 0; i < residuals.size(); i += 2) {
    CHECK(residuals[i] > 0.0);
    CHECK(residuals[i + 1] < 0.0);
  }
}

TEST_CASE("noiseless fit recovers the generating parameters", "[estimation][fit]") {
  const MeasurementSet data = synthesize_rows(truth_theta_rad, 0.2);
  const FitResult result =
      fit(data, reference_cavity(), sideband_hz, circuit_db, default_init());
  REQUIRE(result.converged);
  CHECK(result.iterations > 0);
  CHECK(result.iterations <= 2000);
  CHECK_THAT(result.threshold_w, WithinRel(truth_threshold_w, 1e-5));
  CHECK_THAT(result.eta_tot, WithinRel(truth_eta, 1e-5));
  CHECK_THAT(result.theta_rad, WithinRel(truth_theta_rad, 1e-4));
  CHECK(result.residual_norm < 1e-8);
}

TEST_CASE("fit is deterministic", "[estimation][fit]") {
  const MeasurementSet data = synthesize_rows(truth_theta_rad, 0.2, 11);
  const FitResult a =
      fit(data, reference_cavity(), sideband_hz, circuit_db, default_init());
  const FitResult b =
      fit(data, reference_cavity(), sideband_hz, circuit_db, default_init());
  CHECK(a.threshold_w == b.threshold_w);
  CHECK(a.eta_tot == b.eta_tot);
  CHECK(a.theta_rad == b.theta_rad);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("fit improves on the starting point", "[estimation][fit]") {
  const MeasurementSet data = synthesize_rows(truth_theta_rad, 0.2, 23);
  const FitParams init = default_init();
  double initial_objective = 0.0;
  for (const double r :
       model_residuals(init, data, reference_cavity(), sideband_hz, circuit_db)) {
    initial_objective += r * r;
  }
  const FitResult result =
      fit(data, reference_cavity(), sideband_hz, circuit_db, init);
  CHECK(result.residual_norm < initial_objective);
}

TEST_CASE("noisy fit lands close to the generating parameters",
          "[estimation][fit]") {
  // 0.2 dB of level noise on every row; the seed is fixed so this is one
  // reproducible draw, and the recovery margin is far looser than the
  // observed spread across seeds.
  const MeasurementSet data = synthesize_rows(truth_theta_rad, 0.2, 99);
  const FitResult result =
      fit(data, reference_cavity(), sideband_hz, circuit_db, default_init());
  REQUIRE(result.converged);
  CHECK_THAT(result.threshold_w, WithinRel(truth_threshold_w, 0.05));
  CHECK_THAT(result.eta_tot, WithinRel(truth_eta, 0.05));
  CHECK_THAT(result.theta_rad, WithinAbs(truth_theta_rad, 0.03));
}

TEST_CASE("underdetermined sets are reported, not fitted", "[estimation][fit]") {
  MeasurementSet data = synthesize_rows(truth_theta_rad, 0.2);
  data.resize(2);
  const FitParams init = default_init();
  const FitResult result =
      fit(data, reference_cavity(), sideband_hz, circuit_db, init);
  CHECK_FALSE(result.converged);
  CHECK(result.iterations == 0);
  CHECK(result.threshold_w == init.threshold_w);
  CHECK(result.eta_tot == init.eta_tot);
  CHECK(result.theta_rad == init.theta_rad);
}

TEST_CASE("fit rejects an out-of-bounds starting point", "[estimation][fit]") {
  const MeasurementSet data = synthesize_rows(truth_theta_rad, 0.2);
  const CavityParams cavity = reference_cavity();
  const FitParams init = default_init();

  FitParams bad = init;
  bad.threshold_w = 0.15;  // below the 160 mW maximum pump in the data
  CHECK_THROWS_AS(fit(data, cavity, sideband_hz, circuit_db, bad), domain_error);

  bad = init;
  bad.threshold_w = 12.0;
  CHECK_THROWS_AS(fit(data, cavity, sideband_hz, circuit_db, bad), domain_error);

  bad = init;
  bad.eta_tot = 0.005;
  CHECK_THROWS_AS(fit(data, cavity, sideband_hz, circuit_db, bad), domain_error);

  bad = init;
  bad.eta_tot = 1.2;
  CHECK_THROWS_AS(fit(data, cavity, sideband_hz, circuit_db, bad), domain_error);

  bad = init;
  bad.theta_rad = -0.01;
  CHECK_THROWS_AS(fit(data, cavity, sideband_hz, circuit_db, bad), domain_error);

  bad = init;
  bad.theta_rad = std::numbers::pi / 4.0;
  CHECK_THROWS_AS(fit(data, cavity, sideband_hz, circuit_db, bad), domain_error);

  CHECK_THROWS_AS(fit({}, cavity, sideband_hz, circuit_db, init), domain_error);
  CHECK_THROWS_AS(fit(data, cavity, sideband_hz, 0.5, init), domain_error);
}

TEST_CASE("bootstrap intervals bracket the base fit", "[estimation][bootstrap]") {
  const MeasurementSet data = synthesize_rows(truth_theta_rad, 0.2, 99);
  const CavityParams cavity = reference_cavity();
  const FitResult base =
      fit(data, cavity, sideband_hz, circuit_db, default_init());
  REQUIRE(base.converged);

  const BootstrapResult boot =
      bootstrap_fit(data, cavity, sideband_hz, circuit_db, base, 20, 7);
  REQUIRE(boot.replicates.size() == 20);
  for (const FitResult& replicate : boot.replicates) {
    CHECK(replicate.converged);
  }
  CHECK(boot.threshold_w.lower <= boot.threshold_w.upper);
  CHECK(boot.eta_tot.lower <= boot.eta_tot.upper);
  CHECK(boot.theta_rad.lower <= boot.theta_rad.upper);
  // The interval has a sane scale and covers the point estimate.
  CHECK(boot.threshold_w.upper - boot.threshold_w.lower < 0.1 * base.threshold_w);
  CHECK(base.threshold_w >= boot.threshold_w.lower - 1e-6);
  CHECK(base.threshold_w <= boot.threshold_w.upper + 1e-6);
  CHECK(base.eta_tot >= boot.eta_tot.lower - 1e-6);
  CHECK(base.eta_tot <= boot.eta_tot.upper + 1e-6);
}

TEST_CASE("bootstrap is reproducible and seed-sensitive", "[estimation][bootstrap]") {
  const MeasurementSet data = synthesize_rows(truth_theta_rad, 0.2, 99);
  const CavityParams cavity = reference_cavity();
  const FitResult base =
      fit(data, cavity, sideband_hz, circuit_db, default_init());
  REQUIRE(base.converged);

  const BootstrapResult first =
      bootstrap_fit(data, cavity, sideband_hz, circuit_db, base, 8, 7);
  const BootstrapResult second =
      bootstrap_fit(data, cavity, sideband_hz, circuit_db, base, 8, 7);
  CHECK(first.threshold_w.lower == second.threshold_w.lower);
  CHECK(first.threshold_w.upper == second.threshold_w.upper);
  CHECK(first.eta_tot.lower == second.eta_tot.lower);
  CHECK(first.theta_rad.upper == second.theta_rad.upper);

  const BootstrapResult other =
      bootstrap_fit(data, cavity, sideband_hz, circuit_db, base, 8, 8);
  CHECK(other.threshold_w.lower != first.threshold_w.lower);
}

TEST_CASE("bootstrap preconditions", "[estimation][bootstrap]") {
  const MeasurementSet data = synthesize_rows(truth_theta_rad, 0.2, 99);
  const CavityParams cavity = reference_cavity();
  const FitResult base =
      fit(data, cavity, sideband_hz, circuit_db, default_init());
  REQUIRE(base.converged);

  FitResult not_converged = base;
  not_converged.converged = false;
  CHECK_THROWS_AS(
      bootstrap_fit(data, cavity, sideband_hz, circuit_db, not_converged, 8, 7),
      domain_error);
  CHECK_THROWS_AS(bootstrap_fit(data, cavity, sideband_hz, circuit_db, base, 1, 7),
                  domain_error);
}
