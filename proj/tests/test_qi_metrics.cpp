#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sqzkit/decibel.hpp"
#include "sqzkit/qi_metrics.hpp"

using namespace sqzkit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("squeezing parameter from a measured level", "[metrics]") {
  // Oracle: r = |level| ln(10)/20.
  //   -7.2  dB -> 0.8289306334778566
  //   -6.78 dB -> 0.7805763465249816
  CHECK(squeezing_parameter(0.0).r == 0.0);
  CHECK_THAT(squeezing_parameter(-7.2).r, WithinRel(0.8289306334778566, 1e-14));
  CHECK_THAT(squeezing_parameter(-6.78).r, WithinRel(0.7805763465249816, 1e-14));
  CHECK_THROWS_AS(squeezing_parameter(0.5), domain_error);
  CHECK_THROWS_AS(squeezing_parameter(std::nan("")), domain_error);
}

TEST_CASE("squeezing parameter round trip", "[metrics][property]") {
  // The defining relation e^{-2r} = linear variance, applied back through the
  // dB view, must reproduce r.
  for (double r : {0.0, 0.1, 0.78, 0.8289306334778566, 2.5}) {
    const double level_db = linear_to_db(std::exp(-2.0 * r));
    CHECK_THAT(squeezing_parameter(level_db).r, WithinAbs(r, 1e-12));
  }
}

TEST_CASE("teleportation fidelity", "[metrics]") {
  // Oracle: F = 1/(1 + n e^{-2r}) with r = 0.8289306334778566:
  //   n=1 -> 0.8399506946347535, n=5 -> 0.5121034736826205
  const SqueezingParameter r72 = squeezing_parameter(-7.2);
  CHECK(teleport_fidelity(1, {0.0}) == 0.5);
  CHECK_THAT(teleport_fidelity(1, r72), WithinRel(0.8399506946347535, 1e-14));
  CHECK_THAT(teleport_fidelity(5, r72), WithinRel(0.5121034736826205, 1e-14));
  CHECK_THROWS_AS(teleport_fidelity(0, r72), domain_error);
  CHECK_THROWS_AS(teleport_fidelity(-2, r72), domain_error);
  CHECK_THROWS_AS(teleport_fidelity(1, {-0.1}), domain_error);
}

TEST_CASE("fidelity limits and monotonicity", "[metrics][property]") {
  // F(n, 0) = 1/(1+n); F grows with r and shrinks with n, staying in (0, 1).
  for (int n : {1, 2, 5, 10}) {
    CHECK_THAT(teleport_fidelity(n, {0.0}), WithinRel(1.0 / (1.0 + n), 1e-14));
  }
  double previous = 0.0;
  for (double r = 0.0; r < 3.0; r += 0.25) {
    const double f = teleport_fidelity(3, {r});
    CHECK(f > 0.0);
    CHECK(f < 1.0);
    CHECK(f > previous);
    previous = f;
  }
  CHECK(teleport_fidelity(6, {0.8}) < teleport_fidelity(5, {0.8}));
  CHECK_THAT(teleport_fidelity(1, {20.0}), WithinAbs(1.0, 1e-12));
}

TEST_CASE("dense coding capacity", "[metrics]") {
  // Oracle: I = ln(1 + n_s e^{2r}); with n_s=1, r=0.8289306334778566 this is
  // 1.8322733526866077 nats.
  const SqueezingParameter r72 = squeezing_parameter(-7.2);
  CHECK(dense_coding_capacity(0.0, r72) == 0.0);
  CHECK_THAT(dense_coding_capacity(1.0, {0.0}), WithinRel(std::numbers::ln2, 1e-14));
  CHECK_THAT(dense_coding_capacity(1.0, r72), WithinRel(1.8322733526866077, 1e-14));
  CHECK_THROWS_AS(dense_coding_capacity(-0.5, r72), domain_error);
}

TEST_CASE("capacity grows with photons and squeezing", "[metrics][property]") {
  double previous = -1.0;
  for (double ns : {0.5, 1.0, 2.0, 4.0}) {
    const double capacity = dense_coding_capacity(ns, {0.5});
    CHECK(capacity > previous);
    previous = capacity;
  }
  previous = -1.0;
  for (double r = 0.0; r < 2.0; r += 0.2) {
    const double capacity = dense_coding_capacity(1.0, {r});
    CHECK(capacity > previous);
    previous = capacity;
  }
}

TEST_CASE("Gaussian purity from a variance pair", "[metrics]") {
  // Oracle: 1/sqrt(V- V+); for the (-7.2, +11.6) dB pair the product is
  // 10^(-0.72) * 10^(1.16) = 10^0.44, so purity = 10^(-0.22)
  //   = 0.6025595860743578.
  CHECK(purity(QuadraturePair(1.0, 1.0)) == 1.0);
  const QuadraturePair measured(db_to_linear(-7.2), db_to_linear(11.6));
  CHECK_THAT(purity(measured), WithinRel(0.6025595860743578, 1e-13));
  // Any minimum-uncertainty pair is pure.
  for (double v : {0.1, 0.5, 1.0}) {
    CHECK_THAT(purity(QuadraturePair(v, 1.0 / v)), WithinRel(1.0, 1e-13));
  }
}

TEST_CASE("Holevo criterion verdict", "[metrics]") {
  CHECK(beats_holevo(-7.2));
  CHECK_FALSE(beats_holevo(-6.78));  // the boundary is not exceedance
  CHECK_FALSE(beats_holevo(-6.0));
  CHECK(beats_holevo(-6.781));
  CHECK_THROWS_AS(beats_holevo(std::nan("")), domain_error);
}
