#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <qbot/interferometer.hpp>
#include <qbot/photonics.hpp>

#include <array>
#include <cmath>
#include <numbers>

using namespace qbot;
using namespace qbot::interferometer;

constexpr double kPi = std::numbers::pi;

TEST_CASE("arm_phase examples") {
  CHECK(arm_phase(1.0, 1.0) == doctest::Approx(2.0 * kPi).epsilon(1e-15));
  CHECK(arm_phase(0.0, 1.0) == 0.0);
  // Direct-evaluation oracle: 2*pi*1.25 = 2.5*pi.
  CHECK(arm_phase(1.25, 1.0) == doctest::Approx(2.5 * kPi).epsilon(1e-15));
  CHECK_THROWS_AS(arm_phase(1.0, 0.0), NonPositiveWavelength);
  CHECK_THROWS_AS(arm_phase(1.0, -2.0), NonPositiveWavelength);
}

TEST_CASE("detection probability at the interference extremes") {
  MachZehnderConfig config;
  config.delta_override_rad = 0.0;
  CHECK(detection_probability(config).p_detector_b == 1.0);

  config.delta_override_rad = kPi;
  CHECK(detection_probability(config).p_detector_b == 0.0);
}

TEST_CASE("phase comes from path lengths when no override is given") {
  MachZehnderConfig config;
  config.arm1_length = 100.0;
  config.arm2_length = 100.5;
  config.wavelength = 1.0;
  // delta = 2*pi*0.5 = pi: destructive.
  CHECK(detection_probability(config).p_detector_b ==
        doctest::Approx(0.0).epsilon(1e-9));

  config.arm2_length = 101.0;  // delta = 2*pi: constructive
  CHECK(detection_probability(config).p_detector_b ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("unblocked outcomes conserve the photon") {
  RandomStream rng(5);
  for (int i = 0; i < 500; ++i) {
    MachZehnderConfig config;
    config.delta_override_rad = rng.uniform() * 4.0 * kPi;
    const auto dist = detection_probability(config);
    CHECK(dist.p_absorbed == 0.0);
    CHECK(dist.p_detector_b + dist.p_detector_c + dist.p_absorbed ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dist.p_detector_b >= 0.0);
    CHECK(dist.p_detector_c >= 0.0);
  }
}

TEST_CASE("p_B is 2*pi periodic") {
  MachZehnderConfig config;
  for (double delta = 0.0; delta < 2.0 * kPi; delta += 0.1) {
    config.delta_override_rad = delta;
    const double base = detection_probability(config).p_detector_b;
    config.delta_override_rad = delta + 2.0 * kPi;
    const double shifted = detection_probability(config).p_detector_b;
    CHECK(std::abs(base - shifted) < 1e-12);
  }
}

TEST_CASE("blocked arm distribution and the distinguishable-path link") {
  MachZehnderConfig config;
  config.arm2_blocked = true;
  const auto dist = detection_probability(config);
  CHECK(dist.p_detector_b == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(dist.p_detector_c == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(dist.p_absorbed == doctest::Approx(0.5).epsilon(1e-12));

  // Blocked mode is rule 3 on the single open path: |1/2|^2 = 1/4.
  const std::array<photonics::ProbabilityAmplitude, 1> open_path = {
      photonics::ProbabilityAmplitude{0.5, 0.0}};
  CHECK(dist.p_detector_b ==
        doctest::Approx(photonics::compose_probability(open_path, true)).epsilon(1e-12));
}

TEST_CASE("asymmetric lossless splitters still conserve probability") {
  MachZehnderConfig config;
  config.splitter_amplitude = 0.6;
  for (double delta : {0.0, 0.7, kPi, 2.2}) {
    config.delta_override_rad = delta;
    const auto dist = detection_probability(config);
    CHECK(dist.p_detector_b + dist.p_detector_c == doctest::Approx(1.0).epsilon(1e-12));
  }
  config.arm2_blocked = true;
  const auto blocked = detection_probability(config);
  CHECK(blocked.p_detector_b + blocked.p_detector_c + blocked.p_absorbed ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("invalid configurations are rejected") {
  MachZehnderConfig config;
  config.splitter_amplitude = 1.0;  // a mirror, not a splitter
  CHECK_THROWS_AS(detection_probability(config), std::invalid_argument);
  config.splitter_amplitude = 0.0;
  CHECK_THROWS_AS(detection_probability(config), std::invalid_argument);

  MachZehnderConfig short_arm;
  short_arm.arm1_length = 0.0;
  CHECK_THROWS_AS(detection_probability(short_arm), std::invalid_argument);
}

TEST_CASE("simulate_stream basics") {
  MachZehnderConfig config;
  RandomStream rng(1);

  const auto empty = simulate_stream(config, 0, rng);
  CHECK(empty.detector_b == 0);
  CHECK(empty.detector_c == 0);
  CHECK(empty.absorbed == 0);

  config.delta_override_rad = 0.0;
  const auto bright = simulate_stream(config, 100000, rng);
  CHECK(bright.detector_b == 100000);  // P = 1 case, exact
}

TEST_CASE("Monte Carlo counts converge to the analytic law") {
  RandomStream rng(99);
  const std::uint64_t n = 10000;
  for (int k = 0; k < 20; ++k) {
    MachZehnderConfig config;
    config.delta_override_rad = 2.0 * kPi * k / 20.0;
    const auto dist = detection_probability(config);
    const auto counts = simulate_stream(config, n, rng);
    const double p = dist.p_detector_b;
    const double sigma = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
    const double error =
        std::abs(static_cast<double>(counts.detector_b) - static_cast<double>(n) * p);
    CHECK(error <= 5.0 * sigma + 1e-9);
    CHECK(counts.detector_b + counts.detector_c + counts.absorbed == n);
  }
}

TEST_CASE("blocked-arm stream hits the quarter rate") {
  MachZehnderConfig config;
  config.arm2_blocked = true;
  RandomStream rng(123);
  const std::uint64_t n = 100000;
  const auto counts = simulate_stream(config, n, rng);
  CHECK(std::abs(static_cast<double>(counts.detector_b) / n - 0.25) <= 0.01);
}
