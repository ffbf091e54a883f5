#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>

#include <qbot/random.hpp>

namespace qbot::interferometer {

class NonPositiveWavelength : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two-arm Mach-Zehnder interferometer. Lengths and wavelength share one
/// unit; only the ratio enters the phase. delta_override_rad, when set,
/// bypasses the path-length phase entirely (used by phase sweeps).
struct MachZehnderConfig {
  double arm1_length = 1.0;
  double arm2_length = 1.0;
  double wavelength = 1.0;
  bool arm2_blocked = false;
  double splitter_amplitude = 0.70710678118654752;  // 1/sqrt(2)
  std::optional<double> delta_override_rad{};
};

/// Probabilities for the three photon fates; sums to 1.
struct OutcomeDistribution {
  double p_detector_b = 0.0;
  double p_detector_c = 0.0;
  double p_absorbed = 0.0;
};

struct StreamCounts {
  std::uint64_t detector_b = 0;
  std::uint64_t detector_c = 0;
  std::uint64_t absorbed = 0;
};

/// Accumulated phase along one arm: 2*pi*length / wavelength.
double arm_phase(double length, double wavelength);

/// Analytic outcome distribution for one photon through the interferometer.
///
/// Unblocked arms interfere: p_B = 2RT(1 + cos delta) with R the splitter
/// reflectance and T = 1 - R, p_C = 1 - p_B by conservation. A blocked second
/// arm makes the paths distinguishable: the photon is absorbed with
/// probability T, otherwise it rides arm 1 and splits classically at the
/// second splitter. With the default 50/50 splitters this is the familiar
/// p_B = (1 + cos delta)/2 and the blocked (1/4, 1/4, 1/2).
OutcomeDistribution detection_probability(const MachZehnderConfig& config);

/// Sample n_photons fates from the analytic distribution.
StreamCounts simulate_stream(const MachZehnderConfig& config,
                             std::uint64_t n_photons, RandomStream& rng);

}  // namespace qbot::interferometer
