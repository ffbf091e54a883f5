#include <qbot/interferometer.hpp>

#include <cmath>
#include <numbers>

namespace qbot::interferometer {

double arm_phase(double length, double wavelength) {
  if (wavelength <= 0.0)
    throw NonPositiveWavelength("arm_phase: wavelength must be positive");
  return 2.0 * std::numbers::pi * length / wavelength;
}

OutcomeDistribution detection_probability(const MachZehnderConfig& config) {
  if (config.arm1_length <= 0.0 || config.arm2_length <= 0.0)
    throw std::invalid_argument("detection_probability: arm lengths must be positive");
  const double reflectance = config.splitter_amplitude * config.splitter_amplitude;
  const double transmittance = 1.0 - reflectance;
  if (!(reflectance > 0.0 && reflectance < 1.0))
    throw std::invalid_argument(
        "detection_probability: squared splitter amplitude must lie in (0, 1)");

  if (config.arm2_blocked) {
    // Distinguishable paths: amplitudes on the open arm multiply, no cross
    // term. Photon into arm 2 hits the block.
    OutcomeDistribution out;
    out.p_detector_b = reflectance * transmittance;
    out.p_detector_c = reflectance * reflectance;
    out.p_absorbed = transmittance;
    return out;
  }

  const double delta =
      config.delta_override_rad
          ? *config.delta_override_rad
          : arm_phase(config.arm2_length, config.wavelength) -
                arm_phase(config.arm1_length, config.wavelength);

  OutcomeDistribution out;
  out.p_detector_b = 2.0 * reflectance * transmittance * (1.0 + std::cos(delta));
  out.p_detector_c = 1.0 - out.p_detector_b;
  out.p_absorbed = 0.0;
  return out;
}

StreamCounts simulate_stream(const MachZehnderConfig& config,
                             std::uint64_t n_photons, RandomStream& rng) {
  const OutcomeDistribution dist = detection_probability(config);
  StreamCounts counts;
  for (std::uint64_t i = 0; i < n_photons; ++i) {
    const double u = rng.uniform();
    if (u < dist.p_detector_b) {
      ++counts.detector_b;
    } else if (u < dist.p_detector_b + dist.p_detector_c) {
      ++counts.detector_c;
    } else {
      ++counts.absorbed;
    }
  }
  return counts;
}

}  // namespace qbot::interferometer
