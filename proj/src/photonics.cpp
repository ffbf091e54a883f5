#include <qbot/photonics.hpp>

#include <cmath>
#include <complex>
#include <numbers>

namespace qbot::photonics {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kResultSlack = 1e-9;  // tolerance on probability range checks
}  // namespace

double canonical_angle_deg(double angle_deg) {
  double shifted = std::fmod(angle_deg + 45.0, 180.0);
  if (shifted < 0.0) shifted += 180.0;
  return shifted - 45.0;
}

PolarizationState hwp_rotate(PolarizationState pol, double plate_angle_deg) {
  return PolarizationState(pol.angle_deg() + 2.0 * plate_angle_deg);
}

double malus_probability(PolarizationState pol, double axis_deg) {
  const double delta = canonical_angle_deg(pol.angle_deg() - axis_deg);
  if (delta == 0.0) return 1.0;
  if (delta == 90.0) return 0.0;
  if (delta == 45.0 || delta == -45.0) return 0.5;
  const double c = std::cos(delta * kDegToRad);
  return c * c;
}

bool polarizer_measure(Photon& photon, double axis_deg, RandomStream& rng) {
  if (photon.consumed) throw PhotonConsumed("polarizer_measure: photon already absorbed");
  if (!photon.polarization)
    throw std::invalid_argument("polarizer_measure: photon has no definite polarization");
  const bool transmitted = rng.bernoulli(malus_probability(*photon.polarization, axis_deg));
  if (transmitted) {
    photon.polarization = PolarizationState(axis_deg);
  } else {
    photon.consumed = true;
  }
  return transmitted;
}

PbsPort pbs_route(Photon& photon, RandomStream& rng) {
  if (photon.consumed) throw PhotonConsumed("pbs_route: photon already absorbed");
  if (!photon.polarization)
    throw std::invalid_argument("pbs_route: photon has no definite polarization");
  const double p_transmit = malus_probability(*photon.polarization, 0.0);
  if (rng.bernoulli(p_transmit)) {
    photon.polarization = PolarizationState(0.0);
    return PbsPort::Transmit;
  }
  photon.polarization = PolarizationState(90.0);
  return PbsPort::Reflect;
}

double compose_probability(std::span<const ProbabilityAmplitude> amps,
                           bool distinguishable) {
  if (amps.empty()) throw InvalidAmplitude("compose_probability: no amplitudes");
  for (const auto& amp : amps) {
    if (!(amp.magnitude >= 0.0 && amp.magnitude <= 1.0))
      throw InvalidAmplitude("compose_probability: magnitude outside [0, 1]");
  }

  double probability = 0.0;
  if (distinguishable) {
    for (const auto& amp : amps) probability += amp.magnitude * amp.magnitude;
  } else {
    std::complex<double> total{0.0, 0.0};
    for (const auto& amp : amps) total += std::polar(amp.magnitude, amp.phase_rad);
    probability = std::norm(total);
  }

  if (probability > 1.0 + kResultSlack)
    throw InvalidAmplitude("compose_probability: result exceeds 1");
  return probability;
}

}  // namespace qbot::photonics
