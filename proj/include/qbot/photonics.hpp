#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>

#include <qbot/random.hpp>

namespace qbot::photonics {

/// Raised when an operation touches a photon that was absorbed by an earlier
/// element. Absorbing elements consume photons permanently.
class PhotonConsumed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidAmplitude : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reduce an angle in degrees into the canonical range [-45, 135) modulo 180.
///
/// fmod on IEEE doubles is exact, so inputs that are multiples of 0.5 degrees
/// (which are exactly representable) reduce without rounding drift. That keeps
/// the four BB84 states {-45, 0, 45, 90} stable under any sequence of plate
/// rotations that are multiples of 22.5 degrees.
double canonical_angle_deg(double angle_deg);

/// Linear polarization angle in degrees, canonical range [-45, 135).
class PolarizationState {
 public:
  PolarizationState() = default;
  explicit PolarizationState(double angle_deg)
      : angle_deg_(canonical_angle_deg(angle_deg)) {}

  double angle_deg() const { return angle_deg_; }

  friend bool operator==(PolarizationState a, PolarizationState b) {
    return a.angle_deg_ == b.angle_deg_;
  }

 private:
  double angle_deg_ = 0.0;
};

/// Complex probability amplitude in polar form. magnitude must lie in [0, 1].
struct ProbabilityAmplitude {
  double magnitude = 0.0;
  double phase_rad = 0.0;
};

/// A single timestamped photon. Polarization is empty while the photon is one
/// half of an unresolved entangled pair.
struct Photon {
  std::uint64_t id = 0;
  std::int64_t emit_time_ns = 0;
  double wavelength_nm = 810.0;
  std::optional<PolarizationState> polarization{PolarizationState(0.0)};
  std::optional<std::uint64_t> pair_id{};
  bool consumed = false;

  bool resolved() const { return polarization.has_value(); }
};

enum class PbsPort { Transmit, Reflect };

/// Half-wave plate: rotates polarization by twice the plate angle. The plate
/// is modeled as a pure rotation of the final polarization, not a reflection
/// about the plate axis.
PolarizationState hwp_rotate(PolarizationState pol, double plate_angle_deg);

/// Malus's law: transmission probability cos^2(pol - axis). Exact 1, 0 and
/// 0.5 whenever the reduced angle difference is a multiple of 45 degrees, so
/// the BB84 truth table cases carry no floating-point slack.
double malus_probability(PolarizationState pol, double axis_deg);

/// Absorbing polarizer. On transmission the photon collapses onto the axis;
/// otherwise it is absorbed and marked consumed. Returns whether it passed.
/// Throws PhotonConsumed when the photon was already absorbed, and
/// std::invalid_argument when it is still entangled (no definite state).
bool polarizer_measure(Photon& photon, double axis_deg, RandomStream& rng);

/// Polarizing beam splitter: transmits horizontal, reflects vertical.
/// Collapses the photon to 0 (Transmit) or 90 degrees (Reflect). Routing does
/// not consume the photon; the sensor behind the port does.
PbsPort pbs_route(Photon& photon, RandomStream& rng);

/// Combine path amplitudes into an event probability.
/// Distinguishable paths add probabilities (rule 3); indistinguishable paths
/// add amplitudes with their phases before squaring (rules 1-2).
double compose_probability(std::span<const ProbabilityAmplitude> amps,
                           bool distinguishable);

}  // namespace qbot::photonics
