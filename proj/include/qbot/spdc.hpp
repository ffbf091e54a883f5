#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <qbot/channel.hpp>
#include <qbot/photonics.hpp>
#include <qbot/random.hpp>

namespace qbot::spdc {

using photonics::PbsPort;
using photonics::Photon;
using photonics::PhotonConsumed;

class UnsortedInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StaleCoincidence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Down-conversion pair. Until the first measurement neither photon carries a
/// definite polarization; afterwards the two are orthogonal forever.
struct EntangledPair {
  std::uint64_t pair_id = 0;
  Photon signal;
  Photon idler;
  bool resolved = false;
};

enum class PairMember { Signal, Idler };

/// Pump laser driving the nonlinear crystal. When signal_wavelength_nm is
/// unset the process is degenerate (both photons at twice the pump
/// wavelength); otherwise the idler wavelength follows from energy
/// conservation 1/l_pump = 1/l_signal + 1/l_idler.
struct PumpSource {
  double wavelength_nm = 405.0;
  double power_mw = 100.0;   // recorded for reports; the rate is the knob
  double pair_rate_hz = 1e6;
  std::optional<double> signal_wavelength_nm{};
};

/// Single-photon counter characteristics. The active size is metadata only.
struct DetectorSpec {
  double wavelength_min_nm = 350.0;
  double wavelength_max_nm = 900.0;
  double efficiency = 0.35;
  double dark_count_rate_hz = 0.0;
  double timing_jitter_ns = 1.0;
  std::int64_t clock_offset_ns = 0;
  double active_size_um = 50.0;
};

/// One click on a detector, in that detector's local clock.
struct DetectionEvent {
  enum class Source { TruePhoton, DarkCount };

  std::string detector_id;
  std::int64_t timestamp_ns = 0;
  Source source = Source::TruePhoton;
  std::uint64_t photon_id = 0;  // meaningful only for TruePhoton
};

struct CoincidenceWindow {
  std::int64_t tau_ns = 25;
};

struct Coincidence {
  DetectionEvent a;
  DetectionEvent b;
};

/// Narrow bandpass filter; the defaults keep only the 810 nm down-conversion
/// band and reject the 405 nm pump.
struct BandpassFilter {
  double center_nm = 810.0;
  double bandwidth_nm = 30.0;
};

/// Draw entangled pairs from a Poisson process over [0, duration_ns).
/// Emission times are integer nanoseconds; both photons of a pair share one.
/// Photon ids are 2*pair_id (signal) and 2*pair_id + 1 (idler).
std::vector<EntangledPair> generate_pairs(const PumpSource& source,
                                          std::int64_t duration_ns,
                                          RandomStream& rng);

/// Measure one photon of a pair behind a polarization analyzer.
///
/// The first measurement of a fresh pair transmits with probability exactly
/// 1/2 at any analyzer angle; the measured photon collapses onto the analyzer
/// axis (Transmit) or its orthogonal (Reflect), the partner collapses to the
/// angle orthogonal to the measured photon, and the pair is resolved for
/// good. Measurements on a resolved pair follow ordinary Malus statistics on
/// the definite state and never touch the partner.
PbsPort measure_entangled(EntangledPair& pair, PairMember which,
                          double analyzer_deg, RandomStream& rng);

/// True when the photon's wavelength falls inside the filter band.
bool bandpass_pass(const Photon& photon, const BandpassFilter& filter = {});

/// Send a photon onto a single-photon counter. Out-of-range wavelengths never
/// fire. Otherwise the detector clicks with probability spec.efficiency and
/// the photon is trapped (consumed). The recorded timestamp is the emission
/// time plus propagation delay, the detector's clock offset, and a Gaussian
/// jitter draw, rounded to integer nanoseconds.
std::optional<DetectionEvent> detect(Photon& photon, const DetectorSpec& spec,
                                     const std::string& detector_id,
                                     RandomStream& rng,
                                     std::int64_t propagation_delay_ns = 0);

/// Poisson stream of dark counts over [0, duration_ns), already sorted.
std::vector<DetectionEvent> generate_dark_counts(const DetectorSpec& spec,
                                                 const std::string& detector_id,
                                                 std::int64_t duration_ns,
                                                 RandomStream& rng);

/// Timestamp order with deterministic tie-breaking, for event-list sorting.
bool event_time_less(const DetectionEvent& a, const DetectionEvent& b);

/// AND-gate coincidence search: greedy one-to-one matching in time order.
/// Events a and b coincide when |t_a - t_b| <= tau_ns; each event joins at
/// most one coincidence; each A event takes the earliest still-unmatched
/// eligible B event. Inputs must be sorted by timestamp (throws
/// UnsortedInput otherwise).
std::vector<Coincidence> find_coincidences(std::span<const DetectionEvent> events_a,
                                           std::span<const DetectionEvent> events_b,
                                           CoincidenceWindow window);

/// Publish local arrival times on the classical channel so the far side can
/// run the coincidence search. Leaks timing only, never outcomes. Returns the
/// timestamps as received (the default channel is lossless and ordered).
std::vector<std::int64_t> share_arrival_times(std::span<const DetectionEvent> local_events,
                                              const std::string& sender,
                                              PublicChannel& channel);

}  // namespace qbot::spdc
