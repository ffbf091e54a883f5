#include <qbot/spdc.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace qbot::spdc {

namespace {

bool is_sorted_by_time(std::span<const DetectionEvent> events) {
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].timestamp_ns < events[i - 1].timestamp_ns) return false;
  }
  return true;
}

Photon& member(EntangledPair& pair, PairMember which) {
  return which == PairMember::Signal ? pair.signal : pair.idler;
}

Photon& partner(EntangledPair& pair, PairMember which) {
  return which == PairMember::Signal ? pair.idler : pair.signal;
}

}  // namespace

std::vector<EntangledPair> generate_pairs(const PumpSource& source,
                                          std::int64_t duration_ns,
                                          RandomStream& rng) {
  std::vector<EntangledPair> pairs;
  if (duration_ns <= 0 || source.pair_rate_hz <= 0.0) return pairs;

  double signal_nm;
  double idler_nm;
  if (source.signal_wavelength_nm) {
    // Energy conservation fixes the idler: 1/l_i = 1/l_p - 1/l_s.
    signal_nm = *source.signal_wavelength_nm;
    idler_nm = 1.0 / (1.0 / source.wavelength_nm - 1.0 / signal_nm);
  } else {
    // Degenerate process: both photons at twice the pump wavelength.
    signal_nm = 2.0 * source.wavelength_nm;
    idler_nm = signal_nm;
  }

  const double rate_per_ns = source.pair_rate_hz * 1e-9;
  double t_ns = 0.0;
  std::uint64_t pair_id = 0;
  while (true) {
    t_ns += rng.exponential(rate_per_ns);
    if (t_ns >= static_cast<double>(duration_ns)) break;
    const std::int64_t emit = static_cast<std::int64_t>(std::llround(t_ns));

    EntangledPair pair;
    pair.pair_id = pair_id;
    pair.signal = Photon{.id = 2 * pair_id,
                         .emit_time_ns = emit,
                         .wavelength_nm = signal_nm,
                         .polarization = std::nullopt,
                         .pair_id = pair_id};
    pair.idler = Photon{.id = 2 * pair_id + 1,
                        .emit_time_ns = emit,
                        .wavelength_nm = idler_nm,
                        .polarization = std::nullopt,
                        .pair_id = pair_id};
    pairs.push_back(std::move(pair));
    ++pair_id;
  }
  return pairs;
}

PbsPort measure_entangled(EntangledPair& pair, PairMember which,
                          double analyzer_deg, RandomStream& rng) {
  Photon& photon = member(pair, which);
  if (photon.consumed)
    throw PhotonConsumed("measure_entangled: photon already absorbed");

  if (!pair.resolved) {
    // First measurement: 1/2 transmit at any analyzer angle, partner
    // collapses orthogonally, entanglement is gone for good.
    const PbsPort outcome = rng.bernoulli(0.5) ? PbsPort::Transmit : PbsPort::Reflect;
    const double measured_deg =
        outcome == PbsPort::Transmit ? analyzer_deg : analyzer_deg + 90.0;
    photon.polarization = photonics::PolarizationState(measured_deg);
    partner(pair, which).polarization = photonics::PolarizationState(measured_deg + 90.0);
    pair.resolved = true;
    return outcome;
  }

  // Resolved pair: ordinary Malus statistics on the definite state. The
  // partner is untouched.
  const double p_transmit = photonics::malus_probability(*photon.polarization, analyzer_deg);
  if (rng.bernoulli(p_transmit)) {
    photon.polarization = photonics::PolarizationState(analyzer_deg);
    return PbsPort::Transmit;
  }
  photon.polarization = photonics::PolarizationState(analyzer_deg + 90.0);
  return PbsPort::Reflect;
}

bool bandpass_pass(const Photon& photon, const BandpassFilter& filter) {
  return std::abs(photon.wavelength_nm - filter.center_nm) <= filter.bandwidth_nm / 2.0;
}

std::optional<DetectionEvent> detect(Photon& photon, const DetectorSpec& spec,
                                     const std::string& detector_id,
                                     RandomStream& rng,
                                     std::int64_t propagation_delay_ns) {
  if (photon.consumed) throw PhotonConsumed("detect: photon already absorbed");
  if (photon.wavelength_nm < spec.wavelength_min_nm ||
      photon.wavelength_nm > spec.wavelength_max_nm) {
    return std::nullopt;
  }
  if (!rng.bernoulli(spec.efficiency)) return std::nullopt;

  const double jitter = rng.gaussian(0.0, spec.timing_jitter_ns);
  DetectionEvent event;
  event.detector_id = detector_id;
  event.timestamp_ns = photon.emit_time_ns + propagation_delay_ns +
                       spec.clock_offset_ns +
                       static_cast<std::int64_t>(std::llround(jitter));
  event.source = DetectionEvent::Source::TruePhoton;
  event.photon_id = photon.id;
  photon.consumed = true;  // the counter traps the photon
  return event;
}

std::vector<DetectionEvent> generate_dark_counts(const DetectorSpec& spec,
                                                 const std::string& detector_id,
                                                 std::int64_t duration_ns,
                                                 RandomStream& rng) {
  std::vector<DetectionEvent> events;
  if (duration_ns <= 0 || spec.dark_count_rate_hz <= 0.0) return events;

  const double rate_per_ns = spec.dark_count_rate_hz * 1e-9;
  double t_ns = 0.0;
  while (true) {
    t_ns += rng.exponential(rate_per_ns);
    if (t_ns >= static_cast<double>(duration_ns)) break;
    DetectionEvent event;
    event.detector_id = detector_id;
    event.timestamp_ns = static_cast<std::int64_t>(std::llround(t_ns));
    event.source = DetectionEvent::Source::DarkCount;
    events.push_back(std::move(event));
  }
  return events;
}

bool event_time_less(const DetectionEvent& a, const DetectionEvent& b) {
  if (a.timestamp_ns != b.timestamp_ns) return a.timestamp_ns < b.timestamp_ns;
  if (a.source != b.source) return a.source < b.source;
  return a.photon_id < b.photon_id;
}

std::vector<Coincidence> find_coincidences(std::span<const DetectionEvent> events_a,
                                           std::span<const DetectionEvent> events_b,
                                           CoincidenceWindow window) {
  if (!is_sorted_by_time(events_a) || !is_sorted_by_time(events_b))
    throw UnsortedInput("find_coincidences: inputs must be sorted by timestamp");

  std::vector<Coincidence> matches;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < events_a.size() && j < events_b.size()) {
    const std::int64_t dt = events_a[i].timestamp_ns - events_b[j].timestamp_ns;
    if (std::llabs(dt) <= window.tau_ns) {
      matches.push_back(Coincidence{events_a[i], events_b[j]});
      ++i;
      ++j;
    } else if (dt < 0) {
      ++i;  // a[i] is too early to match b[j] or anything after it
    } else {
      ++j;
    }
  }
  return matches;
}

std::vector<std::int64_t> share_arrival_times(std::span<const DetectionEvent> local_events,
                                              const std::string& sender,
                                              PublicChannel& channel) {
  PublicMessage message;
  message.kind = PublicMessage::Kind::ArrivalTimes;
  message.sender = sender;
  message.timestamps_ns.reserve(local_events.size());
  for (const auto& event : local_events) message.timestamps_ns.push_back(event.timestamp_ns);
  std::vector<std::int64_t> received = message.timestamps_ns;
  channel.post(std::move(message));
  return received;
}

}  // namespace qbot::spdc
