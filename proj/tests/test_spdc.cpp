#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <qbot/selftest.hpp>
#include <qbot/spdc.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

using namespace qbot;
using namespace qbot::spdc;

namespace {

// Bisection oracle for the idler wavelength: solve 1/pump - 1/signal - 1/x = 0.
double idler_oracle_nm(double pump_nm, double signal_nm) {
  double lo = signal_nm;
  double hi = 1e7;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double residual = 1.0 / pump_nm - 1.0 / signal_nm - 1.0 / mid;
    // residual decreases with mid: too-small mid makes 1/mid too large.
    if (residual > 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

DetectionEvent event_at(std::int64_t t, std::uint64_t id = 0,
                        const std::string& detector = "d") {
  DetectionEvent event;
  event.detector_id = detector;
  event.timestamp_ns = t;
  event.photon_id = id;
  return event;
}

EntangledPair fresh_pair() {
  EntangledPair pair;
  pair.signal.polarization.reset();
  pair.idler.polarization.reset();
  pair.signal.pair_id = 0;
  pair.idler.pair_id = 0;
  return pair;
}

}  // namespace

TEST_CASE("degenerate pairs sit at twice the pump wavelength") {
  RandomStream rng(1, "pairs");
  PumpSource source;
  const auto pairs = generate_pairs(source, 1'000'000, rng);
  CHECK(pairs.size() > 500);
  for (const auto& pair : pairs) {
    CHECK(pair.signal.wavelength_nm == 810.0);
    CHECK(pair.idler.wavelength_nm == 810.0);
    CHECK_FALSE(pair.resolved);
    CHECK_FALSE(pair.signal.polarization.has_value());
    CHECK(pair.signal.emit_time_ns == pair.idler.emit_time_ns);
    CHECK(pair.signal.pair_id == pair.pair_id);
  }
}

TEST_CASE("zero duration produces no pairs") {
  RandomStream rng(2);
  CHECK(generate_pairs(PumpSource{}, 0, rng).empty());
}

TEST_CASE("forced signal wavelength fixes the idler by energy conservation") {
  RandomStream rng(3);
  PumpSource source;
  source.signal_wavelength_nm = 780.0;
  const auto pairs = generate_pairs(source, 100'000, rng);
  REQUIRE(pairs.size() > 10);

  const double oracle = idler_oracle_nm(405.0, 780.0);
  CHECK(oracle == doctest::Approx(842.4).epsilon(1e-9));  // 315900/375 exactly
  for (const auto& pair : pairs) {
    CHECK(pair.idler.wavelength_nm == doctest::Approx(oracle).epsilon(1e-9));
    const double residual =
        std::abs(1.0 / 405.0 - 1.0 / pair.signal.wavelength_nm - 1.0 / pair.idler.wavelength_nm);
    CHECK(residual <= 1e-12);
  }
}

TEST_CASE("pair emission times follow the configured rate") {
  RandomStream rng(4);
  PumpSource source;
  source.pair_rate_hz = 1e6;  // over 10^7 ns expect ~10^4 pairs
  const auto pairs = generate_pairs(source, 10'000'000, rng);
  const double expected = 1e4;
  const double sigma = std::sqrt(expected);
  CHECK(std::abs(static_cast<double>(pairs.size()) - expected) <= 4.0 * sigma);
  for (std::size_t i = 1; i < pairs.size(); ++i)
    CHECK(pairs[i].signal.emit_time_ns >= pairs[i - 1].signal.emit_time_ns);
}

TEST_CASE("first measurement collapses both photons orthogonally") {
  RandomStream rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    EntangledPair pair = fresh_pair();
    const auto port = measure_entangled(pair, PairMember::Signal, 0.0, rng);
    CHECK(pair.resolved);
    const double measured = pair.signal.polarization->angle_deg();
    const double partner = pair.idler.polarization->angle_deg();
    if (port == PbsPort::Transmit) {
      CHECK(measured == 0.0);
      CHECK(partner == 90.0);
    } else {
      CHECK(measured == 90.0);
      CHECK(partner == 0.0);  // 180 reduces to 0
    }
  }
}

TEST_CASE("first-measurement transmit fraction is one half at any angle") {
  RandomStream rng(6);
  const int n = 100000;
  int transmitted = 0;
  for (int trial = 0; trial < n; ++trial) {
    EntangledPair pair = fresh_pair();
    if (measure_entangled(pair, PairMember::Idler, 33.7, rng) == PbsPort::Transmit)
      ++transmitted;
  }
  CHECK(std::abs(static_cast<double>(transmitted) / n - 0.5) <= 0.01);
}

TEST_CASE("same-angle measurements disagree on every trial") {
  RandomStream rng(7);
  for (double angle : {0.0, 22.5, 45.0, 77.0}) {
    for (int trial = 0; trial < 5000; ++trial) {
      EntangledPair pair = fresh_pair();
      const auto a = measure_entangled(pair, PairMember::Signal, angle, rng);
      const auto b = measure_entangled(pair, PairMember::Idler, angle, rng);
      CHECK(a != b);
    }
  }
}

TEST_CASE("resolution happens exactly once and re-measurement spares the partner") {
  RandomStream rng(8);
  EntangledPair pair = fresh_pair();
  measure_entangled(pair, PairMember::Signal, 10.0, rng);
  CHECK(pair.resolved);
  const auto partner_state = *pair.idler.polarization;
  for (double angle : {0.0, 45.0, 90.0, 10.0}) {
    measure_entangled(pair, PairMember::Signal, angle, rng);
    CHECK(pair.resolved);
    CHECK(*pair.idler.polarization == partner_state);
  }
}

TEST_CASE("measuring a consumed photon throws") {
  RandomStream rng(9);
  EntangledPair pair = fresh_pair();
  pair.signal.consumed = true;
  CHECK_THROWS_AS(measure_entangled(pair, PairMember::Signal, 0.0, rng), PhotonConsumed);
}

TEST_CASE("bandpass filter boundaries") {
  Photon photon;
  photon.wavelength_nm = 810.0;
  CHECK(bandpass_pass(photon));
  photon.wavelength_nm = 405.0;  // the pump must not reach the counters
  CHECK_FALSE(bandpass_pass(photon));
  photon.wavelength_nm = 825.0;  // half-bandwidth edge
  CHECK(bandpass_pass(photon));
  photon.wavelength_nm = 825.1;
  CHECK_FALSE(bandpass_pass(photon));
  photon.wavelength_nm = 795.0;
  CHECK(bandpass_pass(photon));
  photon.wavelength_nm = 794.9;
  CHECK_FALSE(bandpass_pass(photon));
}

TEST_CASE("ideal detector fires on every in-range photon") {
  RandomStream rng(10);
  DetectorSpec spec;
  spec.efficiency = 1.0;
  spec.timing_jitter_ns = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Photon photon;
    photon.id = static_cast<std::uint64_t>(i);
    photon.emit_time_ns = i * 10;
    const auto event = detect(photon, spec, "spc", rng);
    REQUIRE(event.has_value());
    CHECK(event->timestamp_ns == i * 10);
    CHECK(event->photon_id == photon.id);
    CHECK(photon.consumed);
    CHECK_THROWS_AS(detect(photon, spec, "spc", rng), PhotonConsumed);
  }
}

TEST_CASE("out-of-range wavelengths never fire") {
  RandomStream rng(11);
  DetectorSpec spec;
  spec.efficiency = 1.0;
  Photon ultraviolet;
  ultraviolet.wavelength_nm = 300.0;
  CHECK_FALSE(detect(ultraviolet, spec, "spc", rng).has_value());
  Photon infrared;
  infrared.wavelength_nm = 950.0;
  CHECK_FALSE(detect(infrared, spec, "spc", rng).has_value());
}

TEST_CASE("detection count matches the binomial oracle at 35 percent") {
  RandomStream rng(12);
  DetectorSpec spec;  // efficiency defaults to 0.35
  int fired = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    Photon photon;
    if (detect(photon, spec, "spc", rng)) ++fired;
  }
  // 3 sigma = 3 * sqrt(1e5 * 0.35 * 0.65) ~ 450
  CHECK(std::abs(fired - 35000) <= 450);
}

TEST_CASE("clock offset and jitter shape the recorded timestamp") {
  RandomStream rng(13);
  DetectorSpec spec;
  spec.efficiency = 1.0;
  spec.timing_jitter_ns = 0.0;
  spec.clock_offset_ns = 40;
  Photon photon;
  photon.emit_time_ns = 1000;
  const auto event = detect(photon, spec, "spc", rng, 7);
  REQUIRE(event.has_value());
  CHECK(event->timestamp_ns == 1000 + 7 + 40);
}

TEST_CASE("dark counts follow the Poisson oracle") {
  RandomStream rng(14);
  DetectorSpec quiet;
  CHECK(generate_dark_counts(quiet, "spc", 1'000'000'000, rng).empty());

  DetectorSpec noisy;
  noisy.dark_count_rate_hz = 1000.0;
  const auto events = generate_dark_counts(noisy, "spc", 1'000'000'000, rng);
  // 3 sigma = 3 * sqrt(1000) ~ 95
  CHECK(std::abs(static_cast<double>(events.size()) - 1000.0) <= 95.0);
  for (std::size_t i = 1; i < events.size(); ++i)
    CHECK(events[i].timestamp_ns >= events[i - 1].timestamp_ns);
  for (const auto& event : events)
    CHECK(event.source == DetectionEvent::Source::DarkCount);
}

TEST_CASE("coincidence window basics") {
  const std::vector<DetectionEvent> a = {event_at(100, 1, "a")};
  const std::vector<DetectionEvent> inside = {event_at(110, 2, "b")};
  const std::vector<DetectionEvent> outside = {event_at(200, 3, "b")};
  CHECK(find_coincidences(a, inside, CoincidenceWindow{25}).size() == 1);
  CHECK(find_coincidences(a, outside, CoincidenceWindow{25}).empty());
}

TEST_CASE("unsorted input is rejected") {
  const std::vector<DetectionEvent> unsorted = {event_at(200), event_at(100)};
  const std::vector<DetectionEvent> fine = {event_at(100)};
  CHECK_THROWS_AS(find_coincidences(unsorted, fine, CoincidenceWindow{25}), UnsortedInput);
  CHECK_THROWS_AS(find_coincidences(fine, unsorted, CoincidenceWindow{25}), UnsortedInput);
}

TEST_CASE("tau zero pairs identical timestamps only") {
  const std::vector<DetectionEvent> a = {event_at(5, 1), event_at(10, 2), event_at(20, 3)};
  const std::vector<DetectionEvent> b = {event_at(5, 11), event_at(11, 12), event_at(20, 13)};
  const auto matches = find_coincidences(a, b, CoincidenceWindow{0});
  REQUIRE(matches.size() == 2);
  for (const auto& match : matches) CHECK(match.a.timestamp_ns == match.b.timestamp_ns);
}

TEST_CASE("accidental coincidences match the brute-force oracle exactly") {
  // Two independent 10 kHz Poisson streams over one second, tau = 25 ns.
  RandomStream rng_a(15, "a");
  RandomStream rng_b(16, "b");
  DetectorSpec spec;
  spec.dark_count_rate_hz = 1e4;
  auto a = generate_dark_counts(spec, "a", 1'000'000'000, rng_a);
  auto b = generate_dark_counts(spec, "b", 1'000'000'000, rng_b);
  for (std::size_t i = 0; i < a.size(); ++i) a[i].photon_id = i;
  for (std::size_t i = 0; i < b.size(); ++i) b[i].photon_id = 1'000'000 + i;

  const auto matches = find_coincidences(a, b, CoincidenceWindow{25});
  const auto oracle = qbot::selftest::brute_force_coincidences(a, b, 25);
  REQUIRE(matches.size() == oracle.size());
  for (std::size_t k = 0; k < matches.size(); ++k) {
    CHECK(matches[k].a.photon_id == a[oracle[k].first].photon_id);
    CHECK(matches[k].b.photon_id == b[oracle[k].second].photon_id);
  }
}

TEST_CASE("accidental rate approaches the product-rate estimate") {
  // Denser streams so the 15 percent analytic comparison has headroom:
  // expected matches ~ 2 * tau * r^2 * T = 2*25e-9*1e10*2 = 1000.
  RandomStream rng_a(17, "a");
  RandomStream rng_b(18, "b");
  DetectorSpec spec;
  spec.dark_count_rate_hz = 1e5;
  const std::int64_t duration = 2'000'000'000;
  const auto a = generate_dark_counts(spec, "a", duration, rng_a);
  const auto b = generate_dark_counts(spec, "b", duration, rng_b);
  const auto matches = find_coincidences(a, b, CoincidenceWindow{25});

  const double t_seconds = static_cast<double>(duration) * 1e-9;
  const double analytic = 2.0 * 25e-9 * spec.dark_count_rate_hz * spec.dark_count_rate_hz *
                          t_seconds;
  CHECK(std::abs(static_cast<double>(matches.size()) - analytic) <= 0.15 * analytic);
}

TEST_CASE("matching is symmetric under stream swap") {
  RandomStream rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<DetectionEvent> a, b;
    const std::size_t na = 1 + rng.uniform_u64(150);
    const std::size_t nb = 1 + rng.uniform_u64(150);
    for (std::size_t i = 0; i < na; ++i)
      a.push_back(event_at(static_cast<std::int64_t>(rng.uniform_u64(1500)), i, "a"));
    for (std::size_t i = 0; i < nb; ++i)
      b.push_back(event_at(static_cast<std::int64_t>(rng.uniform_u64(1500)), 1'000'000 + i, "b"));
    std::sort(a.begin(), a.end(), event_time_less);
    std::sort(b.begin(), b.end(), event_time_less);

    const std::int64_t tau = static_cast<std::int64_t>(rng.uniform_u64(30));
    auto as_set = [](const std::vector<Coincidence>& matches) {
      std::set<std::pair<std::uint64_t, std::uint64_t>> pairs;
      for (const auto& match : matches)
        pairs.insert({std::min(match.a.photon_id, match.b.photon_id),
                      std::max(match.a.photon_id, match.b.photon_id)});
      return pairs;
    };
    CHECK(as_set(find_coincidences(a, b, CoincidenceWindow{tau})) ==
          as_set(find_coincidences(b, a, CoincidenceWindow{tau})));
  }
}

TEST_CASE("every detected true pair within the window is found") {
  RandomStream rng(20);
  PumpSource source;
  source.pair_rate_hz = 2e5;
  const auto pairs = generate_pairs(source, 10'000'000, rng);

  DetectorSpec spec;
  spec.efficiency = 0.8;
  spec.timing_jitter_ns = 1.0;
  std::vector<DetectionEvent> a, b;
  for (auto pair : pairs) {
    if (auto event = detect(pair.signal, spec, "a", rng)) a.push_back(std::move(*event));
    if (auto event = detect(pair.idler, spec, "b", rng)) b.push_back(std::move(*event));
  }
  std::sort(a.begin(), a.end(), event_time_less);
  std::sort(b.begin(), b.end(), event_time_less);

  const std::int64_t tau = 25;
  const auto matches = find_coincidences(a, b, CoincidenceWindow{tau});
  const auto oracle = qbot::selftest::brute_force_coincidences(a, b, tau);
  CHECK(matches.size() == oracle.size());

  // No false negatives: any pair with both photons detected within tau must
  // appear among the matches.
  std::set<std::uint64_t> matched_pairs;
  for (const auto& match : matches)
    if (match.a.photon_id / 2 == match.b.photon_id / 2)
      matched_pairs.insert(match.a.photon_id / 2);
  std::size_t detectable = 0;
  for (const auto& event_a : a) {
    for (const auto& event_b : b) {
      if (event_a.photon_id / 2 == event_b.photon_id / 2 &&
          std::llabs(event_a.timestamp_ns - event_b.timestamp_ns) <= tau)
        ++detectable;
    }
  }
  CHECK(matched_pairs.size() >= detectable * 99 / 100);
}

TEST_CASE("arrival times travel the public channel in order") {
  PublicChannel channel;
  CHECK(share_arrival_times({}, "alice", channel).empty());

  std::vector<DetectionEvent> events = {event_at(10), event_at(20), event_at(30)};
  const auto received = share_arrival_times(events, "alice", channel);
  CHECK(received == std::vector<std::int64_t>{10, 20, 30});
  REQUIRE(channel.messages().size() == 2);
  CHECK(channel.messages()[1].timestamps_ns == received);

  channel.close();
  CHECK_THROWS_AS(share_arrival_times(events, "alice", channel), ChannelClosed);
}

TEST_CASE("clock offsets shift matching until the window covers them") {
  RandomStream rng(21);
  PumpSource source;
  source.pair_rate_hz = 1e5;  // sparse: accidental overlap negligible
  const auto pairs = generate_pairs(source, 10'000'000, rng);

  DetectorSpec spec_a;
  spec_a.efficiency = 1.0;
  spec_a.timing_jitter_ns = 0.0;
  DetectorSpec spec_b = spec_a;
  spec_b.clock_offset_ns = 40;

  std::vector<DetectionEvent> a, b;
  for (auto pair : pairs) {
    if (auto event = detect(pair.signal, spec_a, "a", rng)) a.push_back(std::move(*event));
    if (auto event = detect(pair.idler, spec_b, "b", rng)) b.push_back(std::move(*event));
  }
  std::sort(a.begin(), a.end(), event_time_less);
  std::sort(b.begin(), b.end(), event_time_less);

  // tau below the 40 ns relative offset loses every true pair (neighboring
  // pairs may still collide accidentally); above it, all pairs are found.
  for (const auto& match : find_coincidences(a, b, CoincidenceWindow{25}))
    CHECK(match.a.photon_id / 2 != match.b.photon_id / 2);
  const auto wide = find_coincidences(a, b, CoincidenceWindow{50});
  std::size_t true_matches = 0;
  for (const auto& match : wide)
    if (match.a.photon_id / 2 == match.b.photon_id / 2) ++true_matches;
  CHECK(true_matches == pairs.size());
}
