#include <qbot/qkd.hpp>

#include <algorithm>
#include <cmath>

namespace qbot::qkd {

namespace {

constexpr double kCrossPlateAngleDeg = 22.5;  // rotates the x states onto H/V

void announce_bases(std::string sender, std::span<const std::size_t> indices,
                    std::span<const Basis> bases, PublicChannel& channel) {
  for (std::size_t i = 0; i < indices.size(); ++i) {
    PublicMessage message;
    message.kind = PublicMessage::Kind::BasisAnnouncement;
    message.sender = sender;
    message.index = indices[i];
    message.value = basis_code(bases[i]);
    channel.post(std::move(message));
  }
}

}  // namespace

PolarizationState alice_prepare(int bit, Basis basis) {
  if (basis == Basis::Plus) return PolarizationState(bit == 0 ? 0.0 : 90.0);
  return PolarizationState(bit == 0 ? -45.0 : 45.0);
}

std::optional<int> table1_result(double alice_state_deg, Basis bob_hwp_basis) {
  const double state = photonics::canonical_angle_deg(alice_state_deg);
  const bool plus_state = state == 0.0 || state == 90.0;
  const bool cross_state = state == -45.0 || state == 45.0;
  if (!plus_state && !cross_state)
    throw InvalidState("table1_result: state is not one of the four BB84 angles");

  if (bob_hwp_basis == Basis::Plus) {
    if (state == 0.0) return 0;
    if (state == 90.0) return 1;
    return std::nullopt;  // diagonal state on a rectilinear analyzer
  }
  if (state == 45.0) return 1;
  if (state == -45.0) return 0;
  return std::nullopt;
}

int bob_measure(Photon& photon, Basis bob_basis, RandomStream& rng) {
  if (photon.consumed) throw PhotonConsumed("bob_measure: photon already absorbed");
  if (!photon.polarization)
    throw std::invalid_argument("bob_measure: photon has no definite polarization");
  const double plate_deg = bob_basis == Basis::Plus ? 0.0 : kCrossPlateAngleDeg;
  photon.polarization = photonics::hwp_rotate(*photon.polarization, plate_deg);
  const PbsPort port = photonics::pbs_route(photon, rng);
  photon.consumed = true;  // sensor click traps the photon
  return port == PbsPort::Reflect ? 1 : 0;
}

EveResult eve_intercept_resend(Photon& photon, RandomStream& rng) {
  EveResult result;
  result.eve_basis = rng.bernoulli(0.5) ? Basis::Cross : Basis::Plus;
  result.eve_bit = bob_measure(photon, result.eve_basis, rng);
  result.resent = Photon{.id = photon.id,
                         .emit_time_ns = photon.emit_time_ns,
                         .wavelength_nm = photon.wavelength_nm,
                         .polarization = alice_prepare(result.eve_bit, result.eve_basis)};
  return result;
}

SiftOutcome sift(std::span<const AliceRecord> alice_records,
                 std::span<const BobRecord> bob_records, PublicChannel& channel) {
  if (alice_records.size() != bob_records.size())
    throw TranscriptLengthMismatch("sift: transcripts have different lengths");

  std::vector<std::size_t> alice_indices, bob_indices;
  std::vector<Basis> alice_bases, bob_bases;
  for (const auto& record : alice_records) {
    alice_indices.push_back(record.index);
    alice_bases.push_back(record.basis);
  }
  for (const auto& record : bob_records) {
    if (!record.detected) continue;  // nothing to announce for lost slots
    bob_indices.push_back(record.index);
    bob_bases.push_back(record.basis);
  }
  announce_bases("alice", alice_indices, alice_bases, channel);
  announce_bases("bob", bob_indices, bob_bases, channel);

  SiftOutcome outcome;
  for (std::size_t i = 0; i < alice_records.size(); ++i) {
    const auto& alice = alice_records[i];
    const auto& bob = bob_records[i];
    if (!bob.detected || alice.basis != bob.basis) continue;
    outcome.alice.bits.push_back(alice.bit);
    outcome.alice.source_indices.push_back(alice.index);
    outcome.bob.bits.push_back(bob.outcome);
    outcome.bob.source_indices.push_back(bob.index);
  }
  return outcome;
}

QberEstimate estimate_qber(const SiftedKey& sifted_alice, const SiftedKey& sifted_bob,
                           double compare_fraction, RandomStream& rng,
                           PublicChannel& channel, double qber_threshold) {
  if (sifted_alice.empty() || sifted_bob.empty())
    throw EmptyKey("estimate_qber: no sifted bits to sample");
  if (sifted_alice.size() != sifted_bob.size())
    throw TranscriptLengthMismatch("estimate_qber: sifted keys differ in length");
  if (!(compare_fraction > 0.0 && compare_fraction <= 1.0))
    throw std::invalid_argument("estimate_qber: compare_fraction must be in (0, 1]");

  const std::size_t n = sifted_alice.size();
  std::size_t sample_size =
      static_cast<std::size_t>(std::llround(compare_fraction * static_cast<double>(n)));
  sample_size = std::clamp<std::size_t>(sample_size, 1, n);

  // Partial Fisher-Yates over the positions; sorted afterwards so disclosure
  // order does not depend on the shuffle path.
  std::vector<std::size_t> positions(n);
  for (std::size_t i = 0; i < n; ++i) positions[i] = i;
  for (std::size_t i = 0; i < sample_size; ++i) {
    const std::size_t j = i + rng.uniform_u64(n - i);
    std::swap(positions[i], positions[j]);
  }
  std::vector<std::size_t> sample(positions.begin(), positions.begin() + sample_size);
  std::sort(sample.begin(), sample.end());

  QberEstimate estimate;
  estimate.compared_count = sample_size;
  std::vector<bool> disclosed(n, false);
  for (std::size_t pos : sample) {
    disclosed[pos] = true;
    PublicMessage alice_msg;
    alice_msg.kind = PublicMessage::Kind::BitDisclosure;
    alice_msg.sender = "alice";
    alice_msg.index = sifted_alice.source_indices[pos];
    alice_msg.value = sifted_alice.bits[pos];
    channel.post(std::move(alice_msg));
    PublicMessage bob_msg;
    bob_msg.kind = PublicMessage::Kind::BitDisclosure;
    bob_msg.sender = "bob";
    bob_msg.index = sifted_bob.source_indices[pos];
    bob_msg.value = sifted_bob.bits[pos];
    channel.post(std::move(bob_msg));
    if (sifted_alice.bits[pos] != sifted_bob.bits[pos]) ++estimate.mismatches;
  }

  estimate.qber = static_cast<double>(estimate.mismatches) /
                  static_cast<double>(estimate.compared_count);
  estimate.eve_detected = estimate.qber > qber_threshold;

  for (std::size_t pos = 0; pos < n; ++pos) {
    if (disclosed[pos]) continue;  // compared bits are burned
    estimate.remaining_alice.bits.push_back(sifted_alice.bits[pos]);
    estimate.remaining_alice.source_indices.push_back(sifted_alice.source_indices[pos]);
    estimate.remaining_bob.bits.push_back(sifted_bob.bits[pos]);
    estimate.remaining_bob.source_indices.push_back(sifted_bob.source_indices[pos]);
  }
  return estimate;
}

QkdSessionReport run_session(const SessionConfig& config, PublicChannel& channel) {
  QkdSessionReport report;
  report.photons_sent = config.photon_count;
  if (config.photon_count == 0) {
    report.abort = true;
    return report;
  }

  RandomStream master(config.seed, "session");
  RandomStream alice_rng = master.substream("alice");
  RandomStream bob_rng = master.substream("bob");
  RandomStream eve_rng = master.substream("eve");
  RandomStream link_rng = master.substream("link");
  RandomStream qber_rng = master.substream("qber");
  const auto collect_streams = [&](QkdSessionReport& r) {
    r.streams = {usage_of(alice_rng), usage_of(bob_rng), usage_of(eve_rng),
                 usage_of(link_rng), usage_of(qber_rng)};
  };

  std::vector<AliceRecord> alice_records;
  std::vector<BobRecord> bob_records;
  alice_records.reserve(config.photon_count);
  bob_records.reserve(config.photon_count);
  report.transcript.reserve(config.photon_count);

  for (std::size_t i = 0; i < config.photon_count; ++i) {
    AliceRecord alice;
    alice.index = i;
    alice.bit = alice_rng.bernoulli(0.5) ? 1 : 0;
    alice.basis = alice_rng.bernoulli(0.5) ? Basis::Cross : Basis::Plus;

    Photon photon;
    photon.id = i;
    photon.polarization = alice_prepare(alice.bit, alice.basis);

    const bool lost = config.photon_loss_probability > 0.0 &&
                      link_rng.bernoulli(config.photon_loss_probability);

    if (!lost && config.eve_enabled &&
        eve_rng.bernoulli(config.eve_intercept_probability)) {
      photon = eve_intercept_resend(photon, eve_rng).resent;
    }

    BobRecord bob;
    bob.index = i;
    bob.basis = bob_rng.bernoulli(0.5) ? Basis::Cross : Basis::Plus;
    bob.detected = !lost;
    if (bob.detected) bob.outcome = bob_measure(photon, bob.basis, bob_rng);

    QkdRecord row;
    row.index = i;
    row.alice_bit = alice.bit;
    row.alice_basis = alice.basis;
    row.alice_state_deg = alice_prepare(alice.bit, alice.basis).angle_deg();
    row.bob_basis = bob.basis;
    row.bob_outcome = bob.outcome;
    row.detected = bob.detected;
    row.kept = bob.detected && alice.basis == bob.basis;
    report.transcript.push_back(row);

    alice_records.push_back(alice);
    bob_records.push_back(bob);
  }

  SiftOutcome sifted = sift(alice_records, bob_records, channel);
  report.sifted_length = sifted.alice.size();
  if (report.sifted_length == 0) {
    report.abort = true;
    collect_streams(report);
    return report;
  }

  QberEstimate estimate = estimate_qber(sifted.alice, sifted.bob, config.compare_fraction,
                                        qber_rng, channel, config.qber_threshold);
  report.compared_count = estimate.compared_count;
  report.mismatches = estimate.mismatches;
  report.qber = estimate.qber;
  report.eve_detected = estimate.eve_detected;
  report.abort = estimate.eve_detected;
  report.final_key = std::move(estimate.remaining_alice);
  report.final_key_bob = std::move(estimate.remaining_bob);

  for (auto& row : report.transcript) {
    // A kept row not present in the surviving key was publicly compared.
    if (!row.kept) continue;
    const bool survives =
        std::binary_search(report.final_key.source_indices.begin(),
                           report.final_key.source_indices.end(), row.index);
    row.publicly_compared = !survives;
  }
  collect_streams(report);
  return report;
}

}  // namespace qbot::qkd
