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

namespace qbot::qkd {

using photonics::PbsPort;
using photonics::Photon;
using photonics::PhotonConsumed;
using photonics::PolarizationState;

class InvalidState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TranscriptLengthMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyKey : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// '+' is the rectilinear {0, 90} encoding, 'x' the diagonal {-45, 45} one.
enum class Basis { Plus, Cross };

inline int basis_code(Basis basis) { return basis == Basis::Plus ? 0 : 1; }
inline char basis_char(Basis basis) { return basis == Basis::Plus ? '+' : 'x'; }

/// Merged per-photon protocol transcript row, assembled by run_session.
struct QkdRecord {
  std::size_t index = 0;
  int alice_bit = 0;
  Basis alice_basis = Basis::Plus;
  double alice_state_deg = 0.0;
  Basis bob_basis = Basis::Plus;
  int bob_outcome = 0;
  bool detected = true;  // false when the optical link dropped the slot
  bool kept = false;
  bool publicly_compared = false;
};

/// Post-sifting shared bit sequence plus the photon indices it came from.
struct SiftedKey {
  std::vector<int> bits;
  std::vector<std::size_t> source_indices;

  std::size_t size() const { return bits.size(); }
  bool empty() const { return bits.empty(); }
};

/// What one protocol party privately recorded about a slot.
struct AliceRecord {
  std::size_t index = 0;
  int bit = 0;
  Basis basis = Basis::Plus;
};

struct BobRecord {
  std::size_t index = 0;
  Basis basis = Basis::Plus;
  int outcome = 0;
  bool detected = true;
};

struct SiftOutcome {
  SiftedKey alice;
  SiftedKey bob;
};

struct QberEstimate {
  double qber = 0.0;
  bool eve_detected = false;
  std::size_t compared_count = 0;
  std::size_t mismatches = 0;
  SiftedKey remaining_alice;
  SiftedKey remaining_bob;
};

struct SessionConfig {
  std::uint64_t seed = 0;
  std::size_t photon_count = 0;
  bool eve_enabled = false;
  double eve_intercept_probability = 1.0;
  double compare_fraction = 0.1;
  double qber_threshold = 0.05;
  double photon_loss_probability = 0.0;  // optical-link slot loss
};

struct QkdSessionReport {
  std::size_t photons_sent = 0;
  std::size_t sifted_length = 0;
  std::size_t compared_count = 0;
  std::size_t mismatches = 0;
  double qber = 0.0;
  bool eve_detected = false;
  bool abort = false;
  SiftedKey final_key;        // Alice's side; equals Bob's when abort is false
  SiftedKey final_key_bob;
  std::vector<QkdRecord> transcript;
  std::vector<StreamUsage> streams;
};

/// State encoding: (0,+) -> 0, (1,+) -> 90, (0,x) -> -45, (1,x) -> 45 degrees.
PolarizationState alice_prepare(int bit, Basis basis);

/// The eight-row polarization truth table. Matching bases give the
/// deterministic bit; mismatched bases are a 50/50 coin and the slot is
/// discarded (nullopt). Throws InvalidState off the four BB84 states.
std::optional<int> table1_result(double alice_state_deg, Basis bob_hwp_basis);

/// Bob's measurement, built from the physical elements: his half-wave plate
/// (0 degrees for '+', 22.5 degrees for 'x', i.e. a 45-degree rotation that
/// maps -45 -> 0 and 45 -> 90) followed by the polarizing beam splitter. The
/// sensor on the reflect port reads 1, the transmit port reads 0, and the
/// photon is trapped. For BB84 inputs this reproduces table1_result exactly.
int bob_measure(Photon& photon, Basis bob_basis, RandomStream& rng);

struct EveResult {
  Photon resent;
  int eve_bit = 0;
  Basis eve_basis = Basis::Plus;
};

/// Intercept-resend attack: Eve measures in a uniformly random basis using
/// Bob's apparatus and retransmits a fresh photon prepared from what she saw.
/// The original photon is consumed by her sensor.
EveResult eve_intercept_resend(Photon& photon, RandomStream& rng);

/// Public basis comparison. Both parties announce bases on the channel; the
/// slots where the bases agree (and Bob saw the photon) survive into the
/// sifted keys. Throws TranscriptLengthMismatch on unequal transcripts.
SiftOutcome sift(std::span<const AliceRecord> alice_records,
                 std::span<const BobRecord> bob_records, PublicChannel& channel);

/// Disclose a deterministic-under-seed random sample of sifted positions,
/// estimate the error rate from it, and strip the disclosed bits from the
/// key. eve_detected when the estimate exceeds the threshold. Throws EmptyKey
/// when there is nothing to sample.
QberEstimate estimate_qber(const SiftedKey& sifted_alice, const SiftedKey& sifted_bob,
                           double compare_fraction, RandomStream& rng,
                           PublicChannel& channel, double qber_threshold = 0.05);

/// Full session: prepare -> (optional Eve) -> measure -> sift -> QBER check.
/// Deterministic for a fixed config seed. Substreams per agent keep the
/// transcript stable when Eve or the lossy link is toggled.
QkdSessionReport run_session(const SessionConfig& config, PublicChannel& channel);

}  // namespace qbot::qkd
