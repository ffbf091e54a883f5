#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qbot {

class ChannelClosed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One record on the public classical channel. Everything posted here is
/// visible to an eavesdropper, so the protocol may only put basis choices,
/// disclosed check bits and photon arrival times on it -- never key bits.
struct PublicMessage {
  enum class Kind { BasisAnnouncement, BitDisclosure, ArrivalTimes };

  Kind kind = Kind::BasisAnnouncement;
  std::string sender;
  std::size_t index = 0;  // photon index for basis/bit records
  int value = 0;          // basis code (0 = '+', 1 = 'x') or disclosed bit
  std::vector<std::int64_t> timestamps_ns;  // arrival-time records only

  /// Length-prefixed wire form, e.g. "9:B alice 4 +".
  std::string serialize() const;
};

/// Unencrypted broadcast channel with a complete message log. The harness
/// writes the log verbatim so tests can assert exactly what an eavesdropper
/// could have seen.
class PublicChannel {
 public:
  void post(PublicMessage message);
  void close() { closed_ = true; }
  bool closed() const { return closed_; }

  const std::vector<PublicMessage>& messages() const { return messages_; }

  /// Concatenated length-prefixed records, newline-separated.
  std::string transcript() const;

 private:
  std::vector<PublicMessage> messages_;
  bool closed_ = false;
};

}  // namespace qbot
