#include <qbot/channel.hpp>

namespace qbot {

std::string PublicMessage::serialize() const {
  std::string payload;
  switch (kind) {
    case Kind::BasisAnnouncement:
      payload = "B " + sender + " " + std::to_string(index) + " " +
                (value == 0 ? "+" : "x");
      break;
    case Kind::BitDisclosure:
      payload = "D " + sender + " " + std::to_string(index) + " " + std::to_string(value);
      break;
    case Kind::ArrivalTimes: {
      payload = "T " + sender + " " + std::to_string(timestamps_ns.size());
      for (std::int64_t t : timestamps_ns) payload += " " + std::to_string(t);
      break;
    }
  }
  return std::to_string(payload.size()) + ":" + payload;
}

void PublicChannel::post(PublicMessage message) {
  if (closed_) throw ChannelClosed("PublicChannel: channel is closed");
  messages_.push_back(std::move(message));
}

std::string PublicChannel::transcript() const {
  std::string out;
  for (const auto& message : messages_) {
    out += message.serialize();
    out += '\n';
  }
  return out;
}

}  // namespace qbot
