#include <qbot/robotnet.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qbot::robotnet {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
}  // namespace

Command map_bit_to_command(int bit, const BitCommandMap& mapping) {
  const std::optional<Command>& entry = bit == 0 ? mapping.on_zero : mapping.on_one;
  if (!entry) throw UnmappedBit("map_bit_to_command: no command for bit " + std::to_string(bit));
  return *entry;
}

bool link_available(const Agent& tx, const Agent& rx, const LinkModel& model,
                    RandomStream& rng) {
  const double dx = rx.pose.x - tx.pose.x;
  const double dy = rx.pose.y - tx.pose.y;
  const double dz = rx.pose.z - tx.pose.z;
  const double distance = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (distance > model.max_range_m) return false;

  if (distance > 0.0) {
    // Angle between the transmitter heading (in the xy plane) and the line of
    // sight; co-located agents are treated as aligned.
    const double hx = std::cos(tx.heading_deg * kDegToRad);
    const double hy = std::sin(tx.heading_deg * kDegToRad);
    const double cos_err = (dx * hx + dy * hy) / distance;
    const double bearing_error_deg =
        std::acos(std::clamp(cos_err, -1.0, 1.0)) * kRadToDeg;
    if (bearing_error_deg > model.max_pointing_error_deg) return false;
  }
  return rng.bernoulli(model.availability);
}

void step_world(std::vector<Agent>& agents,
                const std::map<std::string, Command>& commands, double dt_s) {
  if (dt_s <= 0.0) throw std::invalid_argument("step_world: dt must be positive");
  for (Agent& agent : agents) {
    const auto it = commands.find(agent.id);
    if (it != commands.end()) {
      const Command& command = it->second;
      switch (command.kind) {
        case Command::Kind::Move: {
          agent.velocity.x = command.speed_mps * std::cos(agent.heading_deg * kDegToRad);
          agent.velocity.y = command.speed_mps * std::sin(agent.heading_deg * kDegToRad);
          agent.velocity.z = 0.0;
          break;
        }
        case Command::Kind::Halt:
          agent.velocity = Vec3{};
          break;
        case Command::Kind::Task:
          break;  // tasks carry no kinematic effect
      }
    }
    agent.pose.x += agent.velocity.x * dt_s;
    agent.pose.y += agent.velocity.y * dt_s;
    agent.pose.z += agent.velocity.z * dt_s;
    if (agent.kind == AgentKind::Ground) agent.pose.z = 0.0;
  }
}

DispatchRecord EntanglementTrigger::dispatch(std::uint64_t pair_id, int task_id,
                                             std::int64_t tick, Agent& robot_a,
                                             Agent& robot_b) {
  if (!dispatched_.insert(pair_id).second)
    throw StaleCoincidence("EntanglementTrigger: pair " + std::to_string(pair_id) +
                           " was already dispatched");
  robot_a.task_log.push_back(TaskLogEntry{task_id, tick});
  robot_b.task_log.push_back(TaskLogEntry{task_id, tick});
  return DispatchRecord{pair_id, task_id, tick, robot_a.id, robot_b.id};
}

}  // namespace qbot::robotnet
