#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <qbot/random.hpp>

namespace qbot::robotnet {

class UnmappedBit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StaleCoincidence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Role { Alice, Bob, Eve, Leader };
enum class AgentKind { Ground, Aerial };

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct TaskLogEntry {
  int task_id = 0;
  std::int64_t tick = 0;

  friend bool operator==(const TaskLogEntry&, const TaskLogEntry&) = default;
};

struct Agent {
  std::string id;
  Role role = Role::Alice;
  AgentKind kind = AgentKind::Ground;
  Vec3 pose;
  double heading_deg = 0.0;
  Vec3 velocity;
  std::vector<TaskLogEntry> task_log;
};

/// Motion command decoded from a key bit or an entanglement trigger.
struct Command {
  enum class Kind { Move, Halt, Task };

  Kind kind = Kind::Halt;
  double speed_mps = 0.0;
  int task_id = 0;

  static Command move(double speed_mps) {
    return Command{Kind::Move, speed_mps, 0};
  }
  static Command halt() { return Command{Kind::Halt, 0.0, 0}; }
  static Command task(int task_id) { return Command{Kind::Task, 0.0, task_id}; }

  friend bool operator==(const Command&, const Command&) = default;
};

/// Bit -> command table. The default protocol moves on 1 and halts on 0; any
/// other digital protocol can be configured in its place.
struct BitCommandMap {
  std::optional<Command> on_zero = Command::halt();
  std::optional<Command> on_one;  // filled with move(v0) by default_map

  static BitCommandMap default_map(double v0_mps) {
    BitCommandMap map;
    map.on_zero = Command::halt();
    map.on_one = Command::move(v0_mps);
    return map;
  }
};

/// Free-space optical link availability: a range cutoff, a pointing cone
/// around the transmitter heading, and a Bernoulli availability inside it.
/// This stands in for the camera/servo tracking loop; a failed slot simply
/// loses the photon.
struct LinkModel {
  double max_range_m = 100.0;
  double max_pointing_error_deg = 180.0;
  double availability = 1.0;
};

Command map_bit_to_command(int bit, const BitCommandMap& mapping);

bool link_available(const Agent& tx, const Agent& rx, const LinkModel& model,
                    RandomStream& rng);

/// Advance every agent by one tick. Move sets the velocity along the current
/// heading, Halt zeroes it, Task leaves motion untouched; then poses
/// integrate velocity over dt. Ground agents stay at z = 0.
void step_world(std::vector<Agent>& agents,
                const std::map<std::string, Command>& commands, double dt_s);

struct DispatchRecord {
  std::uint64_t pair_id = 0;
  int task_id = 0;
  std::int64_t tick = 0;
  std::string agent_a;
  std::string agent_b;
};

/// Dispatches the simultaneous-task trigger fired by a detected coincidence.
/// Both robots log the same (task, tick) entry; replaying a pair that was
/// already dispatched throws StaleCoincidence.
class EntanglementTrigger {
 public:
  DispatchRecord dispatch(std::uint64_t pair_id, int task_id, std::int64_t tick,
                          Agent& robot_a, Agent& robot_b);

 private:
  std::unordered_set<std::uint64_t> dispatched_;
};

}  // namespace qbot::robotnet
