#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <qbot/interferometer.hpp>
#include <qbot/robotnet.hpp>
#include <qbot/spdc.hpp>

namespace qbot::harness {

/// Malformed scenario text (bad syntax, wrong types, unknown fields).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed scenario that violates an invariant; the message names the
/// offending field.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& field, const std::string& detail)
      : std::runtime_error(field + ": " + detail), field_(field) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class Experiment { Interferometer, QkdSession, Entanglement, CombinedRobots };

std::string experiment_name(Experiment experiment);

struct QkdParams {
  bool eve_enabled = false;
  double eve_intercept_probability = 1.0;
  double compare_fraction = 0.1;
  double qber_threshold = 0.05;
  double photon_loss_probability = 0.0;
};

struct DetectorConfig {
  std::string id;
  spdc::DetectorSpec spec;
  // Unset offsets are drawn within +/-50 ns from the "clock" substream.
  bool clock_offset_given = false;
};

struct SpdcParams {
  double pair_rate_hz = 1e6;
  std::int64_t duration_ns = 1'000'000;
  std::int64_t tau_ns = 25;
  std::optional<double> signal_wavelength_nm{};
  std::optional<double> analyzer_deg{};  // same-angle correlation tally
  std::vector<DetectorConfig> detectors;  // defaults to {"alice", "bob"}
};

struct RobotParams {
  std::vector<robotnet::Agent> agents;
  double v0_mps = 1.0;
  robotnet::BitCommandMap mapping = robotnet::BitCommandMap::default_map(1.0);
  robotnet::LinkModel link;
  double dt_s = 1.0;
  std::int64_t horizon_ticks = 16;
  int task_id = 1;
  bool leader_sessions = false;        // leader runs a session to each robot
  bool leader_identical_keys = true;   // leader reuses one key for both
};

/// Declarative experiment description. Every field has an explicit default;
/// the seed is the one exception and must always be given (no implicit
/// entropy anywhere).
struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  Experiment experiment = Experiment::Interferometer;
  std::uint64_t photon_count = 1000;
  interferometer::MachZehnderConfig interferometer;
  QkdParams qkd;
  SpdcParams spdc;
  RobotParams robots;
};

/// Parse and validate a scenario file (JSON). Unknown fields are errors.
Scenario load_scenario(const std::string& path);

/// Same, from an in-memory document.
Scenario parse_scenario(const std::string& text);

/// Validate invariants on an already-built scenario. Throws ValidationError.
void validate_scenario(const Scenario& scenario);

/// Canonical JSON echo of a fully-resolved scenario (used in reports).
std::string scenario_to_json(const Scenario& scenario, int indent = 2);

}  // namespace qbot::harness
