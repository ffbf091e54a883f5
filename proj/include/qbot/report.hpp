#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <qbot/interferometer.hpp>
#include <qbot/random.hpp>
#include <qbot/scenario.hpp>

namespace qbot::harness {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InterferometerSummary {
  interferometer::OutcomeDistribution analytic;
  interferometer::StreamCounts counts;
  std::uint64_t photons = 0;
};

struct QkdSummary {
  std::size_t photons_sent = 0;
  std::size_t sifted_length = 0;
  std::size_t compared_count = 0;
  std::size_t mismatches = 0;
  double qber = 0.0;
  bool eve_detected = false;
  bool abort = false;
  std::size_t final_key_length = 0;
  bool keys_match = false;
  std::string key_digest;  // FNV-1a of Alice's final key bits
};

struct EntanglementSummary {
  std::size_t pairs_generated = 0;
  std::size_t events_a = 0;
  std::size_t events_b = 0;
  std::size_t dark_counts_a = 0;
  std::size_t dark_counts_b = 0;
  std::size_t coincidences = 0;
  std::size_t true_coincidences = 0;
  std::size_t accidental_coincidences = 0;
  std::optional<double> anticorrelated_fraction{};
  std::vector<std::pair<std::string, std::int64_t>> clock_offsets_ns;
};

struct RobotSummary {
  std::vector<QkdSummary> sessions;
  std::size_t dispatches = 0;
  std::int64_t ticks = 0;
  std::string command_trace;      // e.g. "M,H,M,M" (first 64 commands)
  std::string trajectory_digest;  // FNV-1a over the trajectory log lines
  std::vector<std::pair<std::string, robotnet::Vec3>> final_poses;
  std::optional<EntanglementSummary> entanglement{};
};

/// Deterministic, machine-readable results document. Byte-identical across
/// runs of the same scenario file.
struct SimulationReport {
  Scenario scenario;  // fully resolved echo, defaults included
  bool aborted = false;
  std::optional<InterferometerSummary> interferometer{};
  std::optional<QkdSummary> qkd{};
  std::optional<EntanglementSummary> entanglement{};
  std::optional<RobotSummary> robots{};
  std::vector<StreamUsage> streams;
  std::vector<std::string> event_log;  // newline-delimited records
};

/// JSON serialization with stable key order and 12-significant-digit floats.
std::string report_to_json(const SimulationReport& report, int indent = 2);

/// Flat key,value table of the same content.
std::string report_to_csv(const SimulationReport& report);

struct WrittenFiles {
  std::filesystem::path report_path;
  std::filesystem::path event_log_path;
};

/// Write report.json (or report.csv) plus events.log into out_dir.
WrittenFiles write_report(const SimulationReport& report,
                          const std::filesystem::path& out_dir,
                          const std::string& format = "json");

}  // namespace qbot::harness
