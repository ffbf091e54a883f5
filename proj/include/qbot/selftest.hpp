#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <qbot/spdc.hpp>

namespace qbot::selftest {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Independent O(n^2) coincidence matcher used as the oracle against
/// spdc::find_coincidences. Encodes the matching contract directly: walk the
/// A events in time order; each one takes the earliest still-unmatched B
/// event within the window. Returns (index_a, index_b) pairs.
std::vector<std::pair<std::size_t, std::size_t>> brute_force_coincidences(
    std::span<const spdc::DetectionEvent> events_a,
    std::span<const spdc::DetectionEvent> events_b, std::int64_t tau_ns);

/// One row of the truth-table verification run by the `table1` subcommand.
struct Table1Row {
  std::string alice_state;
  std::string bob_basis;
  std::string expected;   // "0", "1" or "discard"
  bool deterministic = false;
  double fraction_ones = 0.0;  // observed bit=1 fraction
  bool passed = false;
};

/// Verify all eight truth-table rows: deterministic rows must be exact over
/// every trial, random rows 50/50 within +/-0.01 over `trials` samples.
std::vector<Table1Row> verify_table1(std::uint64_t seed, std::size_t trials = 100000);

/// The acceptance suite. Each check pins its tolerances internally.
CheckResult check_table1_exactness(std::uint64_t seed);
CheckResult check_interferometer_law(std::uint64_t seed);
CheckResult check_blocked_arm(std::uint64_t seed);
CheckResult check_no_eve_session(std::uint64_t seed);
CheckResult check_eve_session(std::uint64_t seed);
CheckResult check_spdc_conservation(std::uint64_t seed);
CheckResult check_entanglement_correlations(std::uint64_t seed);
CheckResult check_coincidence_matching(std::uint64_t seed);
CheckResult check_robot_protocol(std::uint64_t seed);
CheckResult check_determinism(std::uint64_t seed);

std::vector<CheckResult> run_all(std::uint64_t seed);

}  // namespace qbot::selftest
