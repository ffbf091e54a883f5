#pragma once

#include <qbot/report.hpp>
#include <qbot/scenario.hpp>

namespace qbot::harness {

/// Execute one validated scenario. Pure function of the scenario contents:
/// the same scenario yields a byte-identical report and event log.
SimulationReport run_scenario(const Scenario& scenario);

/// Run a parameter grid: set the field addressed by json_pointer to each of
/// `steps` evenly spaced values in [from, to], run the scenario, and return a
/// CSV table (one row per grid point, monotone value column, per-experiment
/// metric columns).
std::string run_sweep(const std::string& scenario_text, const std::string& json_pointer,
                      double from, double to, int steps);

}  // namespace qbot::harness
