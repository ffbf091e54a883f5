#include <qbot/report.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include <json.hpp>

namespace qbot::harness {

using nlohmann::ordered_json;

namespace {

double round12(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return std::strtod(buf, nullptr);
}

ordered_json qkd_json(const QkdSummary& summary) {
  ordered_json out;
  out["photons_sent"] = summary.photons_sent;
  out["sifted_length"] = summary.sifted_length;
  out["compared_count"] = summary.compared_count;
  out["mismatches"] = summary.mismatches;
  out["qber"] = round12(summary.qber);
  out["eve_detected"] = summary.eve_detected;
  out["abort"] = summary.abort;
  out["final_key_length"] = summary.final_key_length;
  out["keys_match"] = summary.keys_match;
  out["key_digest"] = summary.key_digest;
  return out;
}

ordered_json entanglement_json(const EntanglementSummary& summary) {
  ordered_json out;
  out["pairs_generated"] = summary.pairs_generated;
  out["events_a"] = summary.events_a;
  out["events_b"] = summary.events_b;
  out["dark_counts_a"] = summary.dark_counts_a;
  out["dark_counts_b"] = summary.dark_counts_b;
  out["coincidences"] = summary.coincidences;
  out["true_coincidences"] = summary.true_coincidences;
  out["accidental_coincidences"] = summary.accidental_coincidences;
  out["anticorrelated_fraction"] =
      summary.anticorrelated_fraction
          ? ordered_json(round12(*summary.anticorrelated_fraction))
          : ordered_json(nullptr);
  ordered_json offsets = ordered_json::array();
  for (const auto& [id, offset] : summary.clock_offsets_ns)
    offsets.push_back({{"detector_id", id}, {"clock_offset_ns", offset}});
  out["clock_offsets_ns"] = offsets;
  return out;
}

void flatten(const ordered_json& value, const std::string& prefix, std::string& out) {
  if (value.is_object()) {
    for (const auto& [key, child] : value.items())
      flatten(child, prefix.empty() ? key : prefix + "." + key, out);
  } else if (value.is_array()) {
    std::size_t i = 0;
    for (const auto& child : value) flatten(child, prefix + "." + std::to_string(i++), out);
  } else {
    out += prefix;
    out += ',';
    out += value.dump();
    out += '\n';
  }
}

}  // namespace

std::string report_to_json(const SimulationReport& report, int indent) {
  ordered_json document;
  document["name"] = report.scenario.name;
  document["seed"] = report.scenario.seed;
  document["experiment"] = experiment_name(report.scenario.experiment);
  document["aborted"] = report.aborted;
  document["scenario"] = ordered_json::parse(scenario_to_json(report.scenario, 0));

  if (report.interferometer) {
    const auto& summary = *report.interferometer;
    ordered_json out;
    out["photons"] = summary.photons;
    out["p_detector_b"] = round12(summary.analytic.p_detector_b);
    out["p_detector_c"] = round12(summary.analytic.p_detector_c);
    out["p_absorbed"] = round12(summary.analytic.p_absorbed);
    out["count_b"] = summary.counts.detector_b;
    out["count_c"] = summary.counts.detector_c;
    out["count_absorbed"] = summary.counts.absorbed;
    document["interferometer"] = out;
  }
  if (report.qkd) document["qkd"] = qkd_json(*report.qkd);
  if (report.entanglement) document["entanglement"] = entanglement_json(*report.entanglement);
  if (report.robots) {
    const auto& summary = *report.robots;
    ordered_json out;
    ordered_json sessions = ordered_json::array();
    for (const auto& session : summary.sessions) sessions.push_back(qkd_json(session));
    out["sessions"] = sessions;
    out["dispatches"] = summary.dispatches;
    out["ticks"] = summary.ticks;
    out["command_trace"] = summary.command_trace;
    out["trajectory_digest"] = summary.trajectory_digest;
    ordered_json poses = ordered_json::array();
    for (const auto& [id, pose] : summary.final_poses)
      poses.push_back({{"agent_id", id},
                       {"x", round12(pose.x)},
                       {"y", round12(pose.y)},
                       {"z", round12(pose.z)}});
    out["final_poses"] = poses;
    out["entanglement"] = summary.entanglement
                              ? entanglement_json(*summary.entanglement)
                              : ordered_json(nullptr);
    document["robots"] = out;
  }

  ordered_json streams = ordered_json::array();
  for (const auto& stream : report.streams)
    streams.push_back(
        {{"name", stream.name}, {"seed", stream.seed}, {"draws", stream.draws}});
  document["streams"] = streams;
  document["event_log"] = "events.log";
  return document.dump(indent) + "\n";
}

std::string report_to_csv(const SimulationReport& report) {
  const ordered_json document = ordered_json::parse(report_to_json(report, 0));
  std::string out = "key,value\n";
  flatten(document, "", out);
  return out;
}

WrittenFiles write_report(const SimulationReport& report,
                          const std::filesystem::path& out_dir,
                          const std::string& format) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("write_report: cannot create " + out_dir.string());

  WrittenFiles files;
  files.report_path = out_dir / (format == "csv" ? "report.csv" : "report.json");
  files.event_log_path = out_dir / "events.log";

  std::ofstream report_file(files.report_path, std::ios::binary);
  if (!report_file) throw IoError("write_report: cannot open " + files.report_path.string());
  report_file << (format == "csv" ? report_to_csv(report) : report_to_json(report));

  std::ofstream log_file(files.event_log_path, std::ios::binary);
  if (!log_file) throw IoError("write_report: cannot open " + files.event_log_path.string());
  for (const auto& line : report.event_log) log_file << line << '\n';

  return files;
}

}  // namespace qbot::harness
