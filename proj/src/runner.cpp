#include <qbot/runner.hpp>

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <map>

#include <json.hpp>

#include <qbot/channel.hpp>
#include <qbot/qkd.hpp>

namespace qbot::harness {

using nlohmann::ordered_json;

namespace {

std::string event_line(std::int64_t t, const std::string& stream,
                       const std::string& type, ordered_json payload) {
  ordered_json line;
  line["t"] = t;
  line["stream"] = stream;
  line["type"] = type;
  line["payload"] = std::move(payload);
  return line.dump();
}

std::string hex64(std::uint64_t value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, value);
  return buf;
}

std::string channel_type_name(PublicMessage::Kind kind) {
  switch (kind) {
    case PublicMessage::Kind::BasisAnnouncement: return "basis";
    case PublicMessage::Kind::BitDisclosure: return "disclose";
    case PublicMessage::Kind::ArrivalTimes: return "arrival_times";
  }
  return "basis";
}

void log_channel(const PublicChannel& channel, std::vector<std::string>& event_log) {
  std::int64_t ordinal = 0;
  for (const auto& message : channel.messages()) {
    event_log.push_back(event_line(ordinal++, "channel", channel_type_name(message.kind),
                                   {{"record", message.serialize()}}));
  }
}

void log_streams(const std::vector<StreamUsage>& streams,
                 std::vector<std::string>& event_log) {
  for (const auto& stream : streams) {
    event_log.push_back(event_line(
        0, "rng", "stream_usage",
        {{"name", stream.name}, {"seed", stream.seed}, {"draws", stream.draws}}));
  }
}

QkdSummary summarize_session(const qkd::QkdSessionReport& session) {
  QkdSummary summary;
  summary.photons_sent = session.photons_sent;
  summary.sifted_length = session.sifted_length;
  summary.compared_count = session.compared_count;
  summary.mismatches = session.mismatches;
  summary.qber = session.qber;
  summary.eve_detected = session.eve_detected;
  summary.abort = session.abort;
  summary.final_key_length = session.final_key.size();
  summary.keys_match = session.final_key.bits == session.final_key_bob.bits;
  std::string bits;
  bits.reserve(session.final_key.size());
  for (int bit : session.final_key.bits) bits.push_back(bit ? '1' : '0');
  summary.key_digest = hex64(fnv1a64(bits));
  return summary;
}

qkd::SessionConfig session_config(const Scenario& scenario, std::uint64_t seed,
                                  double loss_probability) {
  qkd::SessionConfig config;
  config.seed = seed;
  config.photon_count = scenario.photon_count;
  config.eve_enabled = scenario.qkd.eve_enabled;
  config.eve_intercept_probability = scenario.qkd.eve_intercept_probability;
  config.compare_fraction = scenario.qkd.compare_fraction;
  config.qber_threshold = scenario.qkd.qber_threshold;
  config.photon_loss_probability = loss_probability;
  return config;
}

void run_interferometer_experiment(const Scenario& scenario, SimulationReport& report) {
  RandomStream master(scenario.seed, "master");
  RandomStream stream = master.substream("mzi");

  InterferometerSummary summary;
  summary.photons = scenario.photon_count;
  summary.analytic = interferometer::detection_probability(scenario.interferometer);
  summary.counts =
      interferometer::simulate_stream(scenario.interferometer, scenario.photon_count, stream);
  report.interferometer = summary;

  report.event_log.push_back(event_line(0, stream.name(), "counts",
                                        {{"detector_b", summary.counts.detector_b},
                                         {"detector_c", summary.counts.detector_c},
                                         {"absorbed", summary.counts.absorbed}}));
  report.streams.push_back(usage_of(stream));
  log_streams(report.streams, report.event_log);
}

void run_qkd_experiment(const Scenario& scenario, SimulationReport& report) {
  PublicChannel channel;
  const qkd::SessionConfig config =
      session_config(scenario, scenario.seed, scenario.qkd.photon_loss_probability);
  const qkd::QkdSessionReport session = qkd::run_session(config, channel);

  report.qkd = summarize_session(session);
  report.aborted = session.abort;
  log_channel(channel, report.event_log);
  report.streams = session.streams;
  log_streams(report.streams, report.event_log);
}

struct EntanglementStage {
  EntanglementSummary summary;
  std::vector<spdc::Coincidence> coincidences;
};

EntanglementStage run_entanglement_stage(const Scenario& scenario, RandomStream& master,
                                         PublicChannel& channel,
                                         std::vector<std::string>& event_log,
                                         std::vector<StreamUsage>& streams) {
  const SpdcParams& params = scenario.spdc;
  EntanglementStage stage;

  spdc::PumpSource source;
  source.pair_rate_hz = params.pair_rate_hz;
  source.signal_wavelength_nm = params.signal_wavelength_nm;

  RandomStream source_rng = master.substream("source");
  RandomStream clock_rng = master.substream("clock");
  RandomStream analyzer_rng = master.substream("analyzer");

  auto pairs = spdc::generate_pairs(source, params.duration_ns, source_rng);
  stage.summary.pairs_generated = pairs.size();

  // Detector A sees the signal photons, detector B the idlers; extra
  // detectors in the config only contribute their ids in order.
  const DetectorConfig& det_a_cfg = params.detectors.at(0);
  const DetectorConfig& det_b_cfg = params.detectors.at(1);
  spdc::DetectorSpec spec_a = det_a_cfg.spec;
  spdc::DetectorSpec spec_b = det_b_cfg.spec;
  // Unpinned clock offsets get drawn within +/-50 ns, once per detector.
  if (!det_a_cfg.clock_offset_given)
    spec_a.clock_offset_ns = static_cast<std::int64_t>(clock_rng.uniform_u64(101)) - 50;
  if (!det_b_cfg.clock_offset_given)
    spec_b.clock_offset_ns = static_cast<std::int64_t>(clock_rng.uniform_u64(101)) - 50;
  stage.summary.clock_offsets_ns = {{det_a_cfg.id, spec_a.clock_offset_ns},
                                    {det_b_cfg.id, spec_b.clock_offset_ns}};

  RandomStream det_a_rng = master.substream("det/" + det_a_cfg.id);
  RandomStream det_b_rng = master.substream("det/" + det_b_cfg.id);
  RandomStream dark_a_rng = master.substream("dark/" + det_a_cfg.id);
  RandomStream dark_b_rng = master.substream("dark/" + det_b_cfg.id);

  std::size_t anticorrelated = 0;
  std::size_t measured_pairs = 0;

  std::vector<spdc::DetectionEvent> events_a;
  std::vector<spdc::DetectionEvent> events_b;
  for (auto& pair : pairs) {
    if (params.analyzer_deg) {
      const auto port_signal =
          spdc::measure_entangled(pair, spdc::PairMember::Signal, *params.analyzer_deg,
                                  analyzer_rng);
      const auto port_idler =
          spdc::measure_entangled(pair, spdc::PairMember::Idler, *params.analyzer_deg,
                                  analyzer_rng);
      ++measured_pairs;
      if (port_signal != port_idler) ++anticorrelated;
    }
    if (spdc::bandpass_pass(pair.signal)) {
      if (auto event = spdc::detect(pair.signal, spec_a, det_a_cfg.id, det_a_rng))
        events_a.push_back(std::move(*event));
    }
    if (spdc::bandpass_pass(pair.idler)) {
      if (auto event = spdc::detect(pair.idler, spec_b, det_b_cfg.id, det_b_rng))
        events_b.push_back(std::move(*event));
    }
  }
  if (params.analyzer_deg && measured_pairs > 0) {
    stage.summary.anticorrelated_fraction =
        static_cast<double>(anticorrelated) / static_cast<double>(measured_pairs);
  }

  auto darks_a = spdc::generate_dark_counts(spec_a, det_a_cfg.id, params.duration_ns, dark_a_rng);
  auto darks_b = spdc::generate_dark_counts(spec_b, det_b_cfg.id, params.duration_ns, dark_b_rng);
  stage.summary.dark_counts_a = darks_a.size();
  stage.summary.dark_counts_b = darks_b.size();
  events_a.insert(events_a.end(), darks_a.begin(), darks_a.end());
  events_b.insert(events_b.end(), darks_b.begin(), darks_b.end());
  std::sort(events_a.begin(), events_a.end(), spdc::event_time_less);
  std::sort(events_b.begin(), events_b.end(), spdc::event_time_less);
  stage.summary.events_a = events_a.size();
  stage.summary.events_b = events_b.size();

  for (const auto& event : events_a) {
    event_log.push_back(event_line(
        event.timestamp_ns, "det/" + det_a_cfg.id, "detection",
        {{"detector_id", event.detector_id},
         {"timestamp_ns", event.timestamp_ns},
         {"source",
          event.source == spdc::DetectionEvent::Source::TruePhoton ? "photon" : "dark"},
         {"photon_id", event.photon_id}}));
  }
  for (const auto& event : events_b) {
    event_log.push_back(event_line(
        event.timestamp_ns, "det/" + det_b_cfg.id, "detection",
        {{"detector_id", event.detector_id},
         {"timestamp_ns", event.timestamp_ns},
         {"source",
          event.source == spdc::DetectionEvent::Source::TruePhoton ? "photon" : "dark"},
         {"photon_id", event.photon_id}}));
  }

  // Publish A's arrival times so B can run the AND-gate comparison.
  spdc::share_arrival_times(events_a, det_a_cfg.id, channel);

  stage.coincidences =
      spdc::find_coincidences(events_a, events_b, spdc::CoincidenceWindow{params.tau_ns});
  stage.summary.coincidences = stage.coincidences.size();
  for (const auto& coincidence : stage.coincidences) {
    const bool true_pair =
        coincidence.a.source == spdc::DetectionEvent::Source::TruePhoton &&
        coincidence.b.source == spdc::DetectionEvent::Source::TruePhoton &&
        coincidence.a.photon_id / 2 == coincidence.b.photon_id / 2;
    if (true_pair)
      ++stage.summary.true_coincidences;
    else
      ++stage.summary.accidental_coincidences;
  }

  streams.push_back(usage_of(source_rng));
  streams.push_back(usage_of(clock_rng));
  streams.push_back(usage_of(analyzer_rng));
  streams.push_back(usage_of(det_a_rng));
  streams.push_back(usage_of(det_b_rng));
  streams.push_back(usage_of(dark_a_rng));
  streams.push_back(usage_of(dark_b_rng));
  return stage;
}

void run_entanglement_experiment(const Scenario& scenario, SimulationReport& report) {
  RandomStream master(scenario.seed, "master");
  PublicChannel channel;
  EntanglementStage stage =
      run_entanglement_stage(scenario, master, channel, report.event_log, report.streams);
  report.entanglement = stage.summary;
  log_channel(channel, report.event_log);
  log_streams(report.streams, report.event_log);
}

std::string command_code(const robotnet::Command& command) {
  switch (command.kind) {
    case robotnet::Command::Kind::Move: return "M";
    case robotnet::Command::Kind::Halt: return "H";
    case robotnet::Command::Kind::Task: return "T" + std::to_string(command.task_id);
  }
  return "H";
}

void log_trajectory(std::int64_t tick, const std::vector<robotnet::Agent>& agents,
                    const std::map<std::string, robotnet::Command>& commands,
                    std::vector<std::pair<std::int64_t, std::string>>& trajectory_lines) {
  for (const auto& agent : agents) {
    const auto it = commands.find(agent.id);
    const std::string code = it == commands.end() ? "-" : command_code(it->second);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%" PRId64 ",%s,%.6f,%.6f,%.6f,%s", tick,
                  agent.id.c_str(), agent.pose.x, agent.pose.y, agent.pose.z, code.c_str());
    trajectory_lines.emplace_back(tick, buf);
  }
}

void run_combined_experiment(const Scenario& scenario, SimulationReport& report) {
  RandomStream master(scenario.seed, "master");
  PublicChannel channel;
  RobotSummary summary;

  std::vector<robotnet::Agent> agents = scenario.robots.agents;
  auto find_agent = [&](robotnet::Role role) -> robotnet::Agent* {
    for (auto& agent : agents)
      if (agent.role == role) return &agent;
    return nullptr;
  };
  robotnet::Agent* alice = find_agent(robotnet::Role::Alice);
  robotnet::Agent* bob = find_agent(robotnet::Role::Bob);
  robotnet::Agent* leader = find_agent(robotnet::Role::Leader);

  // Stage 1: entangled-pair source and coincidence detection.
  EntanglementStage stage =
      run_entanglement_stage(scenario, master, channel, report.event_log, report.streams);
  summary.entanglement = stage.summary;

  std::vector<std::pair<std::int64_t, std::string>> trajectory_lines;
  std::int64_t tick = 0;

  // Stage 2: every coincidence triggers the same task on both robots, one
  // tick per trigger, executed inside that tick's world step.
  robotnet::EntanglementTrigger trigger;
  std::vector<std::uint64_t> dispatched_pairs;
  for (const auto& coincidence : stage.coincidences) {
    if (coincidence.a.source != spdc::DetectionEvent::Source::TruePhoton ||
        coincidence.b.source != spdc::DetectionEvent::Source::TruePhoton)
      continue;  // dark counts never reference a pair
    if (coincidence.a.photon_id / 2 != coincidence.b.photon_id / 2)
      continue;  // accidental cross-pair click: no single pair to reference
    const std::uint64_t pair_id = coincidence.a.photon_id / 2;
    if (std::find(dispatched_pairs.begin(), dispatched_pairs.end(), pair_id) !=
        dispatched_pairs.end())
      continue;
    dispatched_pairs.push_back(pair_id);
    const auto record =
        trigger.dispatch(pair_id, scenario.robots.task_id, tick, *alice, *bob);
    report.event_log.push_back(event_line(tick, "trigger", "dispatch",
                                          {{"pair_id", record.pair_id},
                                           {"task_id", record.task_id},
                                           {"agent_a", record.agent_a},
                                           {"agent_b", record.agent_b}}));
    std::map<std::string, robotnet::Command> commands{
        {alice->id, robotnet::Command::task(record.task_id)},
        {bob->id, robotnet::Command::task(record.task_id)}};
    robotnet::step_world(agents, commands, scenario.robots.dt_s);
    log_trajectory(tick, agents, commands, trajectory_lines);
    ++tick;
  }
  summary.dispatches = dispatched_pairs.size();

  // Stage 3: the first coincidence authorizes key exchange. The sifted key
  // then drives both entangled robots, one bit per tick.
  std::vector<int> drive_bits;
  if (!dispatched_pairs.empty()) {
    RandomStream link_probe = master.substream("link-probe");
    robotnet::LinkModel geometry = scenario.robots.link;
    geometry.availability = 1.0;
    const bool aligned = robotnet::link_available(*alice, *bob, geometry, link_probe);
    const double loss = aligned ? 1.0 - scenario.robots.link.availability : 1.0;
    report.streams.push_back(usage_of(link_probe));

    const bool leader_mode = scenario.robots.leader_sessions && leader != nullptr;
    if (leader_mode) {
      // The leader keys both entangled robots. With identical keys one
      // session is shared; otherwise each robot gets its own session and the
      // first key drives the common command stream.
      const std::uint64_t seed_a = master.substream("qkd/leader-a").seed();
      const qkd::QkdSessionReport session_a =
          qkd::run_session(session_config(scenario, seed_a, loss), channel);
      summary.sessions.push_back(summarize_session(session_a));
      for (const auto& stream : session_a.streams) report.streams.push_back(stream);
      bool aborted = session_a.abort;
      if (!scenario.robots.leader_identical_keys) {
        const std::uint64_t seed_b = master.substream("qkd/leader-b").seed();
        const qkd::QkdSessionReport session_b =
            qkd::run_session(session_config(scenario, seed_b, loss), channel);
        summary.sessions.push_back(summarize_session(session_b));
        for (const auto& stream : session_b.streams) report.streams.push_back(stream);
        aborted = aborted || session_b.abort;
      }
      if (!aborted) drive_bits = session_a.final_key.bits;
      report.aborted = aborted;
    } else {
      const std::uint64_t seed_ab = master.substream("qkd/pair").seed();
      const qkd::QkdSessionReport session =
          qkd::run_session(session_config(scenario, seed_ab, loss), channel);
      summary.sessions.push_back(summarize_session(session));
      for (const auto& stream : session.streams) report.streams.push_back(stream);
      report.aborted = session.abort;
      if (!session.abort) drive_bits = session.final_key.bits;
    }
  }

  // Stage 4: drive. On abort (or key exhaustion) the robots halt.
  for (std::int64_t step = 0; step < scenario.robots.horizon_ticks; ++step, ++tick) {
    robotnet::Command command = robotnet::Command::halt();
    if (!report.aborted && static_cast<std::size_t>(step) < drive_bits.size())
      command = robotnet::map_bit_to_command(drive_bits[step], scenario.robots.mapping);
    std::map<std::string, robotnet::Command> commands{{alice->id, command},
                                                      {bob->id, command}};
    if (static_cast<std::size_t>(step) < drive_bits.size() &&
        summary.command_trace.size() < 128) {
      if (!summary.command_trace.empty()) summary.command_trace += ",";
      summary.command_trace += command_code(command);
    }
    robotnet::step_world(agents, commands, scenario.robots.dt_s);
    log_trajectory(tick, agents, commands, trajectory_lines);
  }
  summary.ticks = tick;

  std::string joined;
  for (const auto& [line_tick, line] : trajectory_lines) {
    report.event_log.push_back(
        event_line(line_tick, "world", "trajectory", {{"record", line}}));
    joined += line;
    joined += '\n';
  }
  summary.trajectory_digest = hex64(fnv1a64(joined));
  for (const auto& agent : agents) summary.final_poses.emplace_back(agent.id, agent.pose);

  report.robots = std::move(summary);
  log_channel(channel, report.event_log);
  log_streams(report.streams, report.event_log);
}

}  // namespace

SimulationReport run_scenario(const Scenario& scenario) {
  validate_scenario(scenario);
  SimulationReport report;
  report.scenario = scenario;

  switch (scenario.experiment) {
    case Experiment::Interferometer:
      run_interferometer_experiment(scenario, report);
      break;
    case Experiment::QkdSession:
      run_qkd_experiment(scenario, report);
      break;
    case Experiment::Entanglement:
      run_entanglement_experiment(scenario, report);
      break;
    case Experiment::CombinedRobots:
      run_combined_experiment(scenario, report);
      break;
  }
  return report;
}

std::string run_sweep(const std::string& scenario_text, const std::string& json_pointer,
                      double from, double to, int steps) {
  if (steps < 2) throw ValidationError("steps", "need at least 2 grid points");
  ordered_json base;
  try {
    base = ordered_json::parse(scenario_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what());
  }

  std::string csv = "value,experiment,metric_1,metric_2,metric_3\n";
  for (int i = 0; i < steps; ++i) {
    const double value = from + (to - from) * static_cast<double>(i) / (steps - 1);
    ordered_json document = base;
    document[ordered_json::json_pointer(json_pointer)] = value;
    const Scenario scenario = parse_scenario(document.dump());
    const SimulationReport report = run_scenario(scenario);

    char buf[256];
    if (report.interferometer) {
      const auto& mzi = *report.interferometer;
      const double fraction =
          mzi.photons == 0
              ? 0.0
              : static_cast<double>(mzi.counts.detector_b) / static_cast<double>(mzi.photons);
      std::snprintf(buf, sizeof buf, "%.12g,interferometer,%.12g,%.12g,%.12g\n", value,
                    mzi.analytic.p_detector_b, fraction, mzi.analytic.p_absorbed);
    } else if (report.qkd) {
      std::snprintf(buf, sizeof buf, "%.12g,qkd_session,%.12g,%zu,%d\n", value,
                    report.qkd->qber, report.qkd->sifted_length,
                    report.qkd->eve_detected ? 1 : 0);
    } else if (report.entanglement) {
      std::snprintf(buf, sizeof buf, "%.12g,entanglement,%zu,%zu,%zu\n", value,
                    report.entanglement->coincidences, report.entanglement->events_a,
                    report.entanglement->events_b);
    } else {
      std::snprintf(buf, sizeof buf, "%.12g,combined_robots,%zu,%lld,%d\n", value,
                    report.robots->dispatches, static_cast<long long>(report.robots->ticks),
                    report.aborted ? 1 : 0);
    }
    csv += buf;
  }
  return csv;
}

}  // namespace qbot::harness
