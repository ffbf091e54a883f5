#include <qbot/scenario.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

#include <json.hpp>

namespace qbot::harness {

using nlohmann::ordered_json;

namespace {

// Round to 12 significant digits so serialized reports are reproducible and
// re-serialization of a parsed document is byte-identical.
double round12(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return std::strtod(buf, nullptr);
}

void require_known_fields(const ordered_json& object, const std::string& where,
                          const std::set<std::string>& allowed) {
  for (const auto& [key, _] : object.items()) {
    if (!allowed.contains(key))
      throw ParseError(where + ": unknown field \"" + key + "\"");
  }
}

template <typename T>
T field_or(const ordered_json& object, const std::string& key, T fallback) {
  if (!object.contains(key) || object.at(key).is_null()) return fallback;
  try {
    return object.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(key + ": " + e.what());
  }
}

Experiment parse_experiment(const std::string& text) {
  if (text == "interferometer") return Experiment::Interferometer;
  if (text == "qkd_session") return Experiment::QkdSession;
  if (text == "entanglement") return Experiment::Entanglement;
  if (text == "combined_robots") return Experiment::CombinedRobots;
  throw ValidationError("experiment", "unknown experiment \"" + text + "\"");
}

robotnet::Role parse_role(const std::string& text) {
  if (text == "alice") return robotnet::Role::Alice;
  if (text == "bob") return robotnet::Role::Bob;
  if (text == "eve") return robotnet::Role::Eve;
  if (text == "leader") return robotnet::Role::Leader;
  throw ValidationError("robots.agents.role", "unknown role \"" + text + "\"");
}

std::string role_name(robotnet::Role role) {
  switch (role) {
    case robotnet::Role::Alice: return "alice";
    case robotnet::Role::Bob: return "bob";
    case robotnet::Role::Eve: return "eve";
    case robotnet::Role::Leader: return "leader";
  }
  return "alice";
}

robotnet::AgentKind parse_kind(const std::string& text) {
  if (text == "ground") return robotnet::AgentKind::Ground;
  if (text == "aerial") return robotnet::AgentKind::Aerial;
  throw ValidationError("robots.agents.kind", "unknown kind \"" + text + "\"");
}

robotnet::Vec3 parse_vec3(const ordered_json& value, const std::string& where) {
  if (!value.is_array() || value.size() != 3)
    throw ParseError(where + ": expected [x, y, z]");
  return robotnet::Vec3{value[0].get<double>(), value[1].get<double>(),
                        value[2].get<double>()};
}

robotnet::Command parse_command(const ordered_json& object, const std::string& where) {
  require_known_fields(object, where, {"type", "speed_mps", "task_id"});
  const std::string type = field_or<std::string>(object, "type", "halt");
  if (type == "halt") return robotnet::Command::halt();
  if (type == "move")
    return robotnet::Command::move(field_or<double>(object, "speed_mps", 1.0));
  if (type == "task")
    return robotnet::Command::task(field_or<int>(object, "task_id", 0));
  throw ValidationError(where + ".type", "unknown command type \"" + type + "\"");
}

ordered_json command_to_json(const robotnet::Command& command) {
  ordered_json out;
  switch (command.kind) {
    case robotnet::Command::Kind::Halt:
      out["type"] = "halt";
      break;
    case robotnet::Command::Kind::Move:
      out["type"] = "move";
      out["speed_mps"] = round12(command.speed_mps);
      break;
    case robotnet::Command::Kind::Task:
      out["type"] = "task";
      out["task_id"] = command.task_id;
      break;
  }
  return out;
}

void parse_interferometer(const ordered_json& object, Scenario& scenario) {
  require_known_fields(object, "interferometer",
                       {"arm1_length", "arm2_length", "wavelength", "arm2_blocked",
                        "splitter_amplitude", "delta_override_rad"});
  auto& config = scenario.interferometer;
  config.arm1_length = field_or(object, "arm1_length", config.arm1_length);
  config.arm2_length = field_or(object, "arm2_length", config.arm2_length);
  config.wavelength = field_or(object, "wavelength", config.wavelength);
  config.arm2_blocked = field_or(object, "arm2_blocked", config.arm2_blocked);
  config.splitter_amplitude =
      field_or(object, "splitter_amplitude", config.splitter_amplitude);
  if (object.contains("delta_override_rad") && !object.at("delta_override_rad").is_null())
    config.delta_override_rad = object.at("delta_override_rad").get<double>();
}

void parse_qkd(const ordered_json& object, Scenario& scenario) {
  require_known_fields(object, "qkd",
                       {"eve", "compare_fraction", "qber_threshold",
                        "photon_loss_probability"});
  auto& params = scenario.qkd;
  if (object.contains("eve")) {
    const auto& eve = object.at("eve");
    require_known_fields(eve, "qkd.eve", {"enabled", "intercept_probability"});
    params.eve_enabled = field_or(eve, "enabled", params.eve_enabled);
    params.eve_intercept_probability =
        field_or(eve, "intercept_probability", params.eve_intercept_probability);
  }
  params.compare_fraction = field_or(object, "compare_fraction", params.compare_fraction);
  params.qber_threshold = field_or(object, "qber_threshold", params.qber_threshold);
  params.photon_loss_probability =
      field_or(object, "photon_loss_probability", params.photon_loss_probability);
}

void parse_spdc(const ordered_json& object, Scenario& scenario) {
  require_known_fields(object, "spdc",
                       {"pair_rate_hz", "duration_ns", "tau_ns", "signal_wavelength_nm",
                        "analyzer_deg", "detectors"});
  auto& params = scenario.spdc;
  params.pair_rate_hz = field_or(object, "pair_rate_hz", params.pair_rate_hz);
  params.duration_ns = field_or(object, "duration_ns", params.duration_ns);
  params.tau_ns = field_or(object, "tau_ns", params.tau_ns);
  if (object.contains("signal_wavelength_nm") &&
      !object.at("signal_wavelength_nm").is_null())
    params.signal_wavelength_nm = object.at("signal_wavelength_nm").get<double>();
  if (object.contains("analyzer_deg") && !object.at("analyzer_deg").is_null())
    params.analyzer_deg = object.at("analyzer_deg").get<double>();

  if (object.contains("detectors")) {
    params.detectors.clear();
    for (const auto& entry : object.at("detectors")) {
      require_known_fields(entry, "spdc.detectors",
                           {"id", "efficiency", "dark_count_rate_hz", "timing_jitter_ns",
                            "clock_offset_ns", "wavelength_min_nm", "wavelength_max_nm"});
      DetectorConfig detector;
      detector.id = field_or<std::string>(entry, "id", "");
      detector.spec.efficiency = field_or(entry, "efficiency", detector.spec.efficiency);
      detector.spec.dark_count_rate_hz =
          field_or(entry, "dark_count_rate_hz", detector.spec.dark_count_rate_hz);
      detector.spec.timing_jitter_ns =
          field_or(entry, "timing_jitter_ns", detector.spec.timing_jitter_ns);
      detector.spec.wavelength_min_nm =
          field_or(entry, "wavelength_min_nm", detector.spec.wavelength_min_nm);
      detector.spec.wavelength_max_nm =
          field_or(entry, "wavelength_max_nm", detector.spec.wavelength_max_nm);
      if (entry.contains("clock_offset_ns") && !entry.at("clock_offset_ns").is_null()) {
        detector.spec.clock_offset_ns = entry.at("clock_offset_ns").get<std::int64_t>();
        detector.clock_offset_given = true;
      }
      params.detectors.push_back(std::move(detector));
    }
  }
}

void parse_robots(const ordered_json& object, Scenario& scenario) {
  require_known_fields(object, "robots",
                       {"agents", "v0_mps", "mapping", "link", "dt_s", "horizon_ticks",
                        "task_id", "leader_sessions", "leader_identical_keys"});
  auto& params = scenario.robots;
  params.v0_mps = field_or(object, "v0_mps", params.v0_mps);
  params.dt_s = field_or(object, "dt_s", params.dt_s);
  params.horizon_ticks = field_or(object, "horizon_ticks", params.horizon_ticks);
  params.task_id = field_or(object, "task_id", params.task_id);
  params.leader_sessions = field_or(object, "leader_sessions", params.leader_sessions);
  params.leader_identical_keys =
      field_or(object, "leader_identical_keys", params.leader_identical_keys);
  params.mapping = robotnet::BitCommandMap::default_map(params.v0_mps);

  if (object.contains("mapping")) {
    const auto& mapping = object.at("mapping");
    require_known_fields(mapping, "robots.mapping", {"0", "1"});
    params.mapping.on_zero.reset();
    params.mapping.on_one.reset();
    if (mapping.contains("0"))
      params.mapping.on_zero = parse_command(mapping.at("0"), "robots.mapping.0");
    if (mapping.contains("1"))
      params.mapping.on_one = parse_command(mapping.at("1"), "robots.mapping.1");
  }

  if (object.contains("link")) {
    const auto& link = object.at("link");
    require_known_fields(link, "robots.link",
                         {"max_range_m", "max_pointing_error_deg", "availability"});
    params.link.max_range_m = field_or(link, "max_range_m", params.link.max_range_m);
    params.link.max_pointing_error_deg =
        field_or(link, "max_pointing_error_deg", params.link.max_pointing_error_deg);
    params.link.availability = field_or(link, "availability", params.link.availability);
  }

  if (object.contains("agents")) {
    params.agents.clear();
    for (const auto& entry : object.at("agents")) {
      require_known_fields(entry, "robots.agents",
                           {"id", "role", "kind", "pose", "heading_deg", "velocity"});
      robotnet::Agent agent;
      agent.id = field_or<std::string>(entry, "id", "");
      agent.role = parse_role(field_or<std::string>(entry, "role", "alice"));
      agent.kind = parse_kind(field_or<std::string>(entry, "kind", "ground"));
      if (entry.contains("pose")) agent.pose = parse_vec3(entry.at("pose"), "robots.agents.pose");
      agent.heading_deg = field_or(entry, "heading_deg", 0.0);
      if (entry.contains("velocity"))
        agent.velocity = parse_vec3(entry.at("velocity"), "robots.agents.velocity");
      params.agents.push_back(std::move(agent));
    }
  }
}

void check_probability(double value, const std::string& field) {
  if (!(value >= 0.0 && value <= 1.0))
    throw ValidationError(field, "must lie in [0, 1]");
}

}  // namespace

std::string experiment_name(Experiment experiment) {
  switch (experiment) {
    case Experiment::Interferometer: return "interferometer";
    case Experiment::QkdSession: return "qkd_session";
    case Experiment::Entanglement: return "entanglement";
    case Experiment::CombinedRobots: return "combined_robots";
  }
  return "interferometer";
}

Scenario parse_scenario(const std::string& text) {
  ordered_json document;
  try {
    document = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what());
  }
  if (!document.is_object()) throw ParseError("scenario: expected a JSON object");

  require_known_fields(document, "scenario",
                       {"name", "seed", "experiment", "photon_count", "interferometer",
                        "qkd", "spdc", "robots"});

  Scenario scenario;
  try {
    scenario.name = field_or<std::string>(document, "name", scenario.name);
    if (!document.contains("seed") || document.at("seed").is_null())
      throw ValidationError("seed", "scenario must pin a seed; there is no implicit entropy");
    scenario.seed = document.at("seed").get<std::uint64_t>();
    scenario.experiment =
        parse_experiment(field_or<std::string>(document, "experiment", "interferometer"));
    scenario.photon_count = field_or(document, "photon_count", scenario.photon_count);

    // Default detector pair; a detectors array in the file replaces it.
    scenario.spdc.detectors = {DetectorConfig{.id = "alice"}, DetectorConfig{.id = "bob"}};

    if (document.contains("interferometer"))
      parse_interferometer(document.at("interferometer"), scenario);
    if (document.contains("qkd")) parse_qkd(document.at("qkd"), scenario);
    if (document.contains("spdc")) parse_spdc(document.at("spdc"), scenario);
    if (document.contains("robots")) parse_robots(document.at("robots"), scenario);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());  // wrong-typed fields surface as parse errors
  }

  validate_scenario(scenario);
  return scenario;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_scenario(text);
}

void validate_scenario(const Scenario& scenario) {
  const auto& mzi = scenario.interferometer;
  if (mzi.arm1_length <= 0.0) throw ValidationError("interferometer.arm1_length", "must be > 0");
  if (mzi.arm2_length <= 0.0) throw ValidationError("interferometer.arm2_length", "must be > 0");
  if (mzi.wavelength <= 0.0) throw ValidationError("interferometer.wavelength", "must be > 0");
  const double reflectance = mzi.splitter_amplitude * mzi.splitter_amplitude;
  if (!(reflectance > 0.0 && reflectance < 1.0))
    throw ValidationError("interferometer.splitter_amplitude",
                          "squared amplitude must lie in (0, 1)");

  check_probability(scenario.qkd.eve_intercept_probability, "qkd.eve.intercept_probability");
  check_probability(scenario.qkd.qber_threshold, "qkd.qber_threshold");
  check_probability(scenario.qkd.photon_loss_probability, "qkd.photon_loss_probability");
  if (!(scenario.qkd.compare_fraction > 0.0 && scenario.qkd.compare_fraction <= 1.0))
    throw ValidationError("qkd.compare_fraction", "must lie in (0, 1]");

  if (scenario.spdc.pair_rate_hz < 0.0)
    throw ValidationError("spdc.pair_rate_hz", "must be >= 0");
  if (scenario.spdc.duration_ns < 0)
    throw ValidationError("spdc.duration_ns", "must be >= 0");
  if (scenario.spdc.tau_ns < 0) throw ValidationError("spdc.tau_ns", "must be >= 0");
  if (scenario.spdc.signal_wavelength_nm && *scenario.spdc.signal_wavelength_nm <= 405.0)
    throw ValidationError("spdc.signal_wavelength_nm",
                          "must exceed the 405 nm pump wavelength");
  if (scenario.spdc.detectors.size() < 2)
    throw ValidationError("spdc.detectors", "need at least two detectors");
  std::set<std::string> detector_ids;
  for (const auto& detector : scenario.spdc.detectors) {
    if (detector.id.empty()) throw ValidationError("spdc.detectors.id", "must be nonempty");
    if (!detector_ids.insert(detector.id).second)
      throw ValidationError("spdc.detectors.id", "duplicate id \"" + detector.id + "\"");
    check_probability(detector.spec.efficiency, "spdc.detectors.efficiency");
    if (detector.spec.dark_count_rate_hz < 0.0)
      throw ValidationError("spdc.detectors.dark_count_rate_hz", "must be >= 0");
    if (detector.spec.timing_jitter_ns < 0.0)
      throw ValidationError("spdc.detectors.timing_jitter_ns", "must be >= 0");
    if (detector.spec.wavelength_min_nm >= detector.spec.wavelength_max_nm)
      throw ValidationError("spdc.detectors.wavelength_min_nm",
                            "must be below wavelength_max_nm");
  }

  check_probability(scenario.robots.link.availability, "robots.link.availability");
  if (scenario.robots.dt_s <= 0.0) throw ValidationError("robots.dt_s", "must be > 0");
  if (scenario.robots.horizon_ticks < 0)
    throw ValidationError("robots.horizon_ticks", "must be >= 0");
  std::set<std::string> agent_ids;
  for (const auto& agent : scenario.robots.agents) {
    if (agent.id.empty()) throw ValidationError("robots.agents.id", "must be nonempty");
    if (!agent_ids.insert(agent.id).second)
      throw ValidationError("robots.agents.id", "duplicate id \"" + agent.id + "\"");
    if (agent.kind == robotnet::AgentKind::Ground && agent.pose.z != 0.0)
      throw ValidationError("robots.agents.pose", "ground agent \"" + agent.id +
                                                      "\" must start at z = 0");
  }

  if (scenario.experiment == Experiment::CombinedRobots) {
    int alice = 0, bob = 0;
    for (const auto& agent : scenario.robots.agents) {
      if (agent.role == robotnet::Role::Alice) ++alice;
      if (agent.role == robotnet::Role::Bob) ++bob;
    }
    if (alice != 1 || bob != 1)
      throw ValidationError("robots.agents",
                            "combined_robots needs exactly one alice and one bob agent");
  }
}

std::string scenario_to_json(const Scenario& scenario, int indent) {
  ordered_json document;
  document["name"] = scenario.name;
  document["seed"] = scenario.seed;
  document["experiment"] = experiment_name(scenario.experiment);
  document["photon_count"] = scenario.photon_count;

  ordered_json mzi;
  mzi["arm1_length"] = round12(scenario.interferometer.arm1_length);
  mzi["arm2_length"] = round12(scenario.interferometer.arm2_length);
  mzi["wavelength"] = round12(scenario.interferometer.wavelength);
  mzi["arm2_blocked"] = scenario.interferometer.arm2_blocked;
  mzi["splitter_amplitude"] = round12(scenario.interferometer.splitter_amplitude);
  mzi["delta_override_rad"] =
      scenario.interferometer.delta_override_rad
          ? ordered_json(round12(*scenario.interferometer.delta_override_rad))
          : ordered_json(nullptr);
  document["interferometer"] = mzi;

  ordered_json qkd;
  qkd["eve"] = {{"enabled", scenario.qkd.eve_enabled},
                {"intercept_probability", round12(scenario.qkd.eve_intercept_probability)}};
  qkd["compare_fraction"] = round12(scenario.qkd.compare_fraction);
  qkd["qber_threshold"] = round12(scenario.qkd.qber_threshold);
  qkd["photon_loss_probability"] = round12(scenario.qkd.photon_loss_probability);
  document["qkd"] = qkd;

  ordered_json spdc;
  spdc["pair_rate_hz"] = round12(scenario.spdc.pair_rate_hz);
  spdc["duration_ns"] = scenario.spdc.duration_ns;
  spdc["tau_ns"] = scenario.spdc.tau_ns;
  spdc["signal_wavelength_nm"] =
      scenario.spdc.signal_wavelength_nm
          ? ordered_json(round12(*scenario.spdc.signal_wavelength_nm))
          : ordered_json(nullptr);
  spdc["analyzer_deg"] = scenario.spdc.analyzer_deg
                             ? ordered_json(round12(*scenario.spdc.analyzer_deg))
                             : ordered_json(nullptr);
  ordered_json detectors = ordered_json::array();
  for (const auto& detector : scenario.spdc.detectors) {
    ordered_json entry;
    entry["id"] = detector.id;
    entry["efficiency"] = round12(detector.spec.efficiency);
    entry["dark_count_rate_hz"] = round12(detector.spec.dark_count_rate_hz);
    entry["timing_jitter_ns"] = round12(detector.spec.timing_jitter_ns);
    entry["clock_offset_ns"] = detector.clock_offset_given
                                   ? ordered_json(detector.spec.clock_offset_ns)
                                   : ordered_json(nullptr);
    entry["wavelength_min_nm"] = round12(detector.spec.wavelength_min_nm);
    entry["wavelength_max_nm"] = round12(detector.spec.wavelength_max_nm);
    detectors.push_back(entry);
  }
  spdc["detectors"] = detectors;
  document["spdc"] = spdc;

  ordered_json robots;
  ordered_json agents = ordered_json::array();
  for (const auto& agent : scenario.robots.agents) {
    ordered_json entry;
    entry["id"] = agent.id;
    entry["role"] = role_name(agent.role);
    entry["kind"] = agent.kind == robotnet::AgentKind::Ground ? "ground" : "aerial";
    entry["pose"] = {round12(agent.pose.x), round12(agent.pose.y), round12(agent.pose.z)};
    entry["heading_deg"] = round12(agent.heading_deg);
    entry["velocity"] = {round12(agent.velocity.x), round12(agent.velocity.y),
                         round12(agent.velocity.z)};
    agents.push_back(entry);
  }
  robots["agents"] = agents;
  robots["v0_mps"] = round12(scenario.robots.v0_mps);
  ordered_json mapping;
  mapping["0"] = scenario.robots.mapping.on_zero
                     ? command_to_json(*scenario.robots.mapping.on_zero)
                     : ordered_json(nullptr);
  mapping["1"] = scenario.robots.mapping.on_one
                     ? command_to_json(*scenario.robots.mapping.on_one)
                     : ordered_json(nullptr);
  robots["mapping"] = mapping;
  robots["link"] = {{"max_range_m", round12(scenario.robots.link.max_range_m)},
                    {"max_pointing_error_deg",
                     round12(scenario.robots.link.max_pointing_error_deg)},
                    {"availability", round12(scenario.robots.link.availability)}};
  robots["dt_s"] = round12(scenario.robots.dt_s);
  robots["horizon_ticks"] = scenario.robots.horizon_ticks;
  robots["task_id"] = scenario.robots.task_id;
  robots["leader_sessions"] = scenario.robots.leader_sessions;
  robots["leader_identical_keys"] = scenario.robots.leader_identical_keys;
  document["robots"] = robots;

  return document.dump(indent);
}

}  // namespace qbot::harness
