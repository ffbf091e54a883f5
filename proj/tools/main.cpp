#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include <qbot/runner.hpp>
#include <qbot/selftest.hpp>

namespace {

// Exit codes: 0 success, 2 validation error, 3 session abort (eavesdropper
// detected), 4 internal error.
constexpr int kOk = 0;
constexpr int kValidationError = 2;
constexpr int kAborted = 3;
constexpr int kInternalError = 4;

int cmd_run(const std::string& scenario_path, std::optional<std::uint64_t> seed_override,
            const std::string& out_dir, const std::string& format) {
  qbot::harness::Scenario scenario = qbot::harness::load_scenario(scenario_path);
  if (seed_override) scenario.seed = *seed_override;

  const auto report = qbot::harness::run_scenario(scenario);
  const auto files = qbot::harness::write_report(report, out_dir, format);
  std::cout << "scenario: " << scenario.name << "\n"
            << "report:   " << files.report_path.string() << "\n"
            << "events:   " << files.event_log_path.string() << "\n";
  if (report.aborted) {
    std::cout << "session aborted (eavesdropper detected or empty key)\n";
    return kAborted;
  }
  return kOk;
}

int cmd_sweep(const std::string& scenario_path, const std::string& pointer,
              double from, double to, int steps, const std::string& out_dir,
              std::optional<std::uint64_t> seed_override) {
  std::ifstream in(scenario_path);
  if (!in) throw qbot::harness::ParseError("cannot open scenario file: " + scenario_path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (seed_override) {
    auto document = nlohmann::ordered_json::parse(text);
    document["seed"] = *seed_override;
    text = document.dump();
  }

  const std::string csv = qbot::harness::run_sweep(text, pointer, from, to, steps);

  std::filesystem::create_directories(out_dir);
  const auto csv_path = std::filesystem::path(out_dir) / "sweep.csv";
  std::ofstream file(csv_path, std::ios::binary);
  if (!file) throw qbot::harness::IoError("cannot open " + csv_path.string());
  file << csv;
  std::cout << "sweep:  " << csv_path.string() << "\n";
  return kOk;
}

int cmd_table1(std::uint64_t seed) {
  const auto rows = qbot::selftest::verify_table1(seed);
  std::printf("%-12s %-10s %-10s %-14s %s\n", "alice", "bob basis", "expected",
              "ones fraction", "status");
  bool all_ok = true;
  for (const auto& row : rows) {
    std::printf("%-12s %-10s %-10s %-14.4f %s\n", row.alice_state.c_str(),
                row.bob_basis.c_str(), row.expected.c_str(), row.fraction_ones,
                row.passed ? "ok" : "FAIL");
    all_ok = all_ok && row.passed;
  }
  std::printf("table1: %s\n", all_ok ? "8/8 rows verified" : "verification FAILED");
  return all_ok ? kOk : kInternalError;
}

int cmd_selftest(std::uint64_t seed) {
  const auto results = qbot::selftest::run_all(seed);
  bool all_ok = true;
  for (const auto& result : results) {
    std::printf("[%s] %s: %s\n", result.passed ? "PASS" : "FAIL", result.name.c_str(),
                result.detail.c_str());
    all_ok = all_ok && result.passed;
  }
  return all_ok ? kOk : kInternalError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic simulator for quantum-secured robot coordination"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = "out";
  std::string format = "json";
  std::optional<std::uint64_t> seed_override;

  auto* run = app.add_subcommand("run", "run one scenario file");
  run->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--seed", seed_override, "override the scenario seed");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--format", format, "report format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}));

  std::string pointer = "/interferometer/delta_override_rad";
  double from = 0.0;
  double to = 6.283185307179586;
  int steps = 20;
  auto* sweep = app.add_subcommand("sweep", "run a scenario over a parameter grid");
  sweep->add_option("--scenario", scenario_path, "base scenario JSON file")->required();
  sweep->add_option("--pointer", pointer, "JSON pointer of the swept field");
  sweep->add_option("--from", from, "first value");
  sweep->add_option("--to", to, "last value");
  sweep->add_option("--steps", steps, "grid size");
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--seed", seed_override, "override the scenario seed");

  std::uint64_t check_seed = 20190810;
  auto* table1 = app.add_subcommand("table1", "verify the polarization truth table");
  table1->add_option("--seed", check_seed, "verification seed");

  auto* selftest = app.add_subcommand("selftest", "run the full invariant suite");
  selftest->add_option("--seed", check_seed, "verification seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(scenario_path, seed_override, out_dir, format);
    if (sweep->parsed()) return cmd_sweep(scenario_path, pointer, from, to, steps, out_dir,
                                          seed_override);
    if (table1->parsed()) return cmd_table1(check_seed);
    if (selftest->parsed()) return cmd_selftest(check_seed);
  } catch (const qbot::harness::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kValidationError;
  } catch (const qbot::harness::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternalError;
  }
  return kOk;
}
