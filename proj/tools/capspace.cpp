// Command-line front end: run scenarios, audit histories, sweep parameters.
//
//   capspace run   --scenario FILE [--seed N] [--until MS] [--out DIR]
//   capspace check --history FILE --kind convergence|serializable|staleness
//   capspace sweep --scenario FILE --param partition-duration --values a,b,c --out DIR
//
// Exit status: 0 on success, 1 when a check finds violations, 2 on errors.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "capspace/harness.hpp"

namespace {

int cmd_run(const std::string& scenario, std::optional<std::uint64_t> seed, std::optional<capspace::Millis> until,
            const std::string& out) {
  auto s = capspace::load_scenario(scenario);
  auto result = capspace::run_scenario(s, seed, until);
  capspace::write_run(result, out);
  std::cout << capspace::write_metrics(result.metrics);
  return 0;
}

int cmd_check(const std::string& history, const std::string& kind) {
  auto h = capspace::parse_history(capspace::read_text_file(history));
  capspace::CheckReport report;
  if (kind == "convergence") {
    report = capspace::check_convergence(h);
  } else if (kind == "serializable") {
    report = capspace::check_serializable(h);
  } else {
    report = capspace::check_staleness(h);
  }
  for (const auto& v : report.violations) std::cout << "violation: " << v << '\n';
  if (report.ok) {
    std::cout << "ok";
    if (!report.witness.empty()) std::cout << " order=" << report.witness;
    std::cout << '\n';
  }
  return report.ok ? 0 : 1;
}

int cmd_sweep(const std::string& scenario, const std::string& param, const std::vector<capspace::Millis>& values,
              const std::string& out) {
  auto s = capspace::load_scenario(scenario);
  auto rows = capspace::sweep(s, param, values);
  std::filesystem::create_directories(out);
  std::string table = capspace::write_sweep(rows);
  capspace::write_text_file(std::filesystem::path(out) / "sweep.tsv", table);
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capspace: replicated-register consistency simulator"};
  app.require_subcommand(1);

  std::string scenario, out = "out", history, kind, param;
  std::optional<std::uint64_t> seed;
  std::optional<capspace::Millis> until;
  std::vector<capspace::Millis> values;

  auto* run = app.add_subcommand("run", "Execute a scenario");
  run->add_option("--scenario", scenario, "Scenario file")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--until", until, "Stop the simulation at this time (ms)");
  run->add_option("--out", out, "Output directory")->capture_default_str();

  auto* check = app.add_subcommand("check", "Audit a recorded history");
  check->add_option("--history", history, "History TSV file")->required();
  check->add_option("--kind", kind, "Property to check")
      ->required()
      ->check(CLI::IsMember({"convergence", "serializable", "staleness"}));

  auto* sweep = app.add_subcommand("sweep", "Sweep a scenario parameter across policies");
  sweep->add_option("--scenario", scenario, "Scenario file")->required();
  sweep->add_option("--param", param, "Parameter name")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
  sweep->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(scenario, seed, until, out);
    if (*check) return cmd_check(history, kind);
    return cmd_sweep(scenario, param, values, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
