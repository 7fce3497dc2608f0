#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "soqn/event_log.hpp"
#include "soqn/scenario.hpp"
#include "soqn/simulator.hpp"

namespace soqn {

/// Exit codes of run_scenario and the CLI.
enum ExitCode : int {
  kExitOk = 0,
  kExitParseError = 2,
  kExitDeliveryFailure = 3,
  kExitInvariantViolation = 4,
};

struct PairUsage {
  std::size_t generated = 0;
  std::size_t consumed = 0;
  bool operator==(const PairUsage&) const = default;
};

/// Result of replaying key_append / key_consume / deliver records.
struct KeyAudit {
  bool ok = true;
  std::vector<std::string> violations;
  /// Keyed by (owner, peer): each endpoint's copy is audited separately.
  std::map<std::pair<std::string, std::string>, PairUsage> usage;
  std::size_t failed_sends = 0;
};

/// Checks that every key bit is consumed at most once, only after it was
/// generated, and never on behalf of a failed send.
KeyAudit audit_key_usage(const EventLog& log);

struct RunOptions {
  std::optional<double> until;
  bool strict = false;
  std::vector<double> snapshots;
  std::optional<std::uint64_t> seed;
  std::map<std::string, double> param_overrides;
};

struct RunResult {
  int exit_code = kExitOk;
  SimSummary summary;
  std::string report_text;
  std::string report_records;
  std::string event_log;
  std::vector<std::string> diagnostics;
};

/// Loads the scenario into a simulator, runs it and renders both report
/// forms. Never throws for protocol failures; they map to exit codes.
RunResult run_scenario(const Scenario& scenario, const RunOptions& options = {});

/// Writes report.txt, report.jsonl and events.log into dir (created if needed).
void write_outputs(const RunResult& result, const std::filesystem::path& dir);

/// Renderers, exposed for tests.
std::string render_report_text(const Simulator& sim, const Scenario& scenario, double end_time,
                               const KeyAudit& audit);
std::string render_report_records(const Simulator& sim, const Scenario& scenario, double end_time,
                                  const KeyAudit& audit);

}  // namespace soqn
