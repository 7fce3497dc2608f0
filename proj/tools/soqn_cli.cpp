// Command-line driver: parse a scenario file, run it, write reports.

#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "soqn/report.hpp"
#include "soqn/scenario.hpp"

namespace {

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("soqn");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* level = std::getenv("SOQN_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

struct Sweep {
  std::string name;
  std::vector<std::string> values;
};

std::optional<Sweep> parse_sweep(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) return std::nullopt;
  Sweep s{spec.substr(0, eq), {}};
  std::stringstream rest(spec.substr(eq + 1));
  std::string v;
  while (std::getline(rest, v, ',')) {
    if (v.empty()) return std::nullopt;
    s.values.push_back(v);
  }
  if (s.values.empty()) return std::nullopt;
  return s;
}

int report(const soqn::RunResult& r, const std::filesystem::path& out) {
  for (const auto& d : r.diagnostics) spdlog::warn("{}", d);
  soqn::write_outputs(r, out);
  spdlog::info("{}: {} events, {} of {} messages delivered, exit {}", out.string(),
               r.summary.events, r.summary.delivered, r.summary.deliveries, r.exit_code);
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Self-organizing free-space quantum network simulator"};
  std::string scenario_path;
  std::string out_dir = "soqn-out";
  std::optional<double> until;
  bool strict = false;
  std::vector<double> snapshots;
  std::optional<std::uint64_t> seed;
  std::string sweep_spec;
  app.add_option("--scenario", scenario_path, "Scenario file")->required();
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--until", until, "Stop time in seconds (default: last event)");
  app.add_flag("--strict", strict, "Exit 3 when any message is not delivered");
  app.add_option("--snapshot", snapshots, "Routing-table snapshot time (repeatable)");
  app.add_option("--seed", seed, "Override the scenario seed");
  app.add_option("--sweep", sweep_spec, "Run once per value: <param>=<v1,v2,...>");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : soqn::kExitParseError;
  }

  std::ifstream in(scenario_path, std::ios::binary);
  if (!in) {
    std::cerr << scenario_path << ": cannot open\n";
    return soqn::kExitParseError;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  auto parsed = soqn::parse_scenario(buf.str());
  if (const auto* err = std::get_if<soqn::ParseError>(&parsed)) {
    std::cerr << scenario_path << ":" << err->to_string() << "\n";
    return soqn::kExitParseError;
  }
  const auto& scenario = std::get<soqn::Scenario>(parsed);

  soqn::RunOptions opts;
  opts.until = until;
  opts.strict = strict;
  opts.snapshots = snapshots;
  opts.seed = seed;

  try {
    if (sweep_spec.empty()) return report(soqn::run_scenario(scenario, opts), out_dir);

    auto sweep = parse_sweep(sweep_spec);
    if (!sweep) {
      std::cerr << "--sweep expects <param>=<v1,v2,...>\n";
      return soqn::kExitParseError;
    }
    std::vector<soqn::RunOptions> variants;
    for (const auto& v : sweep->values) {
      soqn::RunOptions o = opts;
      try {
        const double value = std::stod(v);
        soqn::NetworkParams probe = soqn::resolve_params(scenario);
        if (!soqn::set_param(probe, sweep->name, value)) {
          std::cerr << "--sweep: unknown parameter '" << sweep->name << "'\n";
          return soqn::kExitParseError;
        }
        o.param_overrides[sweep->name] = value;
      } catch (const std::exception& e) {
        std::cerr << "--sweep value '" << v << "': " << e.what() << "\n";
        return soqn::kExitParseError;
      }
      variants.push_back(std::move(o));
    }
    std::vector<std::future<soqn::RunResult>> runs;
    for (const auto& o : variants) {
      runs.push_back(std::async(std::launch::async,
                                [&scenario, o] { return soqn::run_scenario(scenario, o); }));
    }
    int worst = soqn::kExitOk;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto dir = std::filesystem::path(out_dir) / (sweep->name + "=" + sweep->values[i]);
      worst = std::max(worst, report(runs[i].get(), dir));
    }
    return worst;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return soqn::kExitInvariantViolation;
  }
}
