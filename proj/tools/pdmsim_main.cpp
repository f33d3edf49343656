// pdmsim: run a scenario and write its artifacts, or re-summarize a trace.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pdmsim/network.hpp"
#include "pdmsim/scenario.hpp"
#include "pdmsim/trace.hpp"

namespace fs = std::filesystem;
using namespace pdmsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct RunOptions {
  std::string scenario_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> until_ms;
  std::string out_dir;
  bool quiet = false;
};

struct Artifact {
  fs::path path;
  std::string content;
};

void write_all(const std::vector<Artifact>& artifacts) {
  for (const auto& a : artifacts) {
    if (a.path.has_parent_path()) fs::create_directories(a.path.parent_path());
  }
  // Stage next to the target, then rename, so a failed write leaves nothing half-done.
  std::vector<fs::path> staged;
  for (const auto& a : artifacts) {
    fs::path tmp = a.path;
    tmp += ".partial";
    std::ofstream os(tmp, std::ios::binary);
    os << a.content;
    if (!os) {
      for (const auto& s : staged) fs::remove(s);
      fs::remove(tmp);
      throw std::runtime_error("cannot write " + a.path.string());
    }
    staged.push_back(tmp);
  }
  for (std::size_t i = 0; i < artifacts.size(); ++i) fs::rename(staged[i], artifacts[i].path);
}

int run_command(const RunOptions& opt) {
  Scenario sc;
  try {
    if (!opt.preset.empty()) {
      sc = load_preset(opt.preset);
    } else if (!opt.scenario_path.empty()) {
      sc = load_scenario_file(opt.scenario_path);
    } else {
      std::cerr << "error: a scenario path or --preset is required\n";
      return kExitConfig;
    }
    if (opt.seed) sc.sim.seed = *opt.seed;
    if (opt.until_ms) {
      if (*opt.until_ms < 0) throw ConfigError("--until must be non-negative");
      sc.sim.duration_ms = *opt.until_ms;
    }
    sc.sim.validate();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  const fs::path dir = opt.out_dir.empty() ? fs::path(sc.output.directory) : fs::path(opt.out_dir);

  try {
    Simulator sim(sc.sim);
    auto result = sim.run();
    const auto ledger = ledger_rows(result.ledger);
    const auto summary = summarize(result.trace, ledger);

    std::vector<Artifact> artifacts;
    auto add = [&](const std::string& name, auto&& writer) {
      std::ostringstream os;
      writer(os);
      artifacts.push_back({dir / name, os.str()});
    };
    add(sc.output.trace_csv, [&](std::ostream& os) { write_trace_csv(os, result.trace); });
    add(sc.output.trace_jsonl, [&](std::ostream& os) { write_trace_jsonl(os, result.trace); });
    add(sc.output.ledger_csv, [&](std::ostream& os) { write_ledger_csv(os, ledger); });
    add(sc.output.latency_csv, [&](std::ostream& os) { write_latency_csv(os, result.trace); });
    add(sc.output.summary_json, [&](std::ostream& os) { os << summary_json(summary) << "\n"; });
    add(sc.output.energy_model_json,
        [&](std::ostream& os) { os << energy_model_json(energy_model_report(sc.sim)) << "\n"; });
    write_all(artifacts);

    if (!opt.quiet) {
      std::cout << "scenario " << sc.name << ", seed " << sc.sim.seed << "\n";
      print_summary(std::cout, summary);
      std::cout << "artifacts written to " << dir.string() << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime abort: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int summarize_command(const std::string& dir, bool as_json) {
  try {
    std::ifstream trace_in(fs::path(dir) / "trace.csv");
    if (!trace_in) throw std::runtime_error("cannot open " + (fs::path(dir) / "trace.csv").string());
    const auto trace = read_trace_csv(trace_in);
    std::vector<LedgerRow> ledger;
    std::ifstream ledger_in(fs::path(dir) / "energy_ledger.csv");
    if (ledger_in) ledger = read_ledger_csv(ledger_in);
    const auto s = summarize(trace, ledger);
    if (as_json) {
      std::cout << summary_json(s) << "\n";
    } else {
      print_summary(std::cout, s);
    }
  } catch (const TraceParseError& e) {
    std::cerr << "malformed trace: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-tier adaptive inference network simulator"};
  app.require_subcommand(1);

  RunOptions opt;
  auto* run = app.add_subcommand("run", "Run a scenario and write trace, ledger, latency and summary files");
  run->add_option("scenario", opt.scenario_path, "Scenario YAML file");
  run->add_option("--preset", opt.preset, "Use a built-in preset instead of a file");
  run->add_option("--seed", opt.seed, "Override the scenario seed");
  run->add_option("--out", opt.out_dir, "Output directory");
  run->add_option("--until", opt.until_ms, "Override the simulated duration, in ms");
  run->add_flag("--quiet", opt.quiet, "Do not print the summary");

  std::string dir;
  bool as_json = false;
  auto* summ = app.add_subcommand("summarize", "Recompute the summary from a run directory");
  summ->add_option("dir", dir, "Directory holding trace.csv and energy_ledger.csv")->required();
  summ->add_flag("--json", as_json, "Print JSON instead of a table");

  auto* presets = app.add_subcommand("presets", "List built-in presets");
  std::string dump_name;
  presets->add_option("--show", dump_name, "Print one preset's YAML");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (run->parsed()) return run_command(opt);
  if (summ->parsed()) return summarize_command(dir, as_json);
  if (presets->parsed()) {
    if (!dump_name.empty()) {
      const auto text = preset_text(dump_name);
      if (!text) {
        std::cerr << "unknown preset '" << dump_name << "'\n";
        return kExitConfig;
      }
      std::cout << *text;
      return kExitOk;
    }
    for (const auto& n : preset_names()) std::cout << n << "\n";
  }
  return kExitOk;
}
