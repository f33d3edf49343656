#pragma once

// Scenario files: YAML documents mapped onto SimConfig. Every field is
// optional; an empty document reproduces the default experiment (one node,
// 30 minutes, history depths 32/16/8, thresholds 4, 4/8 and 2).
// See docs/scenario.md for the schema.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdmsim/network.hpp"

namespace pdmsim {

struct OutputPaths {
  std::string directory = "out";
  std::string trace_csv = "trace.csv";
  std::string trace_jsonl = "trace.jsonl";
  std::string ledger_csv = "energy_ledger.csv";
  std::string latency_csv = "latency.csv";
  std::string summary_json = "summary.json";
  std::string energy_model_json = "energy_model.json";
};

struct Scenario {
  std::string name = "default";
  SimConfig sim;
  OutputPaths output;
};

// Throws ConfigError; messages start with "<source>:<line>: " when the
// offending YAML node is known.
Scenario parse_scenario(std::string_view yaml_text, std::string_view source_name = "<scenario>");
Scenario load_scenario_file(const std::string& path);

// Presets shipped under presets/ and compiled into the library.
std::vector<std::string> preset_names();
std::optional<std::string_view> preset_text(std::string_view name);
Scenario load_preset(std::string_view name);

// Analytic energy figures for a scenario's energy table and the first
// node's battery and sleep period.
struct EnergyModelReport {
  double onboard_cycle_mj = 0.0;
  double offboard_cycle_mj = 0.0;
  std::int64_t onboard_cycle_ms = 0;
  std::int64_t offboard_cycle_ms = 0;
  double onboard_life_h = 0.0;
  double offboard_life_h = 0.0;
  double savings_pct = 0.0;
};

EnergyModelReport energy_model_report(const SimConfig& sim);
std::string energy_model_json(const EnergyModelReport& r);

}  // namespace pdmsim
