#include <doctest.h>

#include <string>

#include "pdmsim/scenario.hpp"

using namespace pdmsim;

namespace {

std::string error_of(const std::string& yaml) {
  try {
    parse_scenario(yaml, "s.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("empty scenario takes every default") {
  const auto sc = parse_scenario("", "empty");
  CHECK(sc.sim.duration_ms == 1'800'000);
  CHECK(sc.sim.nodes.size() == 1);
  CHECK(sc.sim.params.sensor_depth == 32);
  CHECK(sc.sim.params.gateway_depth == 16);
  CHECK(sc.sim.params.cloud_depth == 8);
  CHECK(sc.sim.params.sensor_escalate == 4);
  CHECK(sc.sim.params.gateway_deescalate == 4);
  CHECK(sc.sim.params.gateway_escalate == 8);
  CHECK(sc.sim.params.cloud_deescalate == 2);
  CHECK(sc.sim.latency.mean[1] == SimTime{148'150});
  CHECK(sc.sim.nodes[0].sleep_period_ms == 30'000);
}

TEST_CASE("fields map onto the configuration") {
  const auto sc = parse_scenario(R"(
name: custom
seed: 99
duration_ms: 5000
heuristics:
  battery_threshold_pct: 25
  gateway: {depth: 20, deescalate: 3, escalate: 9, queue_threshold: 2}
nodes:
  count: 3
  initial_mode: G
  sleep_period_ms: 1000
  overrides:
    - {id: 2, initial_mode: C, battery_j: 100}
latency:
  gateway_ms: 146.67
  jitter_fraction: 0.1
accuracy:
  sensor: {recall: [1, 1, 1, 1]}
ground_truth: {anomaly_probability: 0.7}
anomaly_classes: [3]
poll: {every_k_cycles: 5}
commands:
  - {at_ms: 100, node: 1, property: inference_mode, method: SET, value: C}
output: {directory: results}
)");
  CHECK(sc.name == "custom");
  CHECK(sc.sim.seed == 99);
  CHECK(sc.sim.params.battery_threshold_pct == 25);
  CHECK(sc.sim.params.gateway_depth == 20);
  CHECK(sc.sim.params.queue_threshold == 2);
  REQUIRE(sc.sim.nodes.size() == 3);
  CHECK(sc.sim.nodes[0].initial_mode == InferenceMode::Gateway);
  CHECK(sc.sim.nodes[2].initial_mode == InferenceMode::Cloud);
  CHECK(sc.sim.nodes[2].battery_capacity == Energy::joules(100));
  CHECK(sc.sim.latency.mean[1] == SimTime{146'670});
  CHECK(sc.sim.latency.jitter_half_width[1] == SimTime{14'667});
  CHECK(sc.sim.profiles[0].recall[0] == 1.0);
  CHECK(sc.sim.truth.anomaly_probability == 0.7);
  CHECK_FALSE(sc.sim.anomaly_mapping.anomalous[2]);
  CHECK(sc.sim.anomaly_mapping.anomalous[3]);
  CHECK(sc.sim.poll.every_k_cycles == 5);
  REQUIRE(sc.sim.commands.size() == 1);
  CHECK(std::get<std::int64_t>(sc.sim.commands[0].command.value) == 2);
  CHECK(sc.output.directory == "results");
}

TEST_CASE("errors carry the source and line") {
  CHECK(error_of("seed: 1\nbogus: 2\n").rfind("s.yaml:2:", 0) == 0);
  CHECK(error_of("seed: 1\nheuristics:\n  sensor:\n    depth: 0\n").rfind("s.yaml:", 0) == 0);
  CHECK(error_of("duration_ms: -5\n").rfind("s.yaml:1:", 0) == 0);
  CHECK(error_of("nodes:\n  count: 2\n  initial_mode: X\n").rfind("s.yaml:3:", 0) == 0);
  CHECK(error_of("latency:\n  jitter_fraction: 2\n").rfind("s.yaml:2:", 0) == 0);
  CHECK(error_of("seed: [1, 2\n").rfind("s.yaml:", 0) == 0);
  CHECK(error_of("seed: abc\n").find("wrong type") != std::string::npos);
  CHECK(error_of("heuristics:\n  gateway: {deescalate: 9, escalate: 8}\n").find("gateway_deescalate") !=
        std::string::npos);
  CHECK(error_of("accuracy:\n  cloud: {recall: [1, 1]}\n").rfind("s.yaml:2:", 0) == 0);
  CHECK(error_of("commands:\n  - {at_ms: 1, node: 5, property: state, method: SET, value: IDLE}\n") != "");
}

TEST_CASE("presets load and validate") {
  const auto names = preset_names();
  CHECK(names.size() == 3);
  for (const auto& n : names) CHECK_NOTHROW(load_preset(n));
  const auto latency = load_preset("paper-latency");
  CHECK(latency.sim.duration_ms == 1'800'000);
  CHECK(latency.sim.nodes.size() == 1);
  const auto bounds = load_preset("paper-battery-bounds");
  CHECK_FALSE(bounds.sim.heuristics_enabled);
  CHECK(bounds.sim.poll.every_k_cycles == 0);
  CHECK_THROWS_AS(load_preset("nope"), ConfigError);
}

TEST_CASE("energy model report") {
  const auto r = energy_model_report(SimConfig{});
  CHECK(r.onboard_cycle_mj == doctest::Approx(2003.83));
  CHECK(r.offboard_cycle_mj == doctest::Approx(3581.78));
  CHECK(r.onboard_cycle_ms == 40014);
  CHECK(r.offboard_cycle_ms == 44750);
  CHECK(r.savings_pct == doctest::Approx(44.05).epsilon(1e-3));
  CHECK(energy_model_json(r).find("\"energy_savings_pct\"") != std::string::npos);
}
