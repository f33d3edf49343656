#include <doctest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "pdmsim/network.hpp"
#include "pdmsim/trace.hpp"

using namespace pdmsim;

namespace {

SimConfig quiet_config(InferenceMode mode, double anomaly_probability) {
  SimConfig cfg;
  cfg.provisioning.enabled = false;
  cfg.poll.every_k_cycles = 0;
  cfg.nodes[0].initial_mode = mode;
  cfg.truth.anomaly_probability = anomaly_probability;
  for (auto& p : cfg.profiles) p.recall = {1.0, 1.0, 1.0, 1.0};
  return cfg;
}

std::vector<TraceRecord> of_kind(const std::vector<TraceRecord>& trace, TraceKind k) {
  std::vector<TraceRecord> out;
  std::copy_if(trace.begin(), trace.end(), std::back_inserter(out), [k](const auto& r) { return r.kind == k; });
  return out;
}

std::size_t count(const std::vector<TraceRecord>& trace, TraceKind k) { return of_kind(trace, k).size(); }

}  // namespace

TEST_CASE("requests from unknown nodes are dropped with a trace record") {
  SimConfig cfg = quiet_config(InferenceMode::Gateway, 0.0);
  Simulator sim(cfg);
  Message m;
  m.kind = MessageKind::PredictionRequest;
  m.node = 99;
  m.mode = InferenceMode::Gateway;
  sim.inject(m);
  const auto r = sim.run_until(from_ms(10));
  const auto unknown = of_kind(r.trace, TraceKind::UnknownNode);
  REQUIRE(unknown.size() == 1);
  CHECK(unknown[0].node == 99);
  CHECK(count(r.trace, TraceKind::Prediction) == 0);
}

TEST_CASE("response latency equals the configured mean without jitter") {
  for (auto [mode, expect] : {std::pair{InferenceMode::Gateway, SimTime{148'150}},
                              std::pair{InferenceMode::Cloud, SimTime{641'710}}}) {
    SimConfig cfg = quiet_config(mode, 0.3);
    cfg.heuristics_enabled = false;
    cfg.duration_ms = 600'000;
    const auto r = Simulator(cfg).run();
    const auto responses = of_kind(r.trace, TraceKind::BlankResponse);
    REQUIRE(responses.size() >= 10);
    for (const auto& x : responses) {
      CHECK(x.latency == expect);
      CHECK(x.mode == mode);
    }
  }
  SimConfig cfg = quiet_config(InferenceMode::Sensor, 0.3);
  cfg.heuristics_enabled = false;
  for (const auto& x : of_kind(Simulator(cfg).run().trace, TraceKind::Prediction)) {
    CHECK(x.latency == SimTime{3'330});
  }
}

TEST_CASE("jittered latency stays inside the configured band") {
  SimConfig cfg = quiet_config(InferenceMode::Gateway, 0.3);
  cfg.heuristics_enabled = false;
  cfg.latency.set_jitter_fraction(0.1);
  cfg.duration_ms = 3'600'000;
  for (const auto& x : of_kind(Simulator(cfg).run().trace, TraceKind::BlankResponse)) {
    CHECK(*x.latency >= SimTime{133'335});
    CHECK(*x.latency <= SimTime{162'965});
  }
}

TEST_CASE("gateway escalates to the cloud once the window fills with anomalies") {
  SimConfig cfg = quiet_config(InferenceMode::Gateway, 1.0);
  const auto r = Simulator(cfg).run();
  const auto preds = of_kind(r.trace, TraceKind::Prediction);
  const auto cmds = of_kind(r.trace, TraceKind::ModeCommand);
  REQUIRE(!cmds.empty());
  // Warm-up answers are blank; the 16th prediction fills the window.
  std::size_t blanks_before = 0;
  for (const auto& x : r.trace) {
    if (x.kind == TraceKind::ModeCommand) break;
    blanks_before += x.kind == TraceKind::BlankResponse;
  }
  CHECK(blanks_before == 15);
  CHECK(preds[15].tau == 16u);
  CHECK(preds[15].sigma == 16u);
  CHECK(r.trace.end() != std::find_if(r.trace.begin(), r.trace.end(), [](const auto& x) {
          return x.kind == TraceKind::ModeChange && x.mode == InferenceMode::Cloud;
        }));
  CHECK(r.nodes[0].final_mode == InferenceMode::Cloud);
}

TEST_CASE("cloud de-escalates to the gateway when anomalies stop") {
  SimConfig cfg = quiet_config(InferenceMode::Cloud, 0.0);
  const auto r = Simulator(cfg).run();
  const auto changes = of_kind(r.trace, TraceKind::ModeChange);
  REQUIRE(!changes.empty());
  CHECK(changes[0].mode == InferenceMode::Gateway);
  CHECK(count(r.trace, TraceKind::BlankResponse) >= 7);
}

TEST_CASE("matching verdicts produce blank responses only") {
  SimConfig cfg = quiet_config(InferenceMode::Cloud, 1.0);
  const auto r = Simulator(cfg).run();
  CHECK(count(r.trace, TraceKind::ModeCommand) == 0);
  CHECK(count(r.trace, TraceKind::ModeChange) == 0);
  CHECK(count(r.trace, TraceKind::BlankResponse) == count(r.trace, TraceKind::RequestSent));
}

TEST_CASE("sensor escalates after the window fills") {
  SimConfig cfg = quiet_config(InferenceMode::Sensor, 1.0);
  cfg.duration_ms = 3'600'000;
  const auto r = Simulator(cfg).run();
  const auto preds = of_kind(r.trace, TraceKind::Prediction);
  const auto changes = of_kind(r.trace, TraceKind::ModeChange);
  REQUIRE(!changes.empty());
  CHECK(changes[0].mode == InferenceMode::Gateway);
  // The 31st prediction is still warm-up; the 32nd triggers the switch.
  CHECK(preds[30].tau == 31u);
  CHECK(preds[31].tau == 32u);
  CHECK(changes[0].time == preds[31].time);
}

TEST_CASE("low battery keeps the sensor on-board") {
  SimConfig cfg = quiet_config(InferenceMode::Sensor, 1.0);
  cfg.duration_ms = 10 * 3'600'000;
  // Room for 36 cycles: the window fills at 32 with about 11% left.
  cfg.nodes[0].battery_capacity = Energy::millijoules(36 * 2003.83);
  const auto r = Simulator(cfg).run();
  CHECK(count(r.trace, TraceKind::ModeChange) == 0);
  CHECK(count(r.trace, TraceKind::BatteryDead) == 1);
  CHECK(r.nodes[0].dead);
}

TEST_CASE("tier trackers are isolated per node") {
  SimConfig cfg = quiet_config(InferenceMode::Gateway, 1.0);
  cfg.nodes.push_back(cfg.nodes[0]);
  Simulator sim(cfg);
  for (std::uint64_t i = 0; i < 5; ++i) {
    Message m;
    m.kind = MessageKind::PredictionRequest;
    m.node = 0;
    m.request_id = 1000 + i;
    m.mode = InferenceMode::Gateway;
    m.step = 1000 + i;
    m.truth = ConditionClass::Unacceptable;
    sim.inject(m);
  }
  sim.run_until(from_ms(1000));
  REQUIRE(sim.tier_tracker(InferenceMode::Gateway, 0));
  REQUIRE(sim.tier_tracker(InferenceMode::Gateway, 1));
  CHECK(sim.tier_tracker(InferenceMode::Gateway, 0)->length == 5);
  CHECK(sim.tier_tracker(InferenceMode::Gateway, 0)->history == 0b11111);
  CHECK(sim.tier_tracker(InferenceMode::Gateway, 1)->length == 0);
  CHECK(sim.tier_tracker(InferenceMode::Cloud, 0)->length == 0);
}

TEST_CASE("queue length seen by the gateway heuristic") {
  SimConfig cfg = quiet_config(InferenceMode::Gateway, 0.0);
  cfg.gateway_service_ms = 10;
  Simulator sim(cfg);
  for (std::uint64_t i = 0; i < 6; ++i) {
    Message m;
    m.kind = MessageKind::PredictionRequest;
    m.node = 0;
    m.request_id = 500 + i;
    m.mode = InferenceMode::Gateway;
    m.step = 500 + i;
    sim.inject(m);
  }
  CHECK(sim.gateway_queue_size() == 6);
  const auto r = sim.run_until(from_ms(1000));
  const auto preds = of_kind(r.trace, TraceKind::Prediction);
  REQUIRE(preds.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(preds[i].queue == 5 - i);
    CHECK(preds[i].time == from_ms(10 * static_cast<std::int64_t>(i + 1)));
  }
}

TEST_CASE("mode commands to a sleeping sensor wait for the command poll") {
  SimConfig cfg = quiet_config(InferenceMode::Sensor, 0.0);
  cfg.poll.every_k_cycles = 3;
  Simulator sim(cfg);
  Message m;
  m.kind = MessageKind::ModeCommand;
  m.node = 0;
  m.request_id = 77;
  m.mode = InferenceMode::Gateway;
  sim.inject(m);
  const auto r = sim.run_until(from_ms(600'000));
  const auto polls = of_kind(r.trace, TraceKind::CommandPoll);
  const auto changes = of_kind(r.trace, TraceKind::ModeChange);
  REQUIRE(!polls.empty());
  REQUIRE(changes.size() == 1);
  CHECK(changes[0].time == polls[0].time);
  CHECK(changes[0].mode == InferenceMode::Gateway);
  // Three S cycles plus one full radio poll.
  CHECK(polls[0].time == from_ms(3 * 40'014 + 4'700));
}

TEST_CASE("empty command polls cost a tenth of a transmission") {
  SimConfig cfg = quiet_config(InferenceMode::Sensor, 0.0);
  cfg.poll.every_k_cycles = 3;
  const auto r = Simulator(cfg).run();
  int polls = 0;
  for (const auto& e : r.ledger.entries()) {
    if (e.operation != Operation::CommandPoll) continue;
    ++polls;
    CHECK(e.energy == Energy::millijoules(157.0));
  }
  CHECK(polls > 0);
  CHECK(of_kind(r.trace, TraceKind::CommandPoll)[0].time == from_ms(3 * 40'014 + 470));
}

TEST_CASE("request conservation with lossy links") {
  SimConfig cfg;
  cfg.nodes.assign(3, NodeConfig{});
  cfg.nodes[1].initial_mode = InferenceMode::Gateway;
  cfg.nodes[2].initial_mode = InferenceMode::Cloud;
  cfg.link.drop_probability = 0.2;
  cfg.duration_ms = 3'600'000;
  cfg.seed = 17;
  const auto r = Simulator(cfg).run();
  const auto sent = count(r.trace, TraceKind::RequestSent);
  const auto accounted = count(r.trace, TraceKind::BlankResponse) + count(r.trace, TraceKind::PredictionResponse) +
                         count(r.trace, TraceKind::ModeCommand) + count(r.trace, TraceKind::RequestDropped) +
                         count(r.trace, TraceKind::ResponseDropped) + count(r.trace, TraceKind::UnknownNode) +
                         count(r.trace, TraceKind::RequestInFlight);
  CHECK(sent > 50);
  CHECK(count(r.trace, TraceKind::RequestDropped) > 0);
  CHECK(count(r.trace, TraceKind::RequestTimeout) > 0);
  CHECK(sent == accounted);
}

TEST_CASE("provisioning walks the node to WORKING") {
  SimConfig cfg;
  cfg.duration_ms = 60'000;
  const auto r = Simulator(cfg).run();
  std::vector<NodeState> states;
  for (const auto& x : of_kind(r.trace, TraceKind::StateChange)) states.push_back(*x.state);
  CHECK(states == std::vector<NodeState>{NodeState::Unlocked, NodeState::Locked, NodeState::Working});
  CHECK(count(r.trace, TraceKind::ProvisionDiscovery) == 1);
  CHECK(count(r.trace, TraceKind::ProvisionTermination) == 1);
  CHECK(count(r.trace, TraceKind::ProtocolViolation) == 0);
}

TEST_CASE("operator commands: idle stops cycles, illegal state change is a violation") {
  SimConfig cfg = quiet_config(InferenceMode::Gateway, 0.0);
  cfg.heuristics_enabled = false;
  cfg.duration_ms = 600'000;
  cfg.commands.push_back({100'000, PropertyCommand{0, Property::State, Method::Set,
                                                   static_cast<std::int64_t>(NodeState::Idle)}});
  cfg.commands.push_back({200'000, PropertyCommand{0, Property::State, Method::Set,
                                                   static_cast<std::int64_t>(NodeState::Working)}});
  cfg.commands.push_back({300'000, PropertyCommand{0, Property::SensorId, Method::Set, std::string("x")}});
  const auto r = Simulator(cfg).run();
  CHECK(count(r.trace, TraceKind::ProtocolViolation) == 1);
  CHECK(count(r.trace, TraceKind::PropertyRejected) == 2);
  for (const auto& x : of_kind(r.trace, TraceKind::SampleWindow)) CHECK(x.time < from_ms(100'000));
  CHECK(r.nodes[0].final_state == NodeState::Idle);
}

TEST_CASE("commands to a sensor-mode node with polling off are never delivered") {
  SimConfig cfg = quiet_config(InferenceMode::Sensor, 0.0);
  cfg.commands.push_back({100'000, PropertyCommand{0, Property::State, Method::Set,
                                                   static_cast<std::int64_t>(NodeState::Idle)}});
  const auto r = Simulator(cfg).run();
  CHECK(count(r.trace, TraceKind::PropertyCommand) == 0);
  CHECK(r.nodes[0].final_state == NodeState::Working);
}

TEST_CASE("a mode command arriving after the cycle was planned changes that cycle") {
  // Back-to-back windows: the gateway's answer lands during the next sample window.
  SimConfig cfg = quiet_config(InferenceMode::Gateway, 0.0);
  cfg.nodes[0].sleep_period_ms = 0;
  const auto r = Simulator(cfg).run();
  const auto changes = of_kind(r.trace, TraceKind::ModeChange);
  REQUIRE(!changes.empty());
  CHECK(changes[0].mode == InferenceMode::Sensor);
  // The first sensor-side prediction follows the next window, not a transmission.
  const auto it = std::find_if(r.trace.begin(), r.trace.end(), [&](const auto& x) {
    return x.time > changes[0].time && (x.kind == TraceKind::RequestSent ||
                                        (x.kind == TraceKind::Prediction && x.mode == InferenceMode::Sensor));
  });
  REQUIRE(it != r.trace.end());
  CHECK(it->kind == TraceKind::Prediction);
}

TEST_CASE("identical configuration gives an identical trace") {
  SimConfig cfg;
  cfg.nodes.assign(4, NodeConfig{});
  cfg.nodes[3].initial_mode = InferenceMode::Cloud;
  cfg.latency.set_jitter_fraction(0.1);
  cfg.link.drop_probability = 0.05;
  cfg.seed = 123;
  std::ostringstream a, b;
  write_trace_csv(a, Simulator(cfg).run().trace);
  write_trace_csv(b, Simulator(cfg).run().trace);
  CHECK(a.str() == b.str());
  cfg.seed = 124;
  std::ostringstream c;
  write_trace_csv(c, Simulator(cfg).run().trace);
  CHECK(a.str() != c.str());
}

TEST_CASE("adding a node does not perturb another node's streams") {
  SimConfig one;
  one.heuristics_enabled = false;
  one.nodes[0].initial_mode = InferenceMode::Gateway;
  one.latency.set_jitter_fraction(0.1);
  SimConfig two = one;
  two.nodes.push_back(NodeConfig{});
  auto node0 = [](const SimResult& r) {
    std::vector<TraceRecord> out;
    for (const auto& x : r.trace) {
      if (x.node == 0 && x.kind != TraceKind::Prediction) out.push_back(x);
      if (x.node == 0 && x.kind == TraceKind::Prediction) {
        auto y = x;
        y.queue.reset();
        out.push_back(y);
      }
    }
    return out;
  };
  CHECK(node0(Simulator(one).run()) == node0(Simulator(two).run()));
}

TEST_CASE("dead nodes stop cycling") {
  SimConfig cfg = quiet_config(InferenceMode::Gateway, 0.3);
  cfg.heuristics_enabled = false;
  cfg.nodes[0].battery_capacity = Energy::millijoules(3 * 3581.78 + 100);
  cfg.stop_when_all_dead = false;
  cfg.duration_ms = 600'000;
  const auto r = Simulator(cfg).run();
  const auto dead = of_kind(r.trace, TraceKind::BatteryDead);
  REQUIRE(dead.size() == 1);
  for (const auto& x : r.trace) {
    if (x.node == 0 && x.time > dead[0].time) {
      CHECK((x.kind == TraceKind::RunEnd || x.kind == TraceKind::ResponseDropped ||
             x.kind == TraceKind::RequestInFlight));
    }
  }
  CHECK(r.nodes[0].cycles_completed == 3);
}
