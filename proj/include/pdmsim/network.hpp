#pragma once

// Discrete-event simulation of sensor nodes, one gateway tier and one cloud
// tier exchanging prediction requests and mode commands.

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "pdmsim/core.hpp"
#include "pdmsim/energy.hpp"
#include "pdmsim/event_queue.hpp"
#include "pdmsim/heuristics.hpp"
#include "pdmsim/node.hpp"
#include "pdmsim/oracle.hpp"
#include "pdmsim/trace.hpp"

namespace pdmsim {

// End-to-end response latency per mode, plus optional uniform jitter.
struct LatencyModel {
  std::array<SimTime, 3> mean{SimTime{3'330}, SimTime{148'150}, SimTime{641'710}};
  std::array<SimTime, 3> jitter_half_width{};

  SimTime mean_for(InferenceMode m) const { return mean[static_cast<int>(m)]; }
  void set_jitter_fraction(double fraction);
  void validate() const;
};

struct LinkModel {
  double drop_probability = 0.0;  // per hop
  std::int64_t timeout_ms = 10'000;
};

struct ProvisioningModel {
  bool enabled = true;
  std::int64_t stage_latency_ms = 100;
};

struct NodeConfig {
  InferenceMode initial_mode = InferenceMode::Sensor;
  Energy battery_capacity = Energy::joules(18'648.0);
  double battery_voltage = 3.7;
  std::int64_t sleep_period_ms = 30'000;
};

struct ScheduledCommand {
  std::int64_t at_ms = 0;
  PropertyCommand command;
};

struct SimConfig {
  std::int64_t duration_ms = 30 * 60 * 1000;
  std::vector<NodeConfig> nodes{NodeConfig{}};
  HeuristicParams params;
  bool heuristics_enabled = true;
  bool blank_responses = true;
  EnergyTable energy;
  LatencyModel latency;
  std::array<TierAccuracyProfile, 3> profiles{TierAccuracyProfile::sensor_default(),
                                              TierAccuracyProfile::gateway_default(),
                                              TierAccuracyProfile::cloud_default()};
  GroundTruthProcess truth;
  AnomalyMapping anomaly_mapping;
  PollPolicy poll;
  LinkModel link;
  ProvisioningModel provisioning;
  std::int64_t gateway_service_ms = 0;
  std::int64_t cloud_service_ms = 0;
  std::vector<ScheduledCommand> commands;
  std::uint64_t seed = 1;
  bool stop_when_all_dead = true;

  void validate() const;
};

enum class MessageKind : std::uint8_t {
  PredictionRequest,
  PredictionResponse,
  BlankResponse,
  ModeCommand,
  PropertyCommand,
  PropertyResponse,
  ProvisioningStage,
};

struct Message {
  MessageKind kind = MessageKind::PredictionRequest;
  NodeId node = 0;
  std::uint64_t request_id = 0;
  SimTime send_time{};
  SimTime request_send_time{};
  InferenceMode mode = InferenceMode::Gateway;  // request: serving tier; mode-command: new mode
  std::optional<InferenceMode> previous_mode;   // node's mode at its previous prediction step
  std::uint64_t step = 0;
  ConditionClass truth = ConditionClass::Good;
  double battery_pct = 100.0;
  double payload_kb = 0.0;
  std::optional<pdmsim::PropertyCommand> command;
};

// Per-node outcome, for tests and reporting.
struct NodeOutcome {
  NodeId node = 0;
  bool dead = false;
  std::optional<SimTime> death_time;
  // Completed cycle time plus the delivered-energy share of the final cycle.
  double cycle_equivalent_lifetime_ms = 0.0;
  std::uint64_t cycles_completed = 0;
  InferenceMode final_mode = InferenceMode::Sensor;
  NodeState final_state = NodeState::Initial;
  Energy consumed;
};

struct SimResult {
  std::vector<TraceRecord> trace;
  EnergyLedger ledger;
  std::vector<NodeOutcome> nodes;
  SimTime end{};
};

class Simulator {
 public:
  explicit Simulator(SimConfig config);

  // Runs to the configured duration (or until every node is dead).
  SimResult run();
  SimResult run_until(SimTime until);

  // Test hooks. Both act at the current clock.
  void inject(const Message& msg);
  const SensorNode& node(NodeId id) const { return nodes_.at(id).node; }
  const AnomalyTracker* tier_tracker(InferenceMode tier, NodeId id) const;
  std::size_t gateway_queue_size() const { return gateway_.queue.size(); }
  const std::vector<TraceRecord>& trace() const { return trace_; }

 private:
  struct CycleStart { NodeId node; };
  struct StepEnd { NodeId node; std::size_t index; };
  struct PollEnd { NodeId node; bool had_pending; };
  struct Arrival { Message msg; };
  struct ServiceDone { InferenceMode tier; };
  struct Timeout { NodeId node; std::uint64_t request_id; };
  struct ProvisionStage { NodeId node; int stage; };
  struct OperatorCommand { pdmsim::PropertyCommand cmd; };
  using Event = std::variant<CycleStart, StepEnd, PollEnd, Arrival, ServiceDone, Timeout, ProvisionStage, OperatorCommand>;

  struct Outstanding {
    InferenceMode mode;
    std::uint64_t step;
    bool resolved = false;  // answered, dropped or rejected
    bool received = false;
  };

  struct NodeRuntime {
    SensorNode node;
    CyclePlan plan;
    bool cycle_active = false;
    SimTime cycle_start{};
    Energy cycle_energy_charged;
    Energy planned_energy;
    double planned_ms = 0.0;
    std::uint64_t cycles_completed = 0;
    double completed_cycle_ms = 0.0;
    double partial_cycle_ms = 0.0;
    std::optional<SimTime> death_time;
    std::deque<Message> inbox;  // held while the radio is off
    std::map<std::uint64_t, Outstanding> outstanding;
  };

  struct Tier {
    InferenceMode mode;
    std::deque<Message> queue;
    bool busy = false;
    SimTime service_time{};
    std::map<NodeId, AnomalyTracker> trackers;
  };

  void dispatch(EventQueue<Event>::Entry& e);
  void on_cycle_start(NodeId id);
  void on_step_end(NodeId id, std::size_t index);
  void on_poll_end(NodeId id, bool had_pending);
  void on_arrival(const Message& msg);
  void on_service_done(InferenceMode tier);
  void on_timeout(NodeId id, std::uint64_t request_id);
  void on_provision_stage(NodeId id, int stage);

  void start_cycle_at(NodeId id, SimTime t);
  void finish_cycle(NodeRuntime& rt);
  void replan_tail(NodeRuntime& rt, std::size_t index);
  bool charge(NodeRuntime& rt, Operation op, Energy e);
  void on_device_predict(NodeRuntime& rt);
  void send_request(NodeRuntime& rt);
  void handle_prediction(Tier& tier, const Message& request, std::size_t queue_size);
  void deliver_to_node(NodeRuntime& rt, const Message& msg);
  bool radio_listening(const NodeRuntime& rt) const;
  void process_node_message(NodeRuntime& rt, const Message& msg);
  void apply_command(NodeRuntime& rt, const pdmsim::PropertyCommand& cmd, bool log_command);
  void reset_all_trackers(NodeId id);
  void mark_dead(NodeRuntime& rt);
  SimTime sample_latency(InferenceMode mode, NodeId node, std::uint64_t step);
  bool link_drops(NodeId node, std::uint64_t step, int hop);
  Tier& tier_for(InferenceMode m);

  TraceRecord record(TraceKind kind, const NodeRuntime& rt) const;
  void emit(TraceRecord r) { trace_.push_back(std::move(r)); }
  SimResult finish(SimTime end);

  SimConfig config_;
  EventQueue<Event> queue_;
  std::map<NodeId, NodeRuntime> nodes_;
  Tier gateway_;
  Tier cloud_;
  EnergyLedger ledger_;
  std::vector<TraceRecord> trace_;
  std::uint64_t next_request_id_ = 0;
  bool finished_ = false;
};

}  // namespace pdmsim
