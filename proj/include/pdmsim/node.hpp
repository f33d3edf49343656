#pragma once

// Sensor node behaviour: lifecycle state machine, device properties and
// duty-cycle planning.

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pdmsim/core.hpp"
#include "pdmsim/energy.hpp"

namespace pdmsim {

// ---------------------------------------------------------------------------
// Lifecycle
// ---------------------------------------------------------------------------
enum class LifecycleEvent : std::uint8_t {
  ProvisioningComplete,
  PropertiesUpdated,
  ConfigConfirm,
  ConfigReject,
  IdleCommand,
  ResetCommand,
};

std::string_view to_string(LifecycleEvent e);

// The single legal target for (state, event), if any.
std::optional<NodeState> next_state(NodeState from, LifecycleEvent event);

// The event that moves `from` to `to`, if that edge exists.
std::optional<LifecycleEvent> event_for(NodeState from, NodeState to);

// ---------------------------------------------------------------------------
// Device properties
// ---------------------------------------------------------------------------
enum class Property : std::uint8_t {
  TfModelBytes,
  TfModelSize,
  ProvisionedNodes,
  GatewayId,
  SensorId,
  SleepPeriod,
  State,
  InferenceMode,
};

enum class Method : std::uint8_t { Set, Get, Add };

enum class DeviceKind : std::uint8_t { Gateway, Sensor };

struct PropertyInfo {
  Property property;
  std::string_view name;
  bool allows_set;
  bool allows_get;
  bool allows_add;
  bool on_gateway;
  bool on_sensor;
  std::string_view data_type;
};

const PropertyInfo& property_info(Property p);
std::optional<Property> parse_property(std::string_view name);
std::optional<Method> parse_method(std::string_view name);
std::string_view to_string(Property p);
std::string_view to_string(Method m);
bool method_allowed(Property p, Method m);
bool targets(Property p, DeviceKind device);

// Integers carry uint8/uint32 properties (mode and state use their enum
// codes); tf_model_bytes is recorded as an opaque byte count.
using PropertyValue = std::variant<std::monostate, std::int64_t, std::string, std::vector<std::string>>;

struct PropertyCommand {
  NodeId target = 0;
  Property property = Property::SleepPeriod;
  Method method = Method::Get;
  PropertyValue value;
};

enum class CommandStatus : std::uint8_t { Ok, MethodNotAllowed, NotApplicable, InvalidValue, ProtocolViolation };

std::string_view to_string(CommandStatus s);

struct PropertyResponse {
  CommandStatus status = CommandStatus::Ok;
  PropertyValue value;
};

// ---------------------------------------------------------------------------
// Node
// ---------------------------------------------------------------------------
struct SensorNode {
  NodeId id = 0;
  std::string sensor_id;
  NodeState state = NodeState::Initial;
  InferenceMode mode = InferenceMode::Sensor;
  AnomalyTracker tracker = new_tracker(32);
  BatteryState battery = BatteryState::lipo_1400mah();
  std::int64_t sleep_period_ms = 30'000;
  std::int64_t tf_model_size = 0;
  std::int64_t tf_model_bytes = 0;
  std::deque<PropertyCommand> pending_commands;

  // Mode the node was in at its previous prediction step; unset before the
  // first one.
  std::optional<InferenceMode> last_step_mode;
  std::uint64_t next_step = 0;
  std::uint64_t cycles_started = 0;
  bool dead = false;

  static SensorNode make(NodeId id, unsigned sensor_depth);
};

struct TransitionOutcome {
  NodeState from;
  NodeState to;
  bool violation = false;
};

// Applies a lifecycle event. Illegal events leave the state unchanged and
// report a violation.
TransitionOutcome step_state_machine(SensorNode& node, LifecycleEvent event);

struct CommandEffect {
  PropertyResponse response;
  std::optional<InferenceMode> mode_changed_from;
  std::optional<TransitionOutcome> transition;
};

// Executes a property command against the node.
CommandEffect apply_property_command(SensorNode& node, const PropertyCommand& cmd);

// ---------------------------------------------------------------------------
// Duty cycle
// ---------------------------------------------------------------------------
struct PollPolicy {
  unsigned every_k_cycles = 3;  // 0 disables polling
  double empty_fraction = 0.1;  // share of a radio transmission charged for an empty poll
};

struct CycleStep {
  Operation op;
  SimTime start;
  SimTime end;
  Energy energy;
};

struct CyclePlan {
  bool battery_dead = false;
  InferenceMode mode = InferenceMode::Sensor;
  std::vector<CycleStep> steps;  // sleep, sampling, then per-mode work
  bool poll_due = false;         // S mode only; poll runs after the last step
  SimTime end{};

  SimTime duration() const;
  Energy energy() const;
};

// Plans one WORKING-state cycle beginning at `now` in the node's current
// mode. Throws SimulationError if the node is not WORKING.
CyclePlan run_cycle(const SensorNode& node, SimTime now, const EnergyTable& table, const PollPolicy& poll);

struct PollCost {
  std::int64_t duration_ms = 0;
  Energy energy;
};

PollCost poll_cost(bool commands_pending, const PollPolicy& poll, const EnergyTable& table);

}  // namespace pdmsim
