#include "pdmsim/node.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace pdmsim {

namespace {

constexpr std::array<PropertyInfo, 8> kProperties{{
    {Property::TfModelBytes, "tf_model_bytes", true, false, false, true, true, "uint8*"},
    {Property::TfModelSize, "tf_model_size", true, false, false, true, true, "uint32"},
    {Property::ProvisionedNodes, "provisioned_nodes", true, true, true, true, false, "char**"},
    {Property::GatewayId, "gateway_id", false, true, false, true, false, "char*"},
    {Property::SensorId, "sensor_id", false, true, false, false, true, "char*"},
    {Property::SleepPeriod, "sleep_period", true, true, false, false, true, "uint32"},
    {Property::State, "state", true, true, false, false, true, "uint32"},
    {Property::InferenceMode, "inference_mode", true, true, false, false, true, "uint8"},
}};

struct Edge {
  NodeState from;
  LifecycleEvent event;
  NodeState to;
};

constexpr std::array<Edge, 6> kEdges{{
    {NodeState::Initial, LifecycleEvent::ProvisioningComplete, NodeState::Unlocked},
    {NodeState::Unlocked, LifecycleEvent::PropertiesUpdated, NodeState::Locked},
    {NodeState::Locked, LifecycleEvent::ConfigConfirm, NodeState::Working},
    {NodeState::Locked, LifecycleEvent::ConfigReject, NodeState::Unlocked},
    {NodeState::Working, LifecycleEvent::IdleCommand, NodeState::Idle},
    {NodeState::Idle, LifecycleEvent::ResetCommand, NodeState::Unlocked},
}};

std::optional<std::int64_t> as_int(const PropertyValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  return std::nullopt;
}

bool fits_u32(std::int64_t v) { return v >= 0 && v <= 0xFFFF'FFFFll; }

PropertyResponse status(CommandStatus s) { return PropertyResponse{s, {}}; }

}  // namespace

std::string_view to_string(LifecycleEvent e) {
  switch (e) {
    case LifecycleEvent::ProvisioningComplete: return "provisioning-complete";
    case LifecycleEvent::PropertiesUpdated: return "properties-updated";
    case LifecycleEvent::ConfigConfirm: return "config-confirm";
    case LifecycleEvent::ConfigReject: return "config-reject";
    case LifecycleEvent::IdleCommand: return "idle-command";
    case LifecycleEvent::ResetCommand: return "reset-command";
  }
  return "?";
}

std::optional<NodeState> next_state(NodeState from, LifecycleEvent event) {
  for (const auto& e : kEdges) {
    if (e.from == from && e.event == event) return e.to;
  }
  return std::nullopt;
}

std::optional<LifecycleEvent> event_for(NodeState from, NodeState to) {
  for (const auto& e : kEdges) {
    if (e.from == from && e.to == to) return e.event;
  }
  return std::nullopt;
}

const PropertyInfo& property_info(Property p) { return kProperties[static_cast<std::size_t>(p)]; }

std::optional<Property> parse_property(std::string_view name) {
  for (const auto& info : kProperties) {
    if (info.name == name) return info.property;
  }
  return std::nullopt;
}

std::optional<Method> parse_method(std::string_view name) {
  if (name == "SET" || name == "set") return Method::Set;
  if (name == "GET" || name == "get") return Method::Get;
  if (name == "ADD" || name == "add") return Method::Add;
  return std::nullopt;
}

std::string_view to_string(Property p) { return property_info(p).name; }

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Set: return "SET";
    case Method::Get: return "GET";
    case Method::Add: return "ADD";
  }
  return "?";
}

std::string_view to_string(CommandStatus s) {
  switch (s) {
    case CommandStatus::Ok: return "ok";
    case CommandStatus::MethodNotAllowed: return "method-not-allowed";
    case CommandStatus::NotApplicable: return "not-applicable";
    case CommandStatus::InvalidValue: return "invalid-value";
    case CommandStatus::ProtocolViolation: return "protocol-violation";
  }
  return "?";
}

bool method_allowed(Property p, Method m) {
  const auto& info = property_info(p);
  switch (m) {
    case Method::Set: return info.allows_set;
    case Method::Get: return info.allows_get;
    case Method::Add: return info.allows_add;
  }
  return false;
}

bool targets(Property p, DeviceKind device) {
  const auto& info = property_info(p);
  return device == DeviceKind::Gateway ? info.on_gateway : info.on_sensor;
}

SensorNode SensorNode::make(NodeId id, unsigned sensor_depth) {
  SensorNode n;
  n.id = id;
  n.sensor_id = "sensor-" + std::to_string(id);
  n.tracker = new_tracker(sensor_depth);
  return n;
}

TransitionOutcome step_state_machine(SensorNode& node, LifecycleEvent event) {
  TransitionOutcome out{node.state, node.state, false};
  if (const auto to = next_state(node.state, event)) {
    node.state = *to;
    out.to = *to;
  } else {
    out.violation = true;
  }
  return out;
}

CommandEffect apply_property_command(SensorNode& node, const PropertyCommand& cmd) {
  CommandEffect effect;
  if (!method_allowed(cmd.property, cmd.method)) {
    effect.response = status(CommandStatus::MethodNotAllowed);
    return effect;
  }
  if (!targets(cmd.property, DeviceKind::Sensor)) {
    effect.response = status(CommandStatus::NotApplicable);
    return effect;
  }

  if (cmd.method == Method::Get) {
    switch (cmd.property) {
      case Property::SensorId: effect.response.value = node.sensor_id; break;
      case Property::SleepPeriod: effect.response.value = node.sleep_period_ms; break;
      case Property::State: effect.response.value = static_cast<std::int64_t>(node.state); break;
      case Property::InferenceMode: effect.response.value = static_cast<std::int64_t>(node.mode); break;
      default: effect.response = status(CommandStatus::NotApplicable); break;
    }
    return effect;
  }

  const auto value = as_int(cmd.value);
  if (!value) {
    effect.response = status(CommandStatus::InvalidValue);
    return effect;
  }

  switch (cmd.property) {
    case Property::TfModelBytes:
    case Property::TfModelSize:
      if (!fits_u32(*value)) {
        effect.response = status(CommandStatus::InvalidValue);
        break;
      }
      (cmd.property == Property::TfModelSize ? node.tf_model_size : node.tf_model_bytes) = *value;
      break;
    case Property::SleepPeriod:
      if (!fits_u32(*value)) {
        effect.response = status(CommandStatus::InvalidValue);
        break;
      }
      node.sleep_period_ms = *value;
      break;
    case Property::InferenceMode: {
      if (*value < 0 || *value > 2) {
        effect.response = status(CommandStatus::InvalidValue);
        break;
      }
      const auto mode = static_cast<InferenceMode>(*value);
      if (mode != node.mode) {
        effect.mode_changed_from = node.mode;
        node.mode = mode;
        node.tracker = new_tracker(node.tracker.depth);
      }
      break;
    }
    case Property::State: {
      if (*value < 0 || *value > 4) {
        effect.response = status(CommandStatus::InvalidValue);
        break;
      }
      const auto target = static_cast<NodeState>(*value);
      const auto event = event_for(node.state, target);
      if (!event) {
        effect.transition = TransitionOutcome{node.state, node.state, true};
        effect.response = status(CommandStatus::ProtocolViolation);
        break;
      }
      effect.transition = step_state_machine(node, *event);
      break;
    }
    default:
      effect.response = status(CommandStatus::NotApplicable);
      break;
  }
  return effect;
}

SimTime CyclePlan::duration() const {
  return steps.empty() ? SimTime{} : steps.back().end - steps.front().start;
}

Energy CyclePlan::energy() const {
  Energy e;
  for (const auto& s : steps) e += s.energy;
  return e;
}

CyclePlan run_cycle(const SensorNode& node, SimTime now, const EnergyTable& table, const PollPolicy& poll) {
  if (node.state != NodeState::Working) {
    throw SimulationError("run_cycle called on node " + std::to_string(node.id) + " in state " +
                          std::string(to_string(node.state)));
  }
  CyclePlan plan;
  plan.mode = node.mode;
  plan.end = now;
  if (node.dead || node.battery.exhausted()) {
    plan.battery_dead = true;
    return plan;
  }

  auto push = [&](Operation op, std::int64_t ms, Energy e) {
    plan.steps.push_back(CycleStep{op, plan.end, plan.end + from_ms(ms), e});
    plan.end = plan.steps.back().end;
  };
  push(Operation::Sleep, node.sleep_period_ms, table.sleep_energy(node.sleep_period_ms));
  push(Operation::Sampling, table.sampling.duration_ms, table.sampling.energy);
  if (node.mode == InferenceMode::Sensor) {
    push(Operation::LocalInference, table.local_inference.duration_ms, table.local_inference.energy);
    plan.poll_due = poll.every_k_cycles > 0 && (node.cycles_started % poll.every_k_cycles) == poll.every_k_cycles - 1;
  } else {
    push(Operation::Compression, table.compression.duration_ms, table.compression.energy);
    push(Operation::RadioTx, table.radio_tx.duration_ms, table.radio_tx.energy);
  }
  return plan;
}

PollCost poll_cost(bool commands_pending, const PollPolicy& poll, const EnergyTable& table) {
  if (commands_pending) return PollCost{table.radio_tx.duration_ms, table.radio_tx.energy};
  const double f = std::clamp(poll.empty_fraction, 0.0, 1.0);
  return PollCost{std::llround(f * static_cast<double>(table.radio_tx.duration_ms)),
                  Energy::nanojoules(std::llround(f * static_cast<double>(table.radio_tx.energy.nj())))};
}

}  // namespace pdmsim
