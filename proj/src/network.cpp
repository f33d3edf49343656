#include "pdmsim/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pdmsim {

namespace {

constexpr int kProvisionStages = 4;

TraceKind provision_kind(int stage) {
  switch (stage) {
    case 1: return TraceKind::ProvisionDiscovery;
    case 2: return TraceKind::ProvisionSession;
    case 3: return TraceKind::ProvisionConfiguration;
    default: return TraceKind::ProvisionTermination;
  }
}

PropertyCommand set_command(NodeId node, Property p, std::int64_t value) {
  return PropertyCommand{node, p, Method::Set, value};
}

bool is_response(MessageKind k) {
  return k == MessageKind::BlankResponse || k == MessageKind::PredictionResponse || k == MessageKind::ModeCommand;
}

}  // namespace

void LatencyModel::set_jitter_fraction(double fraction) {
  for (int m = 0; m < 3; ++m) {
    jitter_half_width[m] = SimTime{std::llround(fraction * static_cast<double>(mean[m].count()))};
  }
}

void LatencyModel::validate() const {
  for (int m = 0; m < 3; ++m) {
    if (mean[m].count() <= 0) throw ConfigError("latency: mean latency must be positive");
    if (jitter_half_width[m].count() < 0 || jitter_half_width[m] >= mean[m]) {
      throw ConfigError("latency: jitter half-width must be in [0, mean)");
    }
  }
}

void SimConfig::validate() const {
  if (duration_ms < 0) throw ConfigError("duration_ms must be non-negative");
  params.validate();
  energy.validate();
  latency.validate();
  for (const auto& p : profiles) p.validate();
  for (int m = 0; m < 3; ++m) {
    if (profiles[m].tier != static_cast<InferenceMode>(m)) throw ConfigError("accuracy profiles out of tier order");
  }
  truth.validate();
  for (const auto& n : nodes) {
    if (n.battery_capacity < Energy{}) throw ConfigError("node battery capacity must be non-negative");
    if (n.sleep_period_ms < 0 || n.sleep_period_ms > 0xFFFF'FFFFll) {
      throw ConfigError("node sleep_period_ms must fit in uint32");
    }
  }
  if (!(link.drop_probability >= 0.0 && link.drop_probability <= 1.0)) {
    throw ConfigError("link drop_probability must be in [0, 1]");
  }
  if (link.timeout_ms <= 0) throw ConfigError("link timeout_ms must be positive");
  if (provisioning.stage_latency_ms < 0) throw ConfigError("provisioning stage latency must be non-negative");
  if (gateway_service_ms < 0 || cloud_service_ms < 0) throw ConfigError("service times must be non-negative");
  if (!(poll.empty_fraction >= 0.0 && poll.empty_fraction <= 1.0)) {
    throw ConfigError("poll empty_fraction must be in [0, 1]");
  }
  for (const auto& c : commands) {
    if (c.at_ms < 0) throw ConfigError("scheduled command time must be non-negative");
    if (c.command.target >= nodes.size()) throw ConfigError("scheduled command targets an unknown node");
  }
}

Simulator::Simulator(SimConfig config) : config_(std::move(config)) {
  config_.validate();
  config_.truth.seed = derive_seed(config_.seed, "ground-truth");
  gateway_.mode = InferenceMode::Gateway;
  gateway_.service_time = from_ms(config_.gateway_service_ms);
  cloud_.mode = InferenceMode::Cloud;
  cloud_.service_time = from_ms(config_.cloud_service_ms);

  if (config_.duration_ms == 0) return;

  for (NodeId id = 0; id < config_.nodes.size(); ++id) {
    const auto& nc = config_.nodes[id];
    NodeRuntime rt;
    rt.node = SensorNode::make(id, config_.params.sensor_depth);
    rt.node.mode = nc.initial_mode;
    rt.node.battery = BatteryState::with_capacity(nc.battery_capacity, nc.battery_voltage);
    rt.node.sleep_period_ms = nc.sleep_period_ms;
    rt.node.state = config_.provisioning.enabled ? NodeState::Initial : NodeState::Working;
    auto& inserted = nodes_.emplace(id, std::move(rt)).first->second;
    emit(record(TraceKind::NodeStart, inserted));
    if (config_.provisioning.enabled) {
      queue_.schedule(from_ms(config_.provisioning.stage_latency_ms), ProvisionStage{id, 1});
    } else {
      gateway_.trackers[id] = new_tracker(config_.params.gateway_depth);
      cloud_.trackers[id] = new_tracker(config_.params.cloud_depth);
      start_cycle_at(id, SimTime{});
    }
  }
  for (const auto& c : config_.commands) {
    queue_.schedule(from_ms(c.at_ms), OperatorCommand{c.command});
  }
}

const AnomalyTracker* Simulator::tier_tracker(InferenceMode tier, NodeId id) const {
  const auto& t = tier == InferenceMode::Gateway ? gateway_ : cloud_;
  const auto it = t.trackers.find(id);
  return it == t.trackers.end() ? nullptr : &it->second;
}

Simulator::Tier& Simulator::tier_for(InferenceMode m) {
  if (m == InferenceMode::Gateway) return gateway_;
  if (m == InferenceMode::Cloud) return cloud_;
  throw SimulationError("the sensor tier has no server queue");
}

SimResult Simulator::run() { return run_until(from_ms(config_.duration_ms)); }

SimResult Simulator::run_until(SimTime until) {
  if (finished_) throw SimulationError("simulation already finished");
  auto all_dead = [this] {
    return !nodes_.empty() &&
           std::all_of(nodes_.begin(), nodes_.end(), [](const auto& kv) { return kv.second.node.dead; });
  };
  SimTime end = until;
  while (!queue_.empty() && queue_.next_time() <= until) {
    auto e = queue_.pop();
    dispatch(e);
    if (config_.stop_when_all_dead && all_dead()) {
      end = queue_.now();
      break;
    }
  }
  return finish(end);
}

void Simulator::inject(const Message& msg) {
  if (msg.kind == MessageKind::PredictionRequest) {
    on_arrival(msg);
  } else {
    queue_.schedule(queue_.now(), Arrival{msg});
  }
}

void Simulator::dispatch(EventQueue<Event>::Entry& e) {
  std::visit(
      [this](auto& ev) {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, CycleStart>) {
          on_cycle_start(ev.node);
        } else if constexpr (std::is_same_v<T, StepEnd>) {
          on_step_end(ev.node, ev.index);
        } else if constexpr (std::is_same_v<T, PollEnd>) {
          on_poll_end(ev.node, ev.had_pending);
        } else if constexpr (std::is_same_v<T, Arrival>) {
          on_arrival(ev.msg);
        } else if constexpr (std::is_same_v<T, ServiceDone>) {
          on_service_done(ev.tier);
        } else if constexpr (std::is_same_v<T, Timeout>) {
          on_timeout(ev.node, ev.request_id);
        } else if constexpr (std::is_same_v<T, ProvisionStage>) {
          on_provision_stage(ev.node, ev.stage);
        } else if constexpr (std::is_same_v<T, OperatorCommand>) {
          Message m;
          m.kind = MessageKind::PropertyCommand;
          m.node = ev.cmd.target;
          m.send_time = queue_.now();
          m.command = ev.cmd;
          on_arrival(m);
        }
      },
      e.payload);
}

TraceRecord Simulator::record(TraceKind kind, const NodeRuntime& rt) const {
  TraceRecord r;
  r.time = queue_.now();
  r.node = rt.node.id;
  r.kind = kind;
  r.mode = rt.node.mode;
  r.state = rt.node.state;
  r.battery_micro_pct = to_micro_pct(rt.node.battery.level_pct());
  return r;
}

// ---------------------------------------------------------------------------
// Provisioning
// ---------------------------------------------------------------------------

void Simulator::on_provision_stage(NodeId id, int stage) {
  auto& rt = nodes_.at(id);
  const auto next = queue_.now() + from_ms(config_.provisioning.stage_latency_ms);
  if (stage <= kProvisionStages) {
    emit(record(provision_kind(stage), rt));
    if (stage == kProvisionStages) {
      const auto out = step_state_machine(rt.node, LifecycleEvent::ProvisioningComplete);
      emit(record(out.violation ? TraceKind::ProtocolViolation : TraceKind::StateChange, rt));
      if (out.violation) return;
      // The gateway adds the node to provisioned_nodes; both tiers start tracking it.
      gateway_.trackers[id] = new_tracker(config_.params.gateway_depth);
      cloud_.trackers[id] = new_tracker(config_.params.cloud_depth);
    }
    queue_.schedule(next, ProvisionStage{id, stage + 1});
    return;
  }
  if (stage == kProvisionStages + 1) {
    // Gateway pushes the configured properties, then locks the node.
    apply_command(rt, set_command(id, Property::SleepPeriod, config_.nodes[id].sleep_period_ms), true);
    apply_command(rt, set_command(id, Property::InferenceMode, static_cast<std::int64_t>(config_.nodes[id].initial_mode)), true);
    apply_command(rt, set_command(id, Property::State, static_cast<std::int64_t>(NodeState::Locked)), true);
    queue_.schedule(next, ProvisionStage{id, stage + 1});
  } else {
    apply_command(rt, set_command(id, Property::State, static_cast<std::int64_t>(NodeState::Working)), true);
  }
}

// ---------------------------------------------------------------------------
// Duty cycle
// ---------------------------------------------------------------------------

void Simulator::start_cycle_at(NodeId id, SimTime t) { queue_.schedule(t, CycleStart{id}); }

void Simulator::on_cycle_start(NodeId id) {
  auto& rt = nodes_.at(id);
  if (rt.node.dead || rt.node.state != NodeState::Working || rt.cycle_active) return;
  rt.plan = run_cycle(rt.node, queue_.now(), config_.energy, config_.poll);
  if (rt.plan.battery_dead) {
    mark_dead(rt);
    return;
  }
  rt.cycle_active = true;
  rt.cycle_start = queue_.now();
  rt.cycle_energy_charged = Energy{};
  rt.planned_energy = rt.plan.energy();
  rt.planned_ms = static_cast<double>((rt.plan.end - rt.plan.steps.front().start).count()) / 1000.0;
  ++rt.node.cycles_started;
  queue_.schedule(rt.plan.steps.front().end, StepEnd{id, 0});
}

bool Simulator::charge(NodeRuntime& rt, Operation op, Energy e) {
  const auto r = debit(rt.node.battery, ledger_, queue_.now(), rt.node.id, op, e);
  rt.cycle_energy_charged += r.charged;
  if (r.died) mark_dead(rt);
  return !r.died;
}

void Simulator::on_step_end(NodeId id, std::size_t index) {
  auto& rt = nodes_.at(id);
  if (rt.node.dead || !rt.cycle_active) return;
  if (rt.node.state != NodeState::Working) {
    // Left WORKING mid-cycle; the remainder of the cycle is abandoned.
    rt.cycle_active = false;
    return;
  }
  const CycleStep step = rt.plan.steps[index];
  if (!charge(rt, step.op, step.energy)) return;

  switch (step.op) {
    case Operation::Sampling:
      emit(record(TraceKind::SampleWindow, rt));
      break;
    case Operation::LocalInference:
      on_device_predict(rt);
      break;
    case Operation::RadioTx:
      send_request(rt);
      while (!rt.inbox.empty()) {
        auto m = rt.inbox.front();
        rt.inbox.pop_front();
        process_node_message(rt, m);
      }
      break;
    default:
      break;
  }

  if ((step.op == Operation::Sleep || step.op == Operation::Sampling) && rt.node.mode != rt.plan.mode) {
    replan_tail(rt, index);
  }
  if (index + 1 < rt.plan.steps.size()) {
    queue_.schedule(rt.plan.steps[index + 1].end, StepEnd{id, index + 1});
    return;
  }
  if (rt.plan.poll_due) {
    const bool pending = !rt.inbox.empty();
    const auto cost = poll_cost(pending, config_.poll, config_.energy);
    rt.planned_energy += cost.energy;
    rt.planned_ms += static_cast<double>(cost.duration_ms);
    queue_.schedule(queue_.now() + from_ms(cost.duration_ms), PollEnd{id, pending});
    return;
  }
  finish_cycle(rt);
}

// A mode command that landed after the cycle was planned takes effect at the
// next step boundary: the mode-dependent steps after `index` are rebuilt.
void Simulator::replan_tail(NodeRuntime& rt, std::size_t index) {
  SensorNode probe = rt.node;
  probe.sleep_period_ms = 0;
  probe.cycles_started = rt.node.cycles_started - 1;
  const auto fresh = run_cycle(probe, queue_.now(), config_.energy, config_.poll);
  // fresh.steps: zero-length sleep, sampling, then the mode's work.
  const std::size_t keep_from = rt.plan.steps[index].op == Operation::Sleep ? 1 : 2;
  const auto shift = fresh.steps[keep_from].start - queue_.now();
  rt.plan.steps.resize(index + 1);
  for (std::size_t i = keep_from; i < fresh.steps.size(); ++i) {
    auto s = fresh.steps[i];
    s.start -= shift;
    s.end -= shift;
    rt.plan.steps.push_back(s);
  }
  rt.plan.mode = fresh.mode;
  rt.plan.poll_due = fresh.poll_due;
  rt.plan.end = rt.plan.steps.back().end;
  rt.planned_energy = rt.plan.energy();
  rt.planned_ms = static_cast<double>((rt.plan.end - rt.plan.steps.front().start).count()) / 1000.0;
}

void Simulator::on_poll_end(NodeId id, bool had_pending) {
  auto& rt = nodes_.at(id);
  if (rt.node.dead || !rt.cycle_active) return;
  const auto cost = poll_cost(had_pending, config_.poll, config_.energy);
  if (!charge(rt, Operation::CommandPoll, cost.energy)) return;
  emit(record(TraceKind::CommandPoll, rt));
  while (!rt.inbox.empty()) {
    auto m = rt.inbox.front();
    rt.inbox.pop_front();
    process_node_message(rt, m);
  }
  finish_cycle(rt);
}

void Simulator::finish_cycle(NodeRuntime& rt) {
  rt.cycle_active = false;
  ++rt.cycles_completed;
  rt.completed_cycle_ms += static_cast<double>((queue_.now() - rt.cycle_start).count()) / 1000.0;
  start_cycle_at(rt.node.id, queue_.now());
}

void Simulator::mark_dead(NodeRuntime& rt) {
  if (rt.death_time) return;
  rt.node.dead = true;
  rt.death_time = queue_.now();
  if (rt.cycle_active && rt.planned_energy.nj() > 0) {
    const double frac = std::min(1.0, static_cast<double>(rt.cycle_energy_charged.nj()) /
                                          static_cast<double>(rt.planned_energy.nj()));
    rt.partial_cycle_ms = rt.planned_ms * frac;
  }
  rt.cycle_active = false;
  emit(record(TraceKind::BatteryDead, rt));
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

SimTime Simulator::sample_latency(InferenceMode mode, NodeId node, std::uint64_t step) {
  const auto m = static_cast<int>(mode);
  const auto mean = config_.latency.mean[m];
  const auto w = config_.latency.jitter_half_width[m].count();
  if (w == 0) return mean;
  Rng rng(derive_seed(config_.seed, "latency", node, step * 3 + static_cast<std::uint64_t>(m)));
  return mean + SimTime{rng.between(-w, w)};
}

bool Simulator::link_drops(NodeId node, std::uint64_t step, int hop) {
  if (config_.link.drop_probability <= 0.0) return false;
  Rng rng(derive_seed(config_.seed, "link", node, step * 2 + static_cast<std::uint64_t>(hop)));
  return rng.unit() < config_.link.drop_probability;
}

void Simulator::on_device_predict(NodeRuntime& rt) {
  auto& node = rt.node;
  const auto step = node.next_step++;
  const auto truth = draw_ground_truth(config_.truth, node.id, step);
  const auto pred = predict_keyed(config_.profiles[0], truth, derive_seed(config_.seed, "oracle"), node.id, step,
                                  config_.anomaly_mapping);
  const bool unchanged = !node.last_step_mode || *node.last_step_mode == node.mode;
  node.tracker = update_history(node.tracker, pred.anomaly, unchanged);
  node.last_step_mode = node.mode;

  auto r = record(TraceKind::Prediction, rt);
  r.history = node.tracker.history;
  r.tau = node.tracker.length;
  r.sigma = anomaly_count(node.tracker);
  r.latency = sample_latency(InferenceMode::Sensor, node.id, step);
  emit(r);

  if (!config_.heuristics_enabled) return;
  const auto verdict = sensor_heuristic(node.tracker, node.battery.level_pct(), config_.params);
  if (verdict != node.mode) {
    apply_command(rt, set_command(node.id, Property::InferenceMode, static_cast<std::int64_t>(verdict)), false);
  }
}

void Simulator::send_request(NodeRuntime& rt) {
  auto& node = rt.node;
  Message msg;
  msg.kind = MessageKind::PredictionRequest;
  msg.node = node.id;
  msg.request_id = next_request_id_++;
  msg.send_time = queue_.now();
  msg.request_send_time = queue_.now();
  msg.mode = node.mode;
  msg.previous_mode = node.last_step_mode;
  msg.step = node.next_step++;
  msg.truth = draw_ground_truth(config_.truth, node.id, msg.step);
  msg.battery_pct = node.battery.level_pct();
  msg.payload_kb = config_.energy.radio_tx.size_kb;
  node.last_step_mode = node.mode;

  rt.outstanding[msg.request_id] = Outstanding{node.mode, msg.step, false};
  emit(record(TraceKind::RequestSent, rt));
  if (config_.link.drop_probability > 0.0) {
    queue_.schedule(queue_.now() + from_ms(config_.link.timeout_ms), Timeout{node.id, msg.request_id});
  }
  if (link_drops(node.id, msg.step, 0)) {
    rt.outstanding[msg.request_id].resolved = true;
    emit(record(TraceKind::RequestDropped, rt));
    return;
  }
  on_arrival(msg);
}

void Simulator::on_arrival(const Message& msg) {
  if (msg.kind == MessageKind::PredictionRequest) {
    auto& tier = tier_for(msg.mode);
    if (!tier.trackers.count(msg.node)) {
      TraceRecord r;
      r.time = queue_.now();
      r.node = msg.node;
      r.kind = TraceKind::UnknownNode;
      r.mode = msg.mode;
      emit(r);
      if (auto it = nodes_.find(msg.node); it != nodes_.end()) {
        if (auto o = it->second.outstanding.find(msg.request_id); o != it->second.outstanding.end()) {
          o->second.resolved = true;
        }
      }
      return;
    }
    tier.queue.push_back(msg);
    if (!tier.busy) {
      tier.busy = true;
      queue_.schedule(queue_.now() + tier.service_time, ServiceDone{tier.mode});
    }
    return;
  }
  auto it = nodes_.find(msg.node);
  if (it == nodes_.end()) {
    TraceRecord r;
    r.time = queue_.now();
    r.node = msg.node;
    r.kind = TraceKind::UnknownNode;
    emit(r);
    return;
  }
  deliver_to_node(it->second, msg);
}

void Simulator::on_service_done(InferenceMode mode) {
  auto& tier = tier_for(mode);
  const Message req = tier.queue.front();
  tier.queue.pop_front();
  handle_prediction(tier, req, tier.queue.size());
  if (tier.queue.empty()) {
    tier.busy = false;
  } else {
    queue_.schedule(queue_.now() + tier.service_time, ServiceDone{tier.mode});
  }
}

void Simulator::handle_prediction(Tier& tier, const Message& req, std::size_t queue_size) {
  auto& tracker = tier.trackers.at(req.node);
  const auto tier_index = static_cast<int>(tier.mode);
  const auto pred = predict_keyed(config_.profiles[tier_index], req.truth, derive_seed(config_.seed, "oracle"),
                                  req.node, req.step, config_.anomaly_mapping);
  const bool unchanged = !req.previous_mode || *req.previous_mode == req.mode;
  tracker = update_history(tracker, pred.anomaly, unchanged);

  TraceRecord r;
  r.time = queue_.now();
  r.node = req.node;
  r.kind = TraceKind::Prediction;
  r.mode = tier.mode;
  r.history = tracker.history;
  r.tau = tracker.length;
  r.sigma = anomaly_count(tracker);
  if (tier.mode == InferenceMode::Gateway) r.queue = queue_size;
  r.battery_micro_pct = to_micro_pct(req.battery_pct);
  emit(r);

  const auto verdict = config_.heuristics_enabled
                           ? run_heuristic(tier.mode, tracker, req.battery_pct, queue_size, config_.params)
                           : tier.mode;
  Message resp;
  resp.node = req.node;
  resp.request_id = req.request_id;
  resp.send_time = queue_.now();
  resp.request_send_time = req.request_send_time;
  resp.step = req.step;
  if (verdict != tier.mode) {
    resp.kind = MessageKind::ModeCommand;
    resp.mode = verdict;
    reset_all_trackers(req.node);
  } else {
    resp.kind = config_.blank_responses ? MessageKind::BlankResponse : MessageKind::PredictionResponse;
    resp.mode = tier.mode;
  }

  if (link_drops(req.node, req.step, 1)) {
    if (auto it = nodes_.find(req.node); it != nodes_.end()) {
      auto& rt = it->second;
      rt.outstanding[req.request_id].resolved = true;
      emit(record(TraceKind::ResponseDropped, rt));
    }
    return;
  }
  queue_.schedule(queue_.now() + sample_latency(tier.mode, req.node, req.step), Arrival{resp});
}

void Simulator::reset_all_trackers(NodeId id) {
  if (auto it = gateway_.trackers.find(id); it != gateway_.trackers.end()) {
    it->second = new_tracker(config_.params.gateway_depth);
  }
  if (auto it = cloud_.trackers.find(id); it != cloud_.trackers.end()) {
    it->second = new_tracker(config_.params.cloud_depth);
  }
}

// ---------------------------------------------------------------------------
// Node-side message handling
// ---------------------------------------------------------------------------

bool Simulator::radio_listening(const NodeRuntime& rt) const {
  if (rt.node.state != NodeState::Working) return true;
  return rt.node.mode != InferenceMode::Sensor;
}

void Simulator::deliver_to_node(NodeRuntime& rt, const Message& msg) {
  if (rt.node.dead) {
    if (is_response(msg.kind)) {
      if (auto o = rt.outstanding.find(msg.request_id); o != rt.outstanding.end() && !o->second.resolved) {
        o->second.resolved = true;
        emit(record(TraceKind::ResponseDropped, rt));
      }
    }
    return;
  }
  if (radio_listening(rt)) {
    process_node_message(rt, msg);
  } else {
    rt.inbox.push_back(msg);
  }
}

void Simulator::process_node_message(NodeRuntime& rt, const Message& msg) {
  if (is_response(msg.kind)) {
    const auto latency = queue_.now() - msg.request_send_time;
    if (latency.count() < 0) throw SimulationError("negative latency for request " + std::to_string(msg.request_id));
    auto o = rt.outstanding.find(msg.request_id);
    InferenceMode request_mode = o != rt.outstanding.end() ? o->second.mode : msg.mode;
    if (o != rt.outstanding.end()) {
      if (o->second.resolved) return;  // already accounted as dropped
      o->second.resolved = true;
      o->second.received = true;
    }
    TraceKind kind = msg.kind == MessageKind::ModeCommand    ? TraceKind::ModeCommand
                     : msg.kind == MessageKind::BlankResponse ? TraceKind::BlankResponse
                                                              : TraceKind::PredictionResponse;
    auto r = record(kind, rt);
    r.mode = request_mode;
    r.latency = latency;
    emit(r);
    if (msg.kind == MessageKind::ModeCommand) {
      apply_command(rt, set_command(rt.node.id, Property::InferenceMode, static_cast<std::int64_t>(msg.mode)), false);
    }
    return;
  }
  if (msg.kind == MessageKind::PropertyCommand && msg.command) {
    apply_command(rt, *msg.command, true);
  }
}

void Simulator::apply_command(NodeRuntime& rt, const PropertyCommand& cmd, bool log_command) {
  const auto effect = apply_property_command(rt.node, cmd);
  if (log_command) {
    emit(record(effect.response.status == CommandStatus::Ok ? TraceKind::PropertyCommand : TraceKind::PropertyRejected,
                rt));
  }
  if (effect.mode_changed_from) {
    auto r = record(TraceKind::ModeChange, rt);
    r.history = rt.node.tracker.history;
    r.tau = rt.node.tracker.length;
    r.sigma = 0;
    emit(r);
    reset_all_trackers(rt.node.id);
  }
  if (effect.transition) {
    if (effect.transition->violation) {
      emit(record(TraceKind::ProtocolViolation, rt));
    } else {
      emit(record(TraceKind::StateChange, rt));
      if (effect.transition->to == NodeState::Working) start_cycle_at(rt.node.id, queue_.now());
    }
  }
}

void Simulator::on_timeout(NodeId id, std::uint64_t request_id) {
  auto& rt = nodes_.at(id);
  const auto it = rt.outstanding.find(request_id);
  if (it == rt.outstanding.end() || it->second.received) return;
  if (!rt.node.dead) emit(record(TraceKind::RequestTimeout, rt));
}

// ---------------------------------------------------------------------------

SimResult Simulator::finish(SimTime end) {
  finished_ = true;
  SimResult result;
  result.end = end;
  // The clock may sit before `end` when the queue drained early.
  for (auto& [id, rt] : nodes_) {
    for (const auto& [req, o] : rt.outstanding) {
      if (o.resolved) continue;
      TraceRecord r;
      r.time = end;
      r.node = id;
      r.kind = TraceKind::RequestInFlight;
      r.mode = o.mode;
      emit(r);
    }
    auto r = record(TraceKind::RunEnd, rt);
    r.time = end;
    emit(r);

    NodeOutcome out;
    out.node = id;
    out.dead = rt.node.dead;
    out.death_time = rt.death_time;
    out.cycles_completed = rt.cycles_completed;
    out.cycle_equivalent_lifetime_ms = rt.completed_cycle_ms + rt.partial_cycle_ms;
    out.final_mode = rt.node.mode;
    out.final_state = rt.node.state;
    out.consumed = rt.node.battery.consumed;
    result.nodes.push_back(out);
  }
  result.trace = std::move(trace_);
  result.ledger = std::move(ledger_);
  return result;
}

}  // namespace pdmsim
