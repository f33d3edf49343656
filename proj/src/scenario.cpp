#include "pdmsim/scenario.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "presets_embedded.hpp"

namespace pdmsim {

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
    const auto mark = at.Mark();
    if (mark.line >= 0) {
      throw ConfigError(source_ + ":" + std::to_string(mark.line + 1) + ": " + what);
    }
    throw ConfigError(source_ + ": " + what);
  }

  void require_map(const YAML::Node& n, const std::string& what) const {
    if (!n.IsMap()) fail(n, what + " must be a mapping");
  }

  void allow_keys(const YAML::Node& n, std::initializer_list<std::string_view> keys, const std::string& where) const {
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      bool ok = false;
      for (auto k : keys) ok = ok || k == key;
      if (!ok) fail(kv.first, "unknown key '" + key + "' in " + where);
    }
  }

  template <typename T>
  void read(const YAML::Node& parent, const char* key, T& out) const {
    const auto n = parent[key];
    if (!n) return;
    if (!n.IsScalar()) fail(n, std::string("'") + key + "' must be a scalar");
    try {
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, std::string("'") + key + "' has the wrong type");
    }
  }

  void read_mode(const YAML::Node& parent, const char* key, InferenceMode& out) const {
    std::string s;
    read(parent, key, s);
    if (s.empty()) return;
    const auto m = parse_mode(s);
    if (!m) fail(parent[key], std::string("'") + key + "' must be one of S, G, C");
    out = *m;
  }

  void read_ms_as_time(const YAML::Node& parent, const char* key, SimTime& out) const {
    double ms = to_ms(out);
    read(parent, key, ms);
    if (!std::isfinite(ms)) fail(parent[key], std::string("'") + key + "' must be finite");
    out = SimTime{std::llround(ms * 1000.0)};
  }

  // Runs a validator and re-throws its ConfigError anchored at `at`.
  template <typename F>
  void validated(const YAML::Node& at, F&& f) const {
    try {
      f();
    } catch (const ConfigError& e) {
      fail(at, e.what());
    }
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

void read_cost(const Reader& rd, const YAML::Node& n, const char* key, OperationCost& cost) {
  const auto c = n[key];
  if (!c) return;
  rd.require_map(c, key);
  rd.allow_keys(c, {"size_kb", "duration_ms", "energy_mj"}, key);
  rd.read(c, "size_kb", cost.size_kb);
  rd.read(c, "duration_ms", cost.duration_ms);
  double mj = cost.energy.mj();
  rd.read(c, "energy_mj", mj);
  cost.energy = Energy::millijoules(mj);
}

void read_profile(const Reader& rd, const YAML::Node& n, TierAccuracyProfile& p) {
  rd.require_map(n, "accuracy profile");
  rd.allow_keys(n, {"accuracy", "recall", "error_weights"}, "accuracy profile");
  rd.read(n, "accuracy", p.accuracy);
  if (const auto r = n["recall"]) {
    if (!r.IsSequence() || r.size() != kClassCount) rd.fail(r, "'recall' must list 4 values");
    for (int c = 0; c < kClassCount; ++c) {
      try {
        p.recall[c] = r[c].as<double>();
      } catch (const YAML::Exception&) {
        rd.fail(r[c], "recall entries must be numbers");
      }
    }
  }
  if (const auto w = n["error_weights"]) {
    if (!w.IsSequence() || w.size() != kClassCount) rd.fail(w, "'error_weights' must be a 4x4 matrix");
    for (int t = 0; t < kClassCount; ++t) {
      if (!w[t].IsSequence() || w[t].size() != kClassCount) rd.fail(w[t], "'error_weights' rows must have 4 values");
      for (int c = 0; c < kClassCount; ++c) {
        try {
          p.error_weights[t][c] = w[t][c].as<double>();
        } catch (const YAML::Exception&) {
          rd.fail(w[t][c], "error weights must be numbers");
        }
      }
    }
  }
  rd.validated(n, [&] { p.validate(); });
}

void read_command(const Reader& rd, const YAML::Node& n, ScheduledCommand& sc) {
  rd.require_map(n, "command");
  rd.allow_keys(n, {"at_ms", "node", "property", "method", "value"}, "command");
  rd.read(n, "at_ms", sc.at_ms);
  rd.read(n, "node", sc.command.target);
  std::string prop, method;
  rd.read(n, "property", prop);
  rd.read(n, "method", method);
  const auto p = parse_property(prop);
  if (!p) rd.fail(n, "unknown property '" + prop + "'");
  const auto m = parse_method(method);
  if (!m) rd.fail(n, "method must be SET, GET or ADD");
  sc.command.property = *p;
  sc.command.method = *m;
  if (const auto v = n["value"]) {
    if (*p == Property::InferenceMode) {
      if (const auto mode = parse_mode(v.as<std::string>())) {
        sc.command.value = static_cast<std::int64_t>(*mode);
        return;
      }
    }
    if (*p == Property::State) {
      if (const auto st = parse_state(v.as<std::string>())) {
        sc.command.value = static_cast<std::int64_t>(*st);
        return;
      }
    }
    if (v.IsSequence()) {
      std::vector<std::string> list;
      for (const auto& e : v) list.push_back(e.as<std::string>());
      sc.command.value = list;
      return;
    }
    try {
      sc.command.value = v.as<std::int64_t>();
    } catch (const YAML::Exception&) {
      sc.command.value = v.as<std::string>();
    }
  }
}

}  // namespace

Scenario parse_scenario(std::string_view yaml_text, std::string_view source_name) {
  Reader rd{std::string(source_name)};
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(rd.source() + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }

  Scenario sc;
  auto& sim = sc.sim;
  if (!root || root.IsNull()) return sc;
  rd.require_map(root, "scenario");
  rd.allow_keys(root,
                {"name", "seed", "duration_ms", "stop_when_all_dead", "heuristics", "nodes", "energy", "latency",
                 "accuracy", "ground_truth", "anomaly_classes", "poll", "link", "provisioning", "service", "commands",
                 "output"},
                "scenario");
  rd.read(root, "name", sc.name);
  rd.read(root, "seed", sim.seed);
  rd.read(root, "duration_ms", sim.duration_ms);
  if (sim.duration_ms < 0) rd.fail(root["duration_ms"], "duration_ms must be non-negative");
  rd.read(root, "stop_when_all_dead", sim.stop_when_all_dead);

  if (const auto h = root["heuristics"]) {
    rd.require_map(h, "heuristics");
    rd.allow_keys(h, {"enabled", "battery_threshold_pct", "sensor", "gateway", "cloud"}, "heuristics");
    rd.read(h, "enabled", sim.heuristics_enabled);
    rd.read(h, "battery_threshold_pct", sim.params.battery_threshold_pct);
    if (const auto s = h["sensor"]) {
      rd.require_map(s, "heuristics.sensor");
      rd.allow_keys(s, {"depth", "escalate"}, "heuristics.sensor");
      rd.read(s, "depth", sim.params.sensor_depth);
      rd.read(s, "escalate", sim.params.sensor_escalate);
    }
    if (const auto g = h["gateway"]) {
      rd.require_map(g, "heuristics.gateway");
      rd.allow_keys(g, {"depth", "deescalate", "escalate", "queue_threshold"}, "heuristics.gateway");
      rd.read(g, "depth", sim.params.gateway_depth);
      rd.read(g, "deescalate", sim.params.gateway_deescalate);
      rd.read(g, "escalate", sim.params.gateway_escalate);
      rd.read(g, "queue_threshold", sim.params.queue_threshold);
    }
    if (const auto c = h["cloud"]) {
      rd.require_map(c, "heuristics.cloud");
      rd.allow_keys(c, {"depth", "deescalate", "escalate"}, "heuristics.cloud");
      rd.read(c, "depth", sim.params.cloud_depth);
      rd.read(c, "deescalate", sim.params.cloud_deescalate);
      rd.read(c, "escalate", sim.params.cloud_escalate);
    }
    rd.validated(h, [&] { sim.params.validate(); });
  }

  if (const auto n = root["nodes"]) {
    rd.require_map(n, "nodes");
    rd.allow_keys(n, {"count", "initial_mode", "battery_j", "battery_voltage", "sleep_period_ms", "overrides"}, "nodes");
    long long count = 1;
    rd.read(n, "count", count);
    if (count < 0 || count > 100'000) rd.fail(n["count"], "nodes.count must be in [0, 100000]");
    NodeConfig base;
    rd.read_mode(n, "initial_mode", base.initial_mode);
    double battery_j = base.battery_capacity.joules_value();
    rd.read(n, "battery_j", battery_j);
    if (!(battery_j >= 0.0)) rd.fail(n["battery_j"], "battery_j must be non-negative");
    base.battery_capacity = Energy::joules(battery_j);
    rd.read(n, "battery_voltage", base.battery_voltage);
    rd.read(n, "sleep_period_ms", base.sleep_period_ms);
    if (base.sleep_period_ms < 0 || base.sleep_period_ms > 0xFFFF'FFFFll) {
      rd.fail(n["sleep_period_ms"], "sleep_period_ms must fit in uint32");
    }
    sim.nodes.assign(static_cast<std::size_t>(count), base);
    if (const auto ov = n["overrides"]) {
      if (!ov.IsSequence()) rd.fail(ov, "nodes.overrides must be a list");
      for (const auto& o : ov) {
        rd.require_map(o, "node override");
        rd.allow_keys(o, {"id", "initial_mode", "battery_j", "sleep_period_ms"}, "node override");
        long long id = -1;
        rd.read(o, "id", id);
        if (id < 0 || id >= count) rd.fail(o, "override id out of range");
        auto& nc = sim.nodes[static_cast<std::size_t>(id)];
        rd.read_mode(o, "initial_mode", nc.initial_mode);
        if (o["battery_j"]) {
          double j = 0;
          rd.read(o, "battery_j", j);
          if (!(j >= 0.0)) rd.fail(o["battery_j"], "battery_j must be non-negative");
          nc.battery_capacity = Energy::joules(j);
        }
        rd.read(o, "sleep_period_ms", nc.sleep_period_ms);
        if (nc.sleep_period_ms < 0) rd.fail(o, "sleep_period_ms must be non-negative");
      }
    }
  }

  if (const auto e = root["energy"]) {
    rd.require_map(e, "energy");
    rd.allow_keys(e, {"sampling", "local_inference", "compression", "radio_tx", "sleep_current_ua", "supply_voltage"},
                  "energy");
    read_cost(rd, e, "sampling", sim.energy.sampling);
    read_cost(rd, e, "local_inference", sim.energy.local_inference);
    read_cost(rd, e, "compression", sim.energy.compression);
    read_cost(rd, e, "radio_tx", sim.energy.radio_tx);
    rd.read(e, "sleep_current_ua", sim.energy.sleep_current_ua);
    rd.read(e, "supply_voltage", sim.energy.supply_voltage);
    rd.validated(e, [&] { sim.energy.validate(); });
  }

  if (const auto l = root["latency"]) {
    rd.require_map(l, "latency");
    rd.allow_keys(l, {"sensor_ms", "gateway_ms", "cloud_ms", "jitter_fraction", "jitter_ms", "blank_responses"},
                  "latency");
    rd.read_ms_as_time(l, "sensor_ms", sim.latency.mean[0]);
    rd.read_ms_as_time(l, "gateway_ms", sim.latency.mean[1]);
    rd.read_ms_as_time(l, "cloud_ms", sim.latency.mean[2]);
    if (l["jitter_fraction"]) {
      double f = 0.0;
      rd.read(l, "jitter_fraction", f);
      if (!(f >= 0.0 && f < 1.0)) rd.fail(l["jitter_fraction"], "jitter_fraction must be in [0, 1)");
      sim.latency.set_jitter_fraction(f);
    }
    if (const auto j = l["jitter_ms"]) {
      rd.require_map(j, "latency.jitter_ms");
      rd.allow_keys(j, {"sensor", "gateway", "cloud"}, "latency.jitter_ms");
      rd.read_ms_as_time(j, "sensor", sim.latency.jitter_half_width[0]);
      rd.read_ms_as_time(j, "gateway", sim.latency.jitter_half_width[1]);
      rd.read_ms_as_time(j, "cloud", sim.latency.jitter_half_width[2]);
    }
    rd.read(l, "blank_responses", sim.blank_responses);
    rd.validated(l, [&] { sim.latency.validate(); });
  }

  if (const auto a = root["accuracy"]) {
    rd.require_map(a, "accuracy");
    rd.allow_keys(a, {"sensor", "gateway", "cloud"}, "accuracy");
    if (a["sensor"]) read_profile(rd, a["sensor"], sim.profiles[0]);
    if (a["gateway"]) read_profile(rd, a["gateway"], sim.profiles[1]);
    if (a["cloud"]) read_profile(rd, a["cloud"], sim.profiles[2]);
  }

  if (const auto g = root["ground_truth"]) {
    rd.require_map(g, "ground_truth");
    rd.allow_keys(g, {"anomaly_probability", "good_share", "unsatisfactory_share"}, "ground_truth");
    rd.read(g, "anomaly_probability", sim.truth.anomaly_probability);
    rd.read(g, "good_share", sim.truth.good_share);
    rd.read(g, "unsatisfactory_share", sim.truth.unsatisfactory_share);
    rd.validated(g, [&] { sim.truth.validate(); });
  }

  if (const auto ac = root["anomaly_classes"]) {
    if (!ac.IsSequence()) rd.fail(ac, "anomaly_classes must be a list of class codes");
    sim.anomaly_mapping.anomalous.fill(false);
    for (const auto& c : ac) {
      int code = -1;
      try {
        code = c.as<int>();
      } catch (const YAML::Exception&) {
      }
      if (code < 0 || code >= kClassCount) rd.fail(c, "anomaly class codes must be 0..3");
      sim.anomaly_mapping.anomalous[code] = true;
    }
  }

  if (const auto p = root["poll"]) {
    rd.require_map(p, "poll");
    rd.allow_keys(p, {"every_k_cycles", "empty_fraction"}, "poll");
    rd.read(p, "every_k_cycles", sim.poll.every_k_cycles);
    rd.read(p, "empty_fraction", sim.poll.empty_fraction);
    if (!(sim.poll.empty_fraction >= 0.0 && sim.poll.empty_fraction <= 1.0)) {
      rd.fail(p, "poll.empty_fraction must be in [0, 1]");
    }
  }

  if (const auto lk = root["link"]) {
    rd.require_map(lk, "link");
    rd.allow_keys(lk, {"drop_probability", "timeout_ms"}, "link");
    rd.read(lk, "drop_probability", sim.link.drop_probability);
    rd.read(lk, "timeout_ms", sim.link.timeout_ms);
    if (!(sim.link.drop_probability >= 0.0 && sim.link.drop_probability <= 1.0)) {
      rd.fail(lk, "link.drop_probability must be in [0, 1]");
    }
    if (sim.link.timeout_ms <= 0) rd.fail(lk, "link.timeout_ms must be positive");
  }

  if (const auto pv = root["provisioning"]) {
    rd.require_map(pv, "provisioning");
    rd.allow_keys(pv, {"enabled", "stage_latency_ms"}, "provisioning");
    rd.read(pv, "enabled", sim.provisioning.enabled);
    rd.read(pv, "stage_latency_ms", sim.provisioning.stage_latency_ms);
    if (sim.provisioning.stage_latency_ms < 0) rd.fail(pv, "provisioning.stage_latency_ms must be non-negative");
  }

  if (const auto sv = root["service"]) {
    rd.require_map(sv, "service");
    rd.allow_keys(sv, {"gateway_ms", "cloud_ms"}, "service");
    rd.read(sv, "gateway_ms", sim.gateway_service_ms);
    rd.read(sv, "cloud_ms", sim.cloud_service_ms);
    if (sim.gateway_service_ms < 0 || sim.cloud_service_ms < 0) rd.fail(sv, "service times must be non-negative");
  }

  if (const auto cmds = root["commands"]) {
    if (!cmds.IsSequence()) rd.fail(cmds, "commands must be a list");
    for (const auto& c : cmds) {
      ScheduledCommand sc_cmd;
      read_command(rd, c, sc_cmd);
      if (sc_cmd.command.target >= sim.nodes.size()) rd.fail(c, "command targets an unknown node");
      if (sc_cmd.at_ms < 0) rd.fail(c, "command at_ms must be non-negative");
      sim.commands.push_back(sc_cmd);
    }
  }

  if (const auto o = root["output"]) {
    rd.require_map(o, "output");
    rd.allow_keys(o, {"directory", "trace_csv", "trace_jsonl", "ledger_csv", "latency_csv", "summary_json",
                      "energy_model_json"},
                  "output");
    rd.read(o, "directory", sc.output.directory);
    rd.read(o, "trace_csv", sc.output.trace_csv);
    rd.read(o, "trace_jsonl", sc.output.trace_jsonl);
    rd.read(o, "ledger_csv", sc.output.ledger_csv);
    rd.read(o, "latency_csv", sc.output.latency_csv);
    rd.read(o, "summary_json", sc.output.summary_json);
    rd.read(o, "energy_model_json", sc.output.energy_model_json);
  }

  rd.validated(root, [&] { sim.validate(); });
  return sc;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open scenario file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : embedded_presets) out.emplace_back(p.name);
  return out;
}

std::optional<std::string_view> preset_text(std::string_view name) {
  for (const auto& p : embedded_presets) {
    if (p.name == name) return p.text;
  }
  return std::nullopt;
}

Scenario load_preset(std::string_view name) {
  const auto text = preset_text(name);
  if (!text) throw ConfigError("unknown preset '" + std::string(name) + "'");
  auto sc = parse_scenario(*text, "preset:" + std::string(name));
  return sc;
}

EnergyModelReport energy_model_report(const SimConfig& sim) {
  EnergyModelReport r;
  const NodeConfig node = sim.nodes.empty() ? NodeConfig{} : sim.nodes.front();
  const auto on = cycle_cost(InferenceMode::Sensor, node.sleep_period_ms, sim.energy);
  const auto off = cycle_cost(InferenceMode::Gateway, node.sleep_period_ms, sim.energy);
  const auto battery = BatteryState::with_capacity(node.battery_capacity, node.battery_voltage);
  r.onboard_cycle_mj = on.energy.mj();
  r.offboard_cycle_mj = off.energy.mj();
  r.onboard_cycle_ms = on.duration_ms;
  r.offboard_cycle_ms = off.duration_ms;
  r.onboard_life_h = battery_life_bound_hours(battery, InferenceMode::Sensor, node.sleep_period_ms, sim.energy);
  r.offboard_life_h = battery_life_bound_hours(battery, InferenceMode::Cloud, node.sleep_period_ms, sim.energy);
  r.savings_pct = energy_savings_percent(r.onboard_cycle_mj, r.offboard_cycle_mj);
  return r;
}

std::string energy_model_json(const EnergyModelReport& r) {
  nlohmann::ordered_json j;
  j["onboard_cycle_mJ"] = r.onboard_cycle_mj;
  j["onboard_cycle_ms"] = r.onboard_cycle_ms;
  j["offboard_cycle_mJ"] = r.offboard_cycle_mj;
  j["offboard_cycle_ms"] = r.offboard_cycle_ms;
  j["battery_life_onboard_h"] = r.onboard_life_h;
  j["battery_life_offboard_h"] = r.offboard_life_h;
  j["energy_savings_pct"] = r.savings_pct;
  return j.dump(2);
}

}  // namespace pdmsim
