#include "pdmsim/trace.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace pdmsim {

namespace {

constexpr std::array<std::string_view, 24> kKindNames{
    "node-start",        "provision-discovery", "provision-session", "provision-configuration",
    "provision-termination", "state-change",    "protocol-violation", "property-command",
    "property-rejected",
    "sample-window",     "prediction",          "request-sent",      "request-dropped",
    "response-dropped",  "request-timeout",     "request-in-flight", "blank-response",
    "prediction-response", "mode-command",      "mode-change",       "command-poll",
    "unknown-node",      "battery-dead",        "run-end",
};

std::int64_t pow10(int n) {
  std::int64_t p = 1;
  while (n-- > 0) p *= 10;
  return p;
}

std::string format_fixed(std::int64_t v, int decimals) {
  const auto scale = pow10(decimals);
  const bool neg = v < 0;
  const auto a = neg ? -static_cast<unsigned long long>(v) : static_cast<unsigned long long>(v);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%llu.%0*llu", neg ? "-" : "", a / scale, decimals, a % scale);
  return buf;
}

// Exact decimal parse: "12.5" with decimals=3 -> 12500.
std::optional<std::int64_t> parse_fixed(std::string_view s, int decimals) {
  if (s.empty()) return std::nullopt;
  bool neg = false;
  if (s.front() == '-') {
    neg = true;
    s.remove_prefix(1);
  }
  const auto dot = s.find('.');
  const auto whole_part = s.substr(0, dot);
  auto frac_part = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
  if (whole_part.empty() || static_cast<int>(frac_part.size()) > decimals) return std::nullopt;
  std::int64_t whole = 0;
  auto [p, ec] = std::from_chars(whole_part.data(), whole_part.data() + whole_part.size(), whole);
  if (ec != std::errc{} || p != whole_part.data() + whole_part.size()) return std::nullopt;
  std::int64_t frac = 0;
  if (!frac_part.empty()) {
    auto [q, ec2] = std::from_chars(frac_part.data(), frac_part.data() + frac_part.size(), frac);
    if (ec2 != std::errc{} || q != frac_part.data() + frac_part.size()) return std::nullopt;
    frac *= pow10(decimals - static_cast<int>(frac_part.size()));
  }
  const auto v = whole * pow10(decimals) + frac;
  return neg ? -v : v;
}

template <typename T>
std::optional<T> parse_uint(std::string_view s, int base = 10) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

int mode_index(InferenceMode m) { return static_cast<int>(m); }

}  // namespace

std::string_view to_string(TraceKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::optional<TraceKind> parse_trace_kind(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == s) return static_cast<TraceKind>(i);
  }
  return std::nullopt;
}

std::int64_t to_micro_pct(double pct) { return std::llround(pct * 1e6); }

double from_micro_pct(std::int64_t upct) { return static_cast<double>(upct) / 1e6; }

TraceParseError::TraceParseError(std::size_t row, const std::string& what)
    : std::runtime_error("row " + std::to_string(row) + ": " + what), row_(row) {}

std::string to_csv_row(const TraceRecord& r) {
  std::string out = format_fixed(r.time.count(), 3);
  out += ',';
  out += std::to_string(r.node);
  out += ',';
  out += to_string(r.kind);
  out += ',';
  if (r.mode) out += mode_letter(*r.mode);
  out += ',';
  if (r.state) out += to_string(*r.state);
  out += ',';
  if (r.history) out += hex(*r.history);
  out += ',';
  if (r.tau) out += std::to_string(*r.tau);
  out += ',';
  if (r.sigma) out += std::to_string(*r.sigma);
  out += ',';
  if (r.queue) out += std::to_string(*r.queue);
  out += ',';
  if (r.latency) out += format_fixed(r.latency->count(), 3);
  out += ',';
  if (r.battery_micro_pct) out += format_fixed(*r.battery_micro_pct, 6);
  return out;
}

std::string to_json_line(const TraceRecord& r) {
  nlohmann::ordered_json j;
  j["timestamp_ms"] = to_ms(r.time);
  j["node_id"] = r.node;
  j["event_kind"] = to_string(r.kind);
  j["mode"] = r.mode ? nlohmann::ordered_json(std::string(1, mode_letter(*r.mode))) : nullptr;
  j["state"] = r.state ? nlohmann::ordered_json(std::string(to_string(*r.state))) : nullptr;
  j["H_hex"] = r.history ? nlohmann::ordered_json(hex(*r.history)) : nullptr;
  j["tau"] = r.tau ? nlohmann::ordered_json(*r.tau) : nullptr;
  j["sigma"] = r.sigma ? nlohmann::ordered_json(*r.sigma) : nullptr;
  j["q_t"] = r.queue ? nlohmann::ordered_json(*r.queue) : nullptr;
  j["latency_ms"] = r.latency ? nlohmann::ordered_json(to_ms(*r.latency)) : nullptr;
  j["battery_pct"] = r.battery_micro_pct ? nlohmann::ordered_json(from_micro_pct(*r.battery_micro_pct)) : nullptr;
  return j.dump();
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace) {
  os << kTraceHeader << '\n';
  for (const auto& r : trace) os << to_csv_row(r) << '\n';
}

void write_trace_jsonl(std::ostream& os, const std::vector<TraceRecord>& trace) {
  for (const auto& r : trace) os << to_json_line(r) << '\n';
}

std::vector<TraceRecord> read_trace_csv(std::istream& is) {
  std::vector<TraceRecord> out;
  std::string line;
  std::size_t row = 0;
  if (!std::getline(is, line) || strip_cr(line) != kTraceHeader) {
    throw TraceParseError(1, "missing or unexpected trace header");
  }
  row = 1;
  while (std::getline(is, line)) {
    ++row;
    const auto text = strip_cr(line);
    if (text.empty()) continue;
    const auto f = split(text, ',');
    if (f.size() != 11) throw TraceParseError(row, "expected 11 columns, found " + std::to_string(f.size()));
    TraceRecord r;
    const auto t = parse_fixed(f[0], 3);
    if (!t) throw TraceParseError(row, "bad timestamp_ms");
    r.time = SimTime{*t};
    const auto node = parse_uint<NodeId>(f[1]);
    if (!node) throw TraceParseError(row, "bad node_id");
    r.node = *node;
    const auto kind = parse_trace_kind(f[2]);
    if (!kind) throw TraceParseError(row, "unknown event_kind '" + std::string(f[2]) + "'");
    r.kind = *kind;
    if (!f[3].empty()) {
      r.mode = parse_mode(f[3]);
      if (!r.mode) throw TraceParseError(row, "bad mode");
    }
    if (!f[4].empty()) {
      r.state = parse_state(f[4]);
      if (!r.state) throw TraceParseError(row, "bad state");
    }
    if (!f[5].empty()) {
      if (f[5].substr(0, 2) != "0x") throw TraceParseError(row, "bad H_hex");
      r.history = parse_uint<std::uint64_t>(f[5].substr(2), 16);
      if (!r.history) throw TraceParseError(row, "bad H_hex");
    }
    if (!f[6].empty() && !(r.tau = parse_uint<unsigned>(f[6]))) throw TraceParseError(row, "bad tau");
    if (!f[7].empty() && !(r.sigma = parse_uint<unsigned>(f[7]))) throw TraceParseError(row, "bad sigma");
    if (!f[8].empty() && !(r.queue = parse_uint<std::uint64_t>(f[8]))) throw TraceParseError(row, "bad q_t");
    if (!f[9].empty()) {
      const auto l = parse_fixed(f[9], 3);
      if (!l) throw TraceParseError(row, "bad latency_ms");
      r.latency = SimTime{*l};
    }
    if (!f[10].empty() && !(r.battery_micro_pct = parse_fixed(f[10], 6))) {
      throw TraceParseError(row, "bad battery_pct");
    }
    out.push_back(r);
  }
  return out;
}

std::vector<LedgerRow> ledger_rows(const EnergyLedger& ledger) {
  std::vector<LedgerRow> rows;
  rows.reserve(ledger.entries().size());
  for (const auto& e : ledger.entries()) {
    rows.push_back(LedgerRow{e.timestamp, e.node, e.operation, e.energy, to_micro_pct(e.battery_pct)});
  }
  return rows;
}

void write_ledger_csv(std::ostream& os, const std::vector<LedgerRow>& rows) {
  os << kLedgerHeader << '\n';
  for (const auto& r : rows) {
    os << format_fixed(r.time.count(), 3) << ',' << r.node << ',' << to_string(r.operation) << ','
       << format_fixed(r.energy.nj(), 6) << ',' << format_fixed(r.battery_micro_pct, 6) << '\n';
  }
}

std::vector<LedgerRow> read_ledger_csv(std::istream& is) {
  std::vector<LedgerRow> out;
  std::string line;
  if (!std::getline(is, line) || strip_cr(line) != kLedgerHeader) {
    throw TraceParseError(1, "missing or unexpected ledger header");
  }
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    const auto text = strip_cr(line);
    if (text.empty()) continue;
    const auto f = split(text, ',');
    if (f.size() != 5) throw TraceParseError(row, "expected 5 columns, found " + std::to_string(f.size()));
    LedgerRow r;
    const auto t = parse_fixed(f[0], 3);
    const auto node = parse_uint<NodeId>(f[1]);
    const auto e = parse_fixed(f[3], 6);
    const auto b = parse_fixed(f[4], 6);
    if (!t || !node || !e || !b) throw TraceParseError(row, "malformed ledger row");
    std::optional<Operation> op;
    for (int i = 0; i <= static_cast<int>(Operation::CommandPoll); ++i) {
      if (to_string(static_cast<Operation>(i)) == f[2]) op = static_cast<Operation>(i);
    }
    if (!op) throw TraceParseError(row, "unknown operation '" + std::string(f[2]) + "'");
    r.time = SimTime{*t};
    r.node = *node;
    r.operation = *op;
    r.energy = Energy::nanojoules(*e);
    r.battery_micro_pct = *b;
    out.push_back(r);
  }
  return out;
}

void write_latency_csv(std::ostream& os, const std::vector<TraceRecord>& trace) {
  os << kLatencyHeader << '\n';
  for (const auto& r : trace) {
    if (!r.latency || !r.mode) continue;
    os << format_fixed(r.time.count(), 3) << ',' << r.node << ',' << mode_letter(*r.mode) << ','
       << format_fixed(r.latency->count(), 3) << '\n';
  }
}

Summary summarize(const std::vector<TraceRecord>& trace, const std::vector<LedgerRow>& ledger) {
  Summary s;
  struct NodeTrack {
    InferenceMode mode;
    SimTime since;
    std::optional<SimTime> death;
  };
  std::map<NodeId, NodeTrack> nodes;
  std::array<std::int64_t, 3> latency_sum_us{};
  std::array<std::int64_t, 3> occupancy_us{};
  SimTime end{};

  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& r = trace[i];
    const auto row = i + 1;
    if (r.time > end) end = r.time;
    auto it = nodes.find(r.node);
    switch (r.kind) {
      case TraceKind::NodeStart:
        if (!r.mode) throw TraceParseError(row, "node-start without mode");
        nodes[r.node] = NodeTrack{*r.mode, r.time, std::nullopt};
        break;
      case TraceKind::ModeChange: {
        if (it == nodes.end() || !r.mode) throw TraceParseError(row, "mode-change for unstarted node");
        auto& n = it->second;
        occupancy_us[mode_index(n.mode)] += (r.time - n.since).count();
        std::string key{mode_letter(n.mode)};
        key += "->";
        key += mode_letter(*r.mode);
        ++s.transitions[key];
        ++s.transition_total;
        n.mode = *r.mode;
        n.since = r.time;
        break;
      }
      case TraceKind::RunEnd:
        if (it == nodes.end()) throw TraceParseError(row, "run-end for unstarted node");
        occupancy_us[mode_index(it->second.mode)] += (r.time - it->second.since).count();
        it->second.since = r.time;
        break;
      case TraceKind::BatteryDead:
        if (it != nodes.end()) it->second.death = r.time;
        break;
      case TraceKind::Prediction:
        if (r.mode) ++s.modes[mode_index(*r.mode)].predictions;
        break;
      case TraceKind::RequestSent: ++s.requests_sent; break;
      case TraceKind::RequestDropped:
      case TraceKind::ResponseDropped:
      case TraceKind::UnknownNode: ++s.requests_lost; break;
      case TraceKind::ProtocolViolation: ++s.protocol_violations; break;
      default: break;
    }
    if (r.latency && r.mode) {
      if (r.latency->count() < 0) throw TraceParseError(row, "negative latency");
      latency_sum_us[mode_index(*r.mode)] += r.latency->count();
      ++s.modes[mode_index(*r.mode)].latency_samples;
    }
  }

  s.duration_ms = to_ms(end);
  std::int64_t occ_total = 0;
  for (auto v : occupancy_us) occ_total += v;
  for (int m = 0; m < 3; ++m) {
    auto& ms = s.modes[m];
    if (ms.latency_samples > 0) {
      ms.mean_latency_ms = static_cast<double>(latency_sum_us[m]) / static_cast<double>(ms.latency_samples) / 1000.0;
    }
    if (occ_total > 0) ms.occupancy = static_cast<double>(occupancy_us[m]) / static_cast<double>(occ_total);
  }

  std::map<NodeId, std::pair<std::int64_t, std::int64_t>> energy;  // nJ, last battery level
  std::int64_t total_nj = 0;
  for (const auto& row : ledger) {
    auto& e = energy[row.node];
    e.first += row.energy.nj();
    e.second = row.battery_micro_pct;
    total_nj += row.energy.nj();
  }
  s.total_energy_mj = static_cast<double>(total_nj) / 1e6;

  for (const auto& [id, track] : nodes) {
    NodeSummary ns;
    ns.node = id;
    if (auto it = energy.find(id); it != energy.end()) {
      ns.energy_mj = static_cast<double>(it->second.first) / 1e6;
      ns.final_battery_pct = from_micro_pct(it->second.second);
    }
    if (track.death) {
      ns.battery_dead = true;
      ns.battery_life_h = to_ms(*track.death) / 3'600'000.0;
    } else if (ns.final_battery_pct < 100.0 && end.count() > 0) {
      ns.battery_life_h = to_ms(end) / 3'600'000.0 * 100.0 / (100.0 - ns.final_battery_pct);
    }
    s.nodes.push_back(ns);
  }
  return s;
}

std::string summary_json(const Summary& s) {
  nlohmann::ordered_json j;
  j["duration_ms"] = s.duration_ms;
  auto& modes = j["modes"];
  for (int m = 0; m < 3; ++m) {
    const auto& ms = s.modes[m];
    nlohmann::ordered_json mj;
    mj["predictions"] = ms.predictions;
    mj["latency_samples"] = ms.latency_samples;
    mj["mean_latency_ms"] = ms.mean_latency_ms;
    mj["occupancy"] = ms.occupancy;
    modes[std::string(1, mode_letter(static_cast<InferenceMode>(m)))] = mj;
  }
  j["transitions"] = s.transitions;
  j["transition_total"] = s.transition_total;
  j["total_energy_mJ"] = s.total_energy_mj;
  j["requests_sent"] = s.requests_sent;
  j["requests_lost"] = s.requests_lost;
  j["protocol_violations"] = s.protocol_violations;
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& n : s.nodes) {
    nlohmann::ordered_json nj;
    nj["node_id"] = n.node;
    nj["energy_mJ"] = n.energy_mj;
    nj["final_battery_pct"] = n.final_battery_pct;
    nj["battery_dead"] = n.battery_dead;
    nj["battery_life_h"] = n.battery_life_h ? nlohmann::ordered_json(*n.battery_life_h) : nullptr;
    nodes.push_back(nj);
  }
  j["nodes"] = nodes;
  return j.dump(2);
}

void print_summary(std::ostream& os, const Summary& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "duration        %.3f ms\n", s.duration_ms);
  os << buf;
  os << "mode  predictions  latency_n  mean_latency_ms  occupancy\n";
  for (int m = 0; m < 3; ++m) {
    const auto& ms = s.modes[m];
    std::snprintf(buf, sizeof buf, "%-4c  %11llu  %9llu  %15.3f  %9.4f\n", mode_letter(static_cast<InferenceMode>(m)),
                  static_cast<unsigned long long>(ms.predictions),
                  static_cast<unsigned long long>(ms.latency_samples), ms.mean_latency_ms, ms.occupancy);
    os << buf;
  }
  os << "transitions     " << s.transition_total;
  for (const auto& [k, v] : s.transitions) os << "  " << k << ":" << v;
  os << '\n';
  std::snprintf(buf, sizeof buf, "total energy    %.3f mJ\n", s.total_energy_mj);
  os << buf;
  for (const auto& n : s.nodes) {
    if (n.battery_life_h) {
      std::snprintf(buf, sizeof buf, "node %-4u  battery %.3f%%  life %.2f h%s\n", n.node, n.final_battery_pct,
                    *n.battery_life_h, n.battery_dead ? " (dead)" : " (projected)");
    } else {
      std::snprintf(buf, sizeof buf, "node %-4u  battery %.3f%%  life n/a\n", n.node, n.final_battery_pct);
    }
    os << buf;
  }
}

}  // namespace pdmsim
