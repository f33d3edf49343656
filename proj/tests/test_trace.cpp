#include <doctest.h>

#include <sstream>

#include "pdmsim/network.hpp"
#include "pdmsim/trace.hpp"

using namespace pdmsim;

namespace {

SimResult mixed_run(std::uint64_t seed) {
  SimConfig cfg;
  cfg.nodes.assign(3, NodeConfig{});
  cfg.nodes[1].initial_mode = InferenceMode::Gateway;
  cfg.nodes[2].initial_mode = InferenceMode::Cloud;
  cfg.latency.set_jitter_fraction(0.1);
  cfg.truth.anomaly_probability = 0.4;
  cfg.seed = seed;
  return Simulator(cfg).run();
}

TraceRecord rec(std::int64_t ms, TraceKind k, std::optional<InferenceMode> m) {
  TraceRecord r;
  r.time = from_ms(ms);
  r.kind = k;
  r.mode = m;
  return r;
}

}  // namespace

TEST_CASE("trace csv round-trips and re-summarizes identically") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto run = mixed_run(seed);
    const auto ledger = ledger_rows(run.ledger);
    std::stringstream t, l;
    write_trace_csv(t, run.trace);
    write_ledger_csv(l, ledger);
    const auto trace2 = read_trace_csv(t);
    const auto ledger2 = read_ledger_csv(l);
    CHECK(trace2 == run.trace);
    CHECK(ledger2 == ledger);
    CHECK(summarize(trace2, ledger2) == summarize(run.trace, ledger));
    CHECK(summary_json(summarize(trace2, ledger2)) == summary_json(summarize(run.trace, ledger)));
  }
}

TEST_CASE("occupancies sum to one") {
  const auto run = mixed_run(5);
  const auto s = summarize(run.trace, ledger_rows(run.ledger));
  double sum = 0;
  for (const auto& m : s.modes) sum += m.occupancy;
  CHECK(std::abs(sum - 1.0) < 1e-9);
  CHECK(s.transition_total > 0);
}

TEST_CASE("single-mode trace has full occupancy") {
  std::vector<TraceRecord> t{rec(0, TraceKind::NodeStart, InferenceMode::Cloud),
                             rec(5000, TraceKind::RunEnd, InferenceMode::Cloud)};
  const auto s = summarize(t, {});
  CHECK(s.modes[2].occupancy == 1.0);
  CHECK(s.modes[0].occupancy == 0.0);
  CHECK(s.transition_total == 0);
}

TEST_CASE("every mode change counts as one transition") {
  std::vector<TraceRecord> t{rec(0, TraceKind::NodeStart, InferenceMode::Sensor)};
  const InferenceMode cycle[] = {InferenceMode::Gateway, InferenceMode::Cloud, InferenceMode::Gateway,
                                 InferenceMode::Sensor};
  const int n = 9;
  for (int i = 0; i < n; ++i) {
    t.push_back(rec(100 * i + 50, TraceKind::ModeCommand, std::nullopt));
    t.push_back(rec(100 * i + 50, TraceKind::ModeChange, cycle[i % 4]));
  }
  t.push_back(rec(1000, TraceKind::RunEnd, InferenceMode::Sensor));
  const auto s = summarize(t, {});
  CHECK(s.transition_total == n);
  CHECK(s.transitions.at("S->G") == 3);
  CHECK(s.transitions.at("G->C") == 2);
}

TEST_CASE("empty trace summarizes to zeros") {
  const auto s = summarize({}, {});
  CHECK(s.duration_ms == 0.0);
  CHECK(s.total_energy_mj == 0.0);
  CHECK(s.transition_total == 0);
  for (const auto& m : s.modes) {
    CHECK(m.occupancy == 0.0);
    CHECK(m.mean_latency_ms == 0.0);
  }
}

TEST_CASE("malformed rows are reported with their row number") {
  const std::string header = std::string(kTraceHeader) + "\n";
  const std::string good = "0.000,0,node-start,S,INITIAL,,,,,,100.000000\n";
  auto parse_row = [&](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      read_trace_csv(in);
    } catch (const TraceParseError& e) {
      return e.row();
    }
    return 0;
  };
  CHECK(parse_row(header + good) == 0);
  CHECK(parse_row(header + good + "1.000,0,nonsense,S,INITIAL,,,,,,100.000000\n") == 3);
  CHECK(parse_row(header + good + good + "1.0x0,0,node-start,S,,,,,,,\n") == 4);
  CHECK(parse_row(header + "0.000,0,node-start\n") == 2);
  CHECK(parse_row(header + "0.000,0,prediction,Q,,,,,,,\n") == 2);
  CHECK(parse_row(header + "0.000,0,prediction,S,,zz,,,,,\n") == 2);
  CHECK(parse_row("not,a,header\n") == 1);
}

TEST_CASE("csv formatting is fixed-point with a dot separator") {
  TraceRecord r = rec(1234, TraceKind::Prediction, InferenceMode::Gateway);
  r.time = SimTime{1'234'567};
  r.latency = SimTime{148'150};
  r.history = 0xAB;
  r.tau = 16;
  r.sigma = 5;
  r.queue = 2;
  r.battery_micro_pct = to_micro_pct(99.5);
  CHECK(to_csv_row(r) == "1234.567,0,prediction,G,,0xab,16,5,2,148.150,99.500000");
  const auto j = to_json_line(r);
  CHECK(j.find("\"H_hex\":\"0xab\"") != std::string::npos);
  CHECK(j.find("\"latency_ms\":148.15") != std::string::npos);
}

TEST_CASE("trace kind names round-trip") {
  for (int k = 0; k <= static_cast<int>(TraceKind::RunEnd); ++k) {
    const auto kind = static_cast<TraceKind>(k);
    CHECK(parse_trace_kind(to_string(kind)) == kind);
  }
}
