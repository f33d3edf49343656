#pragma once

// Trace records, their CSV / JSONL encodings, and trace summarisation.
//
// Column order (CSV header):
//   timestamp_ms,node_id,event_kind,mode,state,H_hex,tau,sigma,q_t,latency_ms,battery_pct
// Timestamps and latencies are printed with exactly three decimals
// (microsecond resolution), battery level with six. Empty cells mean "not
// applicable to this event".

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdmsim/core.hpp"
#include "pdmsim/energy.hpp"

namespace pdmsim {

enum class TraceKind : std::uint8_t {
  NodeStart,
  ProvisionDiscovery,
  ProvisionSession,
  ProvisionConfiguration,
  ProvisionTermination,
  StateChange,
  ProtocolViolation,
  PropertyCommand,
  PropertyRejected,
  SampleWindow,
  Prediction,
  RequestSent,
  RequestDropped,
  ResponseDropped,
  RequestTimeout,
  RequestInFlight,
  BlankResponse,
  PredictionResponse,
  ModeCommand,
  ModeChange,
  CommandPoll,
  UnknownNode,
  BatteryDead,
  RunEnd,
};

std::string_view to_string(TraceKind k);
std::optional<TraceKind> parse_trace_kind(std::string_view s);

struct TraceRecord {
  SimTime time{};
  NodeId node = 0;
  TraceKind kind = TraceKind::NodeStart;
  std::optional<InferenceMode> mode;
  std::optional<NodeState> state;
  std::optional<std::uint64_t> history;
  std::optional<unsigned> tau;
  std::optional<unsigned> sigma;
  std::optional<std::uint64_t> queue;
  std::optional<SimTime> latency;
  // Battery level in millionths of a percent.
  std::optional<std::int64_t> battery_micro_pct;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

std::int64_t to_micro_pct(double pct);
double from_micro_pct(std::int64_t upct);

inline constexpr std::string_view kTraceHeader =
    "timestamp_ms,node_id,event_kind,mode,state,H_hex,tau,sigma,q_t,latency_ms,battery_pct";
inline constexpr std::string_view kLedgerHeader = "timestamp_ms,node_id,operation,energy_mJ,battery_pct";
inline constexpr std::string_view kLatencyHeader = "timestamp_ms,node_id,mode,latency_ms";

std::string to_csv_row(const TraceRecord& r);
std::string to_json_line(const TraceRecord& r);
void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace);
void write_trace_jsonl(std::ostream& os, const std::vector<TraceRecord>& trace);

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(std::size_t row, const std::string& what);
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

// Row numbers in errors are 1-based file lines (the header is line 1).
std::vector<TraceRecord> read_trace_csv(std::istream& is);

// Ledger rows carry the battery level quantised the same way as the trace.
struct LedgerRow {
  SimTime time{};
  NodeId node = 0;
  Operation operation = Operation::Sampling;
  Energy energy;
  std::int64_t battery_micro_pct = 0;

  friend bool operator==(const LedgerRow&, const LedgerRow&) = default;
};

std::vector<LedgerRow> ledger_rows(const EnergyLedger& ledger);
void write_ledger_csv(std::ostream& os, const std::vector<LedgerRow>& rows);
std::vector<LedgerRow> read_ledger_csv(std::istream& is);

// Latency samples are the trace records that carry a latency.
void write_latency_csv(std::ostream& os, const std::vector<TraceRecord>& trace);

struct ModeSummary {
  std::uint64_t latency_samples = 0;
  double mean_latency_ms = 0.0;
  double occupancy = 0.0;
  std::uint64_t predictions = 0;

  friend bool operator==(const ModeSummary&, const ModeSummary&) = default;
};

struct NodeSummary {
  NodeId node = 0;
  double energy_mj = 0.0;
  double final_battery_pct = 100.0;
  bool battery_dead = false;
  // Death time when the battery ran out, else extrapolated from the
  // consumption rate. Unset when nothing was consumed.
  std::optional<double> battery_life_h;

  friend bool operator==(const NodeSummary&, const NodeSummary&) = default;
};

struct Summary {
  double duration_ms = 0.0;
  std::array<ModeSummary, 3> modes{};
  std::map<std::string, std::uint64_t> transitions;  // "S->G" etc.
  std::uint64_t transition_total = 0;
  double total_energy_mj = 0.0;
  std::uint64_t requests_sent = 0;
  std::uint64_t requests_lost = 0;
  std::uint64_t protocol_violations = 0;
  std::vector<NodeSummary> nodes;

  friend bool operator==(const Summary&, const Summary&) = default;
};

// Pure function of the trace and energy ledger. Throws TraceParseError when
// the trace is internally inconsistent (e.g. a mode-change without a node
// start), reporting the 1-based record index.
Summary summarize(const std::vector<TraceRecord>& trace, const std::vector<LedgerRow>& ledger);

std::string summary_json(const Summary& s);
void print_summary(std::ostream& os, const Summary& s);

}  // namespace pdmsim
