#pragma once

// Shared domain types for the three-tier adaptive inference simulator.

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pdmsim {

using NodeId = std::uint32_t;

// Simulation clock. Integer microseconds keep sums and differences exact.
using SimTime = std::chrono::microseconds;

constexpr SimTime from_ms(std::int64_t ms) { return std::chrono::milliseconds(ms); }

// Milliseconds as a double, for reporting only.
inline double to_ms(SimTime t) { return static_cast<double>(t.count()) / 1000.0; }

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Internal consistency failure (event in the past, negative latency, ...).
class SimulationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// Energy, stored as integer nanojoules.
// ---------------------------------------------------------------------------
class Energy {
 public:
  constexpr Energy() = default;
  static constexpr Energy nanojoules(std::int64_t nj) { return Energy(nj); }
  static constexpr Energy microjoules(std::int64_t uj) { return Energy(uj * 1'000); }
  static Energy millijoules(double mj);
  static Energy joules(double j);

  constexpr std::int64_t nj() const { return nj_; }
  double mj() const { return static_cast<double>(nj_) / 1e6; }
  double joules_value() const { return static_cast<double>(nj_) / 1e9; }

  constexpr Energy operator+(Energy o) const { return Energy(nj_ + o.nj_); }
  constexpr Energy operator-(Energy o) const { return Energy(nj_ - o.nj_); }
  constexpr Energy& operator+=(Energy o) { nj_ += o.nj_; return *this; }
  constexpr Energy operator*(std::int64_t k) const { return Energy(nj_ * k); }
  constexpr auto operator<=>(const Energy&) const = default;

 private:
  constexpr explicit Energy(std::int64_t nj) : nj_(nj) {}
  std::int64_t nj_ = 0;
};

// ---------------------------------------------------------------------------
// Inference mode. S < G < C; moving toward C is escalation.
// ---------------------------------------------------------------------------
enum class InferenceMode : std::uint8_t { Sensor = 0, Gateway = 1, Cloud = 2 };

constexpr auto operator<=>(InferenceMode a, InferenceMode b) {
  return static_cast<int>(a) <=> static_cast<int>(b);
}

std::string_view to_string(InferenceMode m);
char mode_letter(InferenceMode m);
// Accepts "S"/"G"/"C" and the long names, case-insensitive.
std::optional<InferenceMode> parse_mode(std::string_view s);

// ---------------------------------------------------------------------------
// Sensor node lifecycle.
// ---------------------------------------------------------------------------
enum class NodeState : std::uint8_t { Initial = 0, Unlocked = 1, Locked = 2, Working = 3, Idle = 4 };

std::string_view to_string(NodeState s);
std::optional<NodeState> parse_state(std::string_view s);

// ---------------------------------------------------------------------------
// Anomaly history for one node at one tier.
//
// `history` holds the last `length` anomaly bits, newest at bit 0. Bits at
// positions >= length are always zero.
// ---------------------------------------------------------------------------
struct AnomalyTracker {
  static constexpr unsigned kMaxDepth = 64;

  std::uint64_t history = 0;
  unsigned length = 0;
  unsigned depth = 1;

  bool valid() const;
  friend bool operator==(const AnomalyTracker&, const AnomalyTracker&) = default;
};

// Throws ConfigError unless 1 <= depth <= 64.
AnomalyTracker new_tracker(unsigned depth);

// ---------------------------------------------------------------------------
// Thresholds for the three adaptive heuristics.
// ---------------------------------------------------------------------------
struct HeuristicParams {
  double battery_threshold_pct = 20.0;   // below this, every tier forces S
  unsigned sensor_escalate = 4;          // sigma >= this in S -> G
  unsigned gateway_deescalate = 4;       // sigma < this in G -> S
  unsigned gateway_escalate = 8;         // sigma >= this in G -> C
  unsigned queue_threshold = 4;          // gateway stays in G only while q < this
  unsigned cloud_deescalate = 2;         // sigma < this in C -> G
  unsigned cloud_escalate = 8;           // stored, not consulted
  unsigned sensor_depth = 32;
  unsigned gateway_depth = 16;
  unsigned cloud_depth = 8;

  // Throws ConfigError naming the first violated constraint.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Battery. Consumption is tracked in energy units; level is derived.
// ---------------------------------------------------------------------------
struct BatteryState {
  Energy capacity;
  Energy consumed;
  double voltage = 3.7;

  // 1,400 mAh LiPo at 3.7 V.
  static BatteryState lipo_1400mah();
  static BatteryState with_capacity(Energy capacity, double voltage = 3.7);

  Energy remaining() const { return capacity - consumed; }
  bool exhausted() const { return consumed >= capacity; }
  // b_t in [0, 100].
  double level_pct() const;
};

// ---------------------------------------------------------------------------
// Condition classes.
// ---------------------------------------------------------------------------
enum class ConditionClass : std::uint8_t { Good = 0, Acceptable = 1, Unsatisfactory = 2, Unacceptable = 3 };

constexpr int kClassCount = 4;

std::string_view to_string(ConditionClass c);

struct Prediction {
  NodeId node = 0;
  std::uint64_t step = 0;
  ConditionClass label = ConditionClass::Good;
  bool anomaly = false;
  InferenceMode origin = InferenceMode::Sensor;
};

}  // namespace pdmsim
