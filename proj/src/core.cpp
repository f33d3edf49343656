#include "pdmsim/core.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <string>

namespace pdmsim {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

Energy Energy::millijoules(double mj) { return Energy(std::llround(mj * 1e6)); }

Energy Energy::joules(double j) { return Energy(std::llround(j * 1e9)); }

std::string_view to_string(InferenceMode m) {
  switch (m) {
    case InferenceMode::Sensor: return "SENSOR";
    case InferenceMode::Gateway: return "GATEWAY";
    case InferenceMode::Cloud: return "CLOUD";
  }
  return "?";
}

char mode_letter(InferenceMode m) {
  switch (m) {
    case InferenceMode::Sensor: return 'S';
    case InferenceMode::Gateway: return 'G';
    case InferenceMode::Cloud: return 'C';
  }
  return '?';
}

std::optional<InferenceMode> parse_mode(std::string_view s) {
  const auto v = lower(s);
  if (v == "s" || v == "sensor") return InferenceMode::Sensor;
  if (v == "g" || v == "gateway") return InferenceMode::Gateway;
  if (v == "c" || v == "cloud") return InferenceMode::Cloud;
  return std::nullopt;
}

std::string_view to_string(NodeState s) {
  switch (s) {
    case NodeState::Initial: return "INITIAL";
    case NodeState::Unlocked: return "UNLOCKED";
    case NodeState::Locked: return "LOCKED";
    case NodeState::Working: return "WORKING";
    case NodeState::Idle: return "IDLE";
  }
  return "?";
}

std::optional<NodeState> parse_state(std::string_view s) {
  const auto v = lower(s);
  if (v == "initial") return NodeState::Initial;
  if (v == "unlocked") return NodeState::Unlocked;
  if (v == "locked") return NodeState::Locked;
  if (v == "working") return NodeState::Working;
  if (v == "idle") return NodeState::Idle;
  return std::nullopt;
}

std::string_view to_string(ConditionClass c) {
  switch (c) {
    case ConditionClass::Good: return "Good";
    case ConditionClass::Acceptable: return "Acceptable";
    case ConditionClass::Unsatisfactory: return "Unsatisfactory";
    case ConditionClass::Unacceptable: return "Unacceptable";
  }
  return "?";
}

bool AnomalyTracker::valid() const {
  if (depth < 1 || depth > kMaxDepth) return false;
  if (length > depth) return false;
  if (length < 64 && (history >> length) != 0) return false;
  return static_cast<unsigned>(std::popcount(history)) <= length;
}

AnomalyTracker new_tracker(unsigned depth) {
  if (depth < 1 || depth > AnomalyTracker::kMaxDepth) {
    throw ConfigError("history depth must be in [1, 64], got " + std::to_string(depth));
  }
  return AnomalyTracker{0, 0, depth};
}

void HeuristicParams::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("heuristic parameters: " + what); };
  for (auto [name, d] : {std::pair{"sensor_depth", sensor_depth},
                         std::pair{"gateway_depth", gateway_depth},
                         std::pair{"cloud_depth", cloud_depth}}) {
    if (d < 1 || d > AnomalyTracker::kMaxDepth) fail(std::string(name) + " must be in [1, 64]");
  }
  if (!(battery_threshold_pct > 0.0 && battery_threshold_pct < 100.0)) {
    fail("battery_threshold_pct must be in (0, 100)");
  }
  if (sensor_escalate == 0 || sensor_escalate > sensor_depth) {
    fail("require 0 < sensor_escalate <= sensor_depth");
  }
  if (gateway_deescalate == 0 || gateway_deescalate >= gateway_escalate ||
      gateway_escalate > gateway_depth) {
    fail("require 0 < gateway_deescalate < gateway_escalate <= gateway_depth");
  }
  if (cloud_deescalate == 0 || cloud_deescalate > cloud_depth) {
    fail("require 0 < cloud_deescalate <= cloud_depth");
  }
  if (cloud_escalate == 0) fail("cloud_escalate must be positive");
  if (queue_threshold < 1) fail("queue_threshold must be >= 1");
}

BatteryState BatteryState::lipo_1400mah() {
  // 1400 mAh * 3.7 V = 5180 mWh = 18,648 J
  return with_capacity(Energy::joules(18'648.0), 3.7);
}

BatteryState BatteryState::with_capacity(Energy capacity, double voltage) {
  if (capacity < Energy{}) throw ConfigError("battery capacity must be non-negative");
  BatteryState b;
  b.capacity = capacity;
  b.voltage = voltage;
  return b;
}

double BatteryState::level_pct() const {
  if (capacity.nj() <= 0) return 0.0;
  const auto rem = std::max<std::int64_t>(0, remaining().nj());
  return 100.0 * static_cast<double>(rem) / static_cast<double>(capacity.nj());
}

}  // namespace pdmsim
