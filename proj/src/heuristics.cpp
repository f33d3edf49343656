#include "pdmsim/heuristics.hpp"

#include <algorithm>
#include <bit>

namespace pdmsim {

namespace {

constexpr std::uint64_t low_mask(unsigned bits) {
  return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}

}  // namespace

AnomalyTracker update_history(const AnomalyTracker& tracker, bool anomaly, bool mode_unchanged) {
  AnomalyTracker next = tracker;
  if (!mode_unchanged) {
    next.history = 0;
    next.length = 0;
    return next;
  }
  next.length = std::min(tracker.depth, tracker.length + 1);
  // Inserting at bit 0 and masking to `length` (not just `depth`) keeps the
  // zero-above-length invariant for any valid input.
  next.history = ((tracker.history << 1) | (anomaly ? 1u : 0u)) & low_mask(next.length);
  return next;
}

unsigned anomaly_count(const AnomalyTracker& tracker) {
  return static_cast<unsigned>(std::popcount(tracker.history & low_mask(tracker.depth)));
}

InferenceMode sensor_heuristic(const AnomalyTracker& tracker, double battery_pct,
                               const HeuristicParams& params) {
  if (battery_pct < params.battery_threshold_pct) return InferenceMode::Sensor;
  if (tracker.length < tracker.depth) return InferenceMode::Sensor;
  if (anomaly_count(tracker) >= params.sensor_escalate) return InferenceMode::Gateway;
  return InferenceMode::Sensor;
}

InferenceMode gateway_heuristic(const AnomalyTracker& tracker, double battery_pct,
                                std::size_t queue_size, const HeuristicParams& params) {
  if (battery_pct < params.battery_threshold_pct) return InferenceMode::Sensor;
  if (tracker.length < tracker.depth) return InferenceMode::Gateway;
  const unsigned sigma = anomaly_count(tracker);
  if (sigma < params.gateway_deescalate) return InferenceMode::Sensor;
  if (sigma < params.gateway_escalate && queue_size < params.queue_threshold) {
    return InferenceMode::Gateway;
  }
  return InferenceMode::Cloud;
}

InferenceMode cloud_heuristic(const AnomalyTracker& tracker, double battery_pct,
                              const HeuristicParams& params) {
  if (battery_pct < params.battery_threshold_pct) return InferenceMode::Sensor;
  if (tracker.length < tracker.depth) return InferenceMode::Cloud;
  if (anomaly_count(tracker) < params.cloud_deescalate) return InferenceMode::Gateway;
  return InferenceMode::Cloud;
}

InferenceMode run_heuristic(InferenceMode tier, const AnomalyTracker& tracker, double battery_pct,
                            std::size_t queue_size, const HeuristicParams& params) {
  switch (tier) {
    case InferenceMode::Sensor: return sensor_heuristic(tracker, battery_pct, params);
    case InferenceMode::Gateway: return gateway_heuristic(tracker, battery_pct, queue_size, params);
    case InferenceMode::Cloud: return cloud_heuristic(tracker, battery_pct, params);
  }
  return tier;
}

unsigned depth_for(InferenceMode tier, const HeuristicParams& params) {
  switch (tier) {
    case InferenceMode::Sensor: return params.sensor_depth;
    case InferenceMode::Gateway: return params.gateway_depth;
    case InferenceMode::Cloud: return params.cloud_depth;
  }
  return params.sensor_depth;
}

bool is_legal_transition(InferenceMode from, InferenceMode to) {
  // S never jumps straight to C; G and C can reach every mode.
  return !(from == InferenceMode::Sensor && to == InferenceMode::Cloud);
}

}  // namespace pdmsim
