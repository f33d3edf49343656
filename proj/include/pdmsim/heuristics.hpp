#pragma once

// Anomaly-history update and the per-tier adaptive inference heuristics.
// Everything here is a pure function of its arguments.

#include <cstddef>

#include "pdmsim/core.hpp"

namespace pdmsim {

// Shift the newest anomaly bit into the history, keeping the low `depth`
// bits. When the node's mode changed since the previous step the history
// is cleared instead and the current bit is discarded.
AnomalyTracker update_history(const AnomalyTracker& tracker, bool anomaly, bool mode_unchanged);

// Number of anomalies in the window (sigma).
unsigned anomaly_count(const AnomalyTracker& tracker);

// Decides whether a node running on-device stays in S or moves to G.
// `tracker` must already include this step's prediction.
InferenceMode sensor_heuristic(const AnomalyTracker& tracker, double battery_pct,
                               const HeuristicParams& params);

// Decides between S, G and C for a node whose inference runs on the gateway.
// `queue_size` is the gateway inference queue length at decision time.
InferenceMode gateway_heuristic(const AnomalyTracker& tracker, double battery_pct,
                                std::size_t queue_size, const HeuristicParams& params);

// Decides between S, G and C for a node whose inference runs in the cloud.
InferenceMode cloud_heuristic(const AnomalyTracker& tracker, double battery_pct,
                              const HeuristicParams& params);

// The heuristic owned by the tier that served the prediction.
InferenceMode run_heuristic(InferenceMode tier, const AnomalyTracker& tracker, double battery_pct,
                            std::size_t queue_size, const HeuristicParams& params);

// Depth configured for `tier`.
unsigned depth_for(InferenceMode tier, const HeuristicParams& params);

// True if a heuristic at `from` may ever return `to`.
bool is_legal_transition(InferenceMode from, InferenceMode to);

}  // namespace pdmsim
