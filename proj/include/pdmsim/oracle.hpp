#pragma once

// Seeded stand-in for the per-tier condition classifiers.
//
// Ground truth and predictions are drawn from counter-keyed streams: the
// draw for (seed, node, step, tier) never depends on how many other draws
// happened before it, so adding nodes or reordering events does not perturb
// existing streams.

#include <array>
#include <cstdint>
#include <random>
#include <string_view>

#include "pdmsim/core.hpp"

namespace pdmsim {

// Stable 64-bit key derivation: FNV-1a over the label, mixed with `seed`
// and the integer coordinates through splitmix64.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t a = 0,
                          std::uint64_t b = 0);

// Portable uniform draws on top of std::mt19937_64 (the standard
// distributions are implementation-defined and would break cross-platform
// trace identity).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 bits of resolution.
  double unit();
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  // Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi);

 private:
  std::mt19937_64 engine_;
};

using ClassWeights = std::array<double, kClassCount>;

struct TierAccuracyProfile {
  InferenceMode tier = InferenceMode::Cloud;
  double accuracy = 1.0;  // reported only
  ClassWeights recall{1.0, 1.0, 1.0, 1.0};
  // error_weights[true][predicted]: relative weights of the wrong labels.
  // The diagonal is ignored. Default is uniform over the other three.
  std::array<ClassWeights, kClassCount> error_weights{};

  static TierAccuracyProfile cloud_default();
  static TierAccuracyProfile gateway_default();
  static TierAccuracyProfile sensor_default();
  static TierAccuracyProfile for_tier(InferenceMode tier);

  void validate() const;
};

struct GroundTruthProcess {
  double anomaly_probability = 0.3;
  double good_share = 0.5;            // P(Good | healthy)
  double unsatisfactory_share = 0.5;  // P(Unsatisfactory | anomalous)
  std::uint64_t seed = 1;

  void validate() const;
};

// Which labels raise the anomaly bit. Default: Unsatisfactory, Unacceptable.
struct AnomalyMapping {
  std::array<bool, kClassCount> anomalous{false, false, true, true};
  bool operator()(ConditionClass c) const { return anomalous[static_cast<int>(c)]; }
};

ConditionClass draw_ground_truth(const GroundTruthProcess& process, NodeId node, std::uint64_t step);

// Draws a prediction using the caller's stream.
Prediction predict(const TierAccuracyProfile& profile, ConditionClass truth, Rng& rng,
                   const AnomalyMapping& mapping = {});

// Keyed variant used by the simulator: identical (seed, node, step, tier)
// always yields the identical prediction.
Prediction predict_keyed(const TierAccuracyProfile& profile, ConditionClass truth, std::uint64_t seed,
                         NodeId node, std::uint64_t step, const AnomalyMapping& mapping = {});

}  // namespace pdmsim
