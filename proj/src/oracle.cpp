#include "pdmsim/oracle.hpp"

#include <cmath>
#include <string>

namespace pdmsim {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::array<ClassWeights, kClassCount> uniform_errors() {
  std::array<ClassWeights, kClassCount> w{};
  for (int t = 0; t < kClassCount; ++t) {
    for (int p = 0; p < kClassCount; ++p) w[t][p] = (t == p) ? 0.0 : 1.0;
  }
  return w;
}

TierAccuracyProfile make_profile(InferenceMode tier, double accuracy, ClassWeights recall) {
  TierAccuracyProfile p;
  p.tier = tier;
  p.accuracy = accuracy;
  p.recall = recall;
  p.error_weights = uniform_errors();
  return p;
}

bool is_fraction(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::uint64_t k = splitmix64(seed ^ h);
  k = splitmix64(k ^ a);
  k = splitmix64(k ^ (b * 0xD6E8FEB86659FD93ull));
  return k;
}

double Rng::unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling keeps the result exactly uniform.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

std::int64_t Rng::between(std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(below(span));
}

TierAccuracyProfile TierAccuracyProfile::cloud_default() {
  return make_profile(InferenceMode::Cloud, 0.9938, {0.9811, 0.9971, 0.9856, 0.9969});
}

TierAccuracyProfile TierAccuracyProfile::gateway_default() {
  return make_profile(InferenceMode::Gateway, 0.9406, {0.8440, 0.9677, 0.9809, 0.9511});
}

TierAccuracyProfile TierAccuracyProfile::sensor_default() {
  return make_profile(InferenceMode::Sensor, 0.9140, {0.8113, 0.9941, 0.9781, 0.9961});
}

TierAccuracyProfile TierAccuracyProfile::for_tier(InferenceMode tier) {
  switch (tier) {
    case InferenceMode::Sensor: return sensor_default();
    case InferenceMode::Gateway: return gateway_default();
    case InferenceMode::Cloud: return cloud_default();
  }
  return cloud_default();
}

void TierAccuracyProfile::validate() const {
  const std::string name(to_string(tier));
  if (!is_fraction(accuracy)) throw ConfigError(name + " profile: accuracy must be in [0, 1]");
  for (int c = 0; c < kClassCount; ++c) {
    if (!is_fraction(recall[c])) throw ConfigError(name + " profile: recall must be in [0, 1]");
    double total = 0.0;
    for (int p = 0; p < kClassCount; ++p) {
      if (p == c) continue;
      if (!(error_weights[c][p] >= 0.0)) {
        throw ConfigError(name + " profile: error weights must be non-negative");
      }
      total += error_weights[c][p];
    }
    if (recall[c] < 1.0 && !(total > 0.0)) {
      throw ConfigError(name + " profile: class " + std::to_string(c) +
                        " can be misclassified but has no error weights");
    }
  }
}

void GroundTruthProcess::validate() const {
  if (!is_fraction(anomaly_probability)) throw ConfigError("anomaly_probability must be in [0, 1]");
  if (!is_fraction(good_share)) throw ConfigError("good_share must be in [0, 1]");
  if (!is_fraction(unsatisfactory_share)) throw ConfigError("unsatisfactory_share must be in [0, 1]");
}

ConditionClass draw_ground_truth(const GroundTruthProcess& process, NodeId node, std::uint64_t step) {
  Rng rng(derive_seed(process.seed, "ground-truth", node, step));
  const double u = rng.unit();
  const double v = rng.unit();
  if (u < process.anomaly_probability) {
    return v < process.unsatisfactory_share ? ConditionClass::Unsatisfactory : ConditionClass::Unacceptable;
  }
  return v < process.good_share ? ConditionClass::Good : ConditionClass::Acceptable;
}

Prediction predict(const TierAccuracyProfile& profile, ConditionClass truth, Rng& rng,
                   const AnomalyMapping& mapping) {
  const int t = static_cast<int>(truth);
  Prediction out;
  out.origin = profile.tier;
  out.label = truth;
  if (rng.unit() >= profile.recall[t]) {
    const auto& w = profile.error_weights[t];
    double total = 0.0;
    for (int p = 0; p < kClassCount; ++p) total += (p == t) ? 0.0 : w[p];
    double pick = rng.unit() * total;
    int chosen = -1;
    for (int p = 0; p < kClassCount; ++p) {
      if (p == t || w[p] <= 0.0) continue;
      chosen = p;
      if (pick < w[p]) break;
      pick -= w[p];
    }
    if (chosen >= 0) out.label = static_cast<ConditionClass>(chosen);
  }
  out.anomaly = mapping(out.label);
  return out;
}

Prediction predict_keyed(const TierAccuracyProfile& profile, ConditionClass truth, std::uint64_t seed,
                         NodeId node, std::uint64_t step, const AnomalyMapping& mapping) {
  Rng rng(derive_seed(seed, to_string(profile.tier), node, step));
  auto p = predict(profile, truth, rng, mapping);
  p.node = node;
  p.step = step;
  return p;
}

}  // namespace pdmsim
