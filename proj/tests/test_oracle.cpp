#include <doctest.h>

#include <array>
#include <cmath>
#include <set>

#include "pdmsim/oracle.hpp"

using namespace pdmsim;

namespace {

constexpr std::array<InferenceMode, 3> kTiers{InferenceMode::Sensor, InferenceMode::Gateway, InferenceMode::Cloud};

}  // namespace

TEST_CASE("derived seeds are stable and label-sensitive") {
  CHECK(derive_seed(1, "oracle", 2, 3) == derive_seed(1, "oracle", 2, 3));
  CHECK(derive_seed(1, "oracle", 2, 3) != derive_seed(1, "latency", 2, 3));
  CHECK(derive_seed(1, "oracle", 2, 3) != derive_seed(1, "oracle", 3, 2));
  CHECK(derive_seed(1, "oracle") != derive_seed(2, "oracle"));
}

TEST_CASE("rng helpers stay in range") {
  Rng r(5);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.below(7) < 7);
    const auto v = r.between(-3, 3);
    CHECK(v >= -3);
    CHECK(v <= 3);
  }
}

TEST_CASE("default accuracy profiles") {
  const auto c = TierAccuracyProfile::cloud_default();
  CHECK(c.recall[0] == 0.9811);
  CHECK(c.recall[1] == 0.9971);
  CHECK(c.recall[2] == 0.9856);
  CHECK(c.recall[3] == 0.9969);
  const auto g = TierAccuracyProfile::gateway_default();
  CHECK(g.recall[0] == 0.8440);
  CHECK(g.recall[3] == 0.9511);
  const auto s = TierAccuracyProfile::sensor_default();
  CHECK(s.recall[0] == 0.8113);
  CHECK(s.recall[1] == 0.9941);
  for (auto t : kTiers) CHECK_NOTHROW(TierAccuracyProfile::for_tier(t).validate());

  auto bad = c;
  bad.recall[2] = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("ground truth respects the anomaly probability") {
  GroundTruthProcess p;
  p.anomaly_probability = 0.0;
  for (std::uint64_t s = 0; s < 5000; ++s) {
    const auto c = draw_ground_truth(p, 3, s);
    CHECK((c == ConditionClass::Good || c == ConditionClass::Acceptable));
  }
  p.anomaly_probability = 1.0;
  for (std::uint64_t s = 0; s < 5000; ++s) {
    const auto c = draw_ground_truth(p, 3, s);
    CHECK((c == ConditionClass::Unsatisfactory || c == ConditionClass::Unacceptable));
  }
  p.anomaly_probability = 0.3;
  int anomalous = 0;
  const int n = 100000;
  for (int s = 0; s < n; ++s) {
    if (static_cast<int>(draw_ground_truth(p, 0, s)) >= 2) ++anomalous;
  }
  const double sd = std::sqrt(0.3 * 0.7 / n);
  CHECK(std::abs(anomalous / double(n) - 0.3) < 4 * sd);

  // Streams are keyed by (node, step): reordering draws changes nothing.
  CHECK(draw_ground_truth(p, 9, 77) == draw_ground_truth(p, 9, 77));
  p.anomaly_probability = 1.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("perfect model always predicts the truth") {
  TierAccuracyProfile perfect;
  Rng rng(1);
  for (int i = 0; i < 4000; ++i) {
    const auto truth = static_cast<ConditionClass>(i % 4);
    const auto p = predict(perfect, truth, rng);
    CHECK(p.label == truth);
    CHECK(p.anomaly == (i % 4 >= 2));
  }
}

TEST_CASE("empirical recall is within 3 sigma of the profile") {
  const int n = 20000;
  for (auto tier : kTiers) {
    const auto prof = TierAccuracyProfile::for_tier(tier);
    Rng rng(derive_seed(11, "recall-test", static_cast<std::uint64_t>(tier)));
    for (int c = 0; c < kClassCount; ++c) {
      int hits = 0;
      std::set<int> wrong_labels;
      for (int i = 0; i < n; ++i) {
        const auto p = predict(prof, static_cast<ConditionClass>(c), rng);
        if (static_cast<int>(p.label) == c) {
          ++hits;
        } else {
          wrong_labels.insert(static_cast<int>(p.label));
        }
      }
      const double r = prof.recall[c];
      const double sd = std::sqrt(r * (1 - r) / n);
      CHECK(std::abs(hits / double(n) - r) <= 3 * sd + 1e-12);
      CHECK(wrong_labels.count(c) == 0);
    }
  }
}

TEST_CASE("keyed predictions are reproducible") {
  const auto prof = TierAccuracyProfile::sensor_default();
  for (std::uint64_t step = 0; step < 500; ++step) {
    const auto a = predict_keyed(prof, ConditionClass::Good, 42, 1, step);
    const auto b = predict_keyed(prof, ConditionClass::Good, 42, 1, step);
    CHECK(a.label == b.label);
  }
}

TEST_CASE("anomaly mapping is configurable") {
  AnomalyMapping m;
  CHECK_FALSE(m(ConditionClass::Good));
  CHECK_FALSE(m(ConditionClass::Acceptable));
  CHECK(m(ConditionClass::Unsatisfactory));
  CHECK(m(ConditionClass::Unacceptable));
  m.anomalous = {false, false, false, true};
  TierAccuracyProfile perfect;
  Rng rng(3);
  CHECK_FALSE(predict(perfect, ConditionClass::Unsatisfactory, rng, m).anomaly);
  CHECK(predict(perfect, ConditionClass::Unacceptable, rng, m).anomaly);
}
