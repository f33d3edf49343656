#pragma once

// Straight-line reference models used as test oracles. They share no code
// with the library: the history is a plain list of bools, the heuristics
// are written branch by branch from the published pseudo-code, and energy
// sums are computed from the table values in millijoules.

#include <cstddef>
#include <deque>

namespace ref {

enum Mode { S = 0, G = 1, C = 2 };

// Sliding window kept as a list, newest at the front.
struct History {
  std::deque<bool> bits;
  unsigned depth;

  explicit History(unsigned h) : depth(h) {}

  void push(bool anomaly, bool mode_unchanged) {
    if (!mode_unchanged) {
      bits.clear();
      return;
    }
    bits.push_front(anomaly);
    while (bits.size() > depth) bits.pop_back();
  }

  unsigned sigma() const {
    unsigned n = 0;
    for (bool b : bits) n += b ? 1 : 0;
    return n;
  }
  unsigned tau() const { return static_cast<unsigned>(bits.size()); }
};

struct Params {
  double psi_b = 20;
  unsigned psi_s = 4;
  unsigned phi_g = 4, psi_g = 8, psi_q = 4;
  unsigned phi_c = 2;
};

inline Mode sensor(unsigned sigma, unsigned tau, unsigned h, double b, const Params& p) {
  if (b < p.psi_b) {
    return S;
  }
  if (tau < h) {
    return S;
  }
  if (sigma >= p.psi_s) {
    return G;
  }
  return S;
}

inline Mode gateway(unsigned sigma, unsigned tau, unsigned h, double b, std::size_t q, const Params& p) {
  if (b < p.psi_b) {
    return S;
  }
  if (tau < h) {
    return G;
  }
  if (sigma < p.phi_g) {
    return S;
  } else if (sigma >= p.phi_g && sigma < p.psi_g && q < p.psi_q) {
    return G;
  } else {
    return C;
  }
}

inline Mode cloud(unsigned sigma, unsigned tau, unsigned h, double b, const Params& p) {
  if (b < p.psi_b) {
    return S;
  }
  if (tau < h) {
    return C;
  }
  if (sigma < p.phi_c) {
    return G;
  }
  return C;
}

// Table values in mJ / ms.
inline constexpr double kSamplingMj = 2000.00, kInferMj = 2.72, kCompressMj = 10.67, kRadioMj = 1570.00;
inline constexpr long kSamplingMs = 10000, kInferMs = 14, kCompressMs = 50, kRadioMs = 4700;

inline double sleep_mj(long sleep_ms) { return 10e-6 * 3.7 * static_cast<double>(sleep_ms); }

inline double onboard_cycle_mj(long sleep_ms) { return kSamplingMj + kInferMj + sleep_mj(sleep_ms); }
inline double offboard_cycle_mj(long sleep_ms) {
  return kSamplingMj + kCompressMj + kRadioMj + sleep_mj(sleep_ms);
}
inline long onboard_cycle_ms(long sleep_ms) { return kSamplingMs + kInferMs + sleep_ms; }
inline long offboard_cycle_ms(long sleep_ms) { return kSamplingMs + kCompressMs + kRadioMs + sleep_ms; }

}  // namespace ref
