#pragma once

#include <cstdint>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "pdmsim/core.hpp"

namespace pdmsim {

// Discrete-event queue ordered by (time, insertion sequence). Events at the
// same timestamp run in the order they were scheduled.
template <typename Payload>
class EventQueue {
 public:
  struct Entry {
    SimTime time;
    std::uint64_t seq;
    Payload payload;
  };

  std::uint64_t schedule(SimTime time, Payload payload) {
    if (time < now_) {
      throw SimulationError("event scheduled in the past: t=" + std::to_string(time.count()) +
                            "us, now=" + std::to_string(now_.count()) + "us");
    }
    const auto seq = next_seq_++;
    heap_.push(Entry{time, seq, std::move(payload)});
    return seq;
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  SimTime now() const { return now_; }
  SimTime next_time() const { return heap_.top().time; }

  // Removes the earliest event and advances the clock to it.
  Entry pop() {
    Entry e = heap_.top();
    heap_.pop();
    now_ = e.time;
    return e;
  }

  // Pops and dispatches every event with time <= until, in key order.
  // Returns the number of events executed.
  template <typename Handler>
  std::uint64_t run_until(SimTime until, Handler&& handler) {
    std::uint64_t n = 0;
    while (!heap_.empty() && heap_.top().time <= until) {
      auto e = pop();
      handler(e);
      ++n;
    }
    if (now_ < until) now_ = until;
    return n;
  }

 private:
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  SimTime now_{};
  std::uint64_t next_seq_ = 0;
};

}  // namespace pdmsim
