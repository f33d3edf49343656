#pragma once

// Per-operation energy accounting for a sensor node.
//
// Power is modelled as piecewise constant: every operation contributes a
// fixed (duration, energy) pair, and deep sleep draws a constant current.
// The ledger is therefore an exact discrete sum.

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "pdmsim/core.hpp"

namespace pdmsim {

enum class Operation : std::uint8_t { Sampling = 0, LocalInference, Compression, RadioTx, Sleep, CommandPoll };

std::string_view to_string(Operation op);

struct OperationCost {
  double size_kb = 0.0;
  std::int64_t duration_ms = 0;
  Energy energy;

  // Mean power in watts over the operation.
  double mean_power_w() const;
};

struct EnergyTable {
  OperationCost sampling{5.86, 10'000, Energy::millijoules(2'000.00)};
  OperationCost local_inference{2.92, 14, Energy::millijoules(2.72)};
  OperationCost compression{5.86, 50, Energy::millijoules(10.67)};
  OperationCost radio_tx{3.00, 4'700, Energy::millijoules(1'570.00)};
  double sleep_current_ua = 10.0;
  double supply_voltage = 3.7;

  // Throws ConfigError if any cost is non-positive.
  void validate() const;

  const OperationCost& cost(Operation op) const;
  Energy sleep_energy(std::int64_t sleep_ms) const;
};

// Sleep + active phase for one duty cycle, with the radio poll excluded.
struct CycleCost {
  std::int64_t duration_ms = 0;
  Energy energy;
};

CycleCost cycle_cost(InferenceMode mode, std::int64_t sleep_ms, const EnergyTable& table);
Energy cycle_energy(InferenceMode mode, std::int64_t sleep_ms, const EnergyTable& table);

// Single-mode lifetime of a fresh battery, in hours.
double battery_life_bound_hours(const BatteryState& battery, InferenceMode mode, std::int64_t sleep_ms,
                                const EnergyTable& table);

// Relative saving of the on-board cycle against the off-board one, in percent.
// Throws std::domain_error when offboard_mj <= 0.
double energy_savings_percent(double onboard_mj, double offboard_mj);

struct LedgerEntry {
  SimTime timestamp{};
  NodeId node = 0;
  Operation operation = Operation::Sampling;
  Energy energy;
  double battery_pct = 100.0;
};

class EnergyLedger {
 public:
  void append(const LedgerEntry& entry);
  const std::vector<LedgerEntry>& entries() const { return entries_; }
  Energy total() const { return total_; }

 private:
  std::vector<LedgerEntry> entries_;
  Energy total_;
};

struct DebitResult {
  Energy charged;
  bool died = false;  // battery reached empty on this debit
};

// Charges `energy` to the battery and appends a ledger row. A debit larger
// than what remains is clamped. Debiting a dead battery does nothing.
DebitResult debit(BatteryState& battery, EnergyLedger& ledger, SimTime now, NodeId node, Operation op,
                  Energy energy);

DebitResult debit(BatteryState& battery, EnergyLedger& ledger, SimTime now, NodeId node, Operation op,
                  const EnergyTable& table);

}  // namespace pdmsim
