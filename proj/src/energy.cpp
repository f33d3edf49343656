#include "pdmsim/energy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pdmsim {

std::string_view to_string(Operation op) {
  switch (op) {
    case Operation::Sampling: return "sampling";
    case Operation::LocalInference: return "local_inference";
    case Operation::Compression: return "compression";
    case Operation::RadioTx: return "radio_tx";
    case Operation::Sleep: return "sleep";
    case Operation::CommandPoll: return "command_poll";
  }
  return "?";
}

double OperationCost::mean_power_w() const {
  // mJ / ms == J / s
  return energy.mj() / static_cast<double>(duration_ms);
}

void EnergyTable::validate() const {
  const std::pair<const char*, const OperationCost*> rows[] = {
      {"sampling", &sampling}, {"local_inference", &local_inference},
      {"compression", &compression}, {"radio_tx", &radio_tx}};
  for (const auto& [name, c] : rows) {
    if (!(c->size_kb > 0.0) || c->duration_ms <= 0 || c->energy <= Energy{}) {
      throw ConfigError(std::string("energy table: ") + name +
                        " needs positive size, duration and energy");
    }
    const double p = c->mean_power_w();
    if (!std::isfinite(p) || p <= 0.0) {
      throw ConfigError(std::string("energy table: ") + name + " has non-physical mean power");
    }
  }
  if (!(sleep_current_ua > 0.0) || !(supply_voltage > 0.0)) {
    throw ConfigError("energy table: sleep current and supply voltage must be positive");
  }
}

const OperationCost& EnergyTable::cost(Operation op) const {
  switch (op) {
    case Operation::Sampling: return sampling;
    case Operation::LocalInference: return local_inference;
    case Operation::Compression: return compression;
    case Operation::RadioTx:
    case Operation::CommandPoll: return radio_tx;
    case Operation::Sleep: break;
  }
  throw std::invalid_argument("sleep has no fixed cost; use sleep_energy()");
}

Energy EnergyTable::sleep_energy(std::int64_t sleep_ms) const {
  // uA * V = uW, and uW * ms = nJ
  return Energy::nanojoules(std::llround(sleep_current_ua * supply_voltage * static_cast<double>(sleep_ms)));
}

CycleCost cycle_cost(InferenceMode mode, std::int64_t sleep_ms, const EnergyTable& table) {
  CycleCost c;
  c.duration_ms = sleep_ms + table.sampling.duration_ms;
  c.energy = table.sleep_energy(sleep_ms) + table.sampling.energy;
  if (mode == InferenceMode::Sensor) {
    c.duration_ms += table.local_inference.duration_ms;
    c.energy += table.local_inference.energy;
  } else {
    c.duration_ms += table.compression.duration_ms + table.radio_tx.duration_ms;
    c.energy += table.compression.energy + table.radio_tx.energy;
  }
  return c;
}

Energy cycle_energy(InferenceMode mode, std::int64_t sleep_ms, const EnergyTable& table) {
  return cycle_cost(mode, sleep_ms, table).energy;
}

double battery_life_bound_hours(const BatteryState& battery, InferenceMode mode, std::int64_t sleep_ms,
                                const EnergyTable& table) {
  const auto c = cycle_cost(mode, sleep_ms, table);
  const double cycles = static_cast<double>(battery.capacity.nj()) / static_cast<double>(c.energy.nj());
  return cycles * static_cast<double>(c.duration_ms) / 3'600'000.0;
}

double energy_savings_percent(double onboard_mj, double offboard_mj) {
  if (!(offboard_mj > 0.0)) throw std::domain_error("off-board cycle energy must be positive");
  return 100.0 * (offboard_mj - onboard_mj) / offboard_mj;
}

void EnergyLedger::append(const LedgerEntry& entry) {
  entries_.push_back(entry);
  total_ += entry.energy;
}

DebitResult debit(BatteryState& battery, EnergyLedger& ledger, SimTime now, NodeId node, Operation op,
                  Energy energy) {
  DebitResult r;
  if (battery.exhausted()) return r;
  r.charged = energy <= battery.remaining() ? energy : battery.remaining();
  battery.consumed += r.charged;
  r.died = battery.exhausted();
  ledger.append(LedgerEntry{now, node, op, r.charged, battery.level_pct()});
  return r;
}

DebitResult debit(BatteryState& battery, EnergyLedger& ledger, SimTime now, NodeId node, Operation op,
                  const EnergyTable& table) {
  return debit(battery, ledger, now, node, op, table.cost(op).energy);
}

}  // namespace pdmsim
