#pragma once

#include "naas/costmodel.hpp"

namespace naas {

// Upper bound on layer size the simulator accepts; it walks every loop
// iteration literally and is meant for desk-scale validation only.
inline constexpr u64 kRefSimMacLimit = 10'000'000;

// Brute-force twin of evaluate(): executes the tiled loop nest step by step,
// tracks which tile each buffer level currently holds, and counts real
// fetch/spill events and in-bounds MACs. Finishes through the same report
// assembly as the analytical model, so any disagreement is a counting bug.
// Throws ConfigError past the MAC guard, InfeasibleError on capacity overflow.
CostReport simulate_reference(const AcceleratorConfig& accel, const Mapping& mapping,
                              const ConvLayer& layer, const EnergyModel& em);

struct OracleCheckReport {
  u64 trials = 0;      // valid (accelerator, mapping) pairs compared
  u64 mismatches = 0;  // pairs where any report field differed
  std::vector<std::string> details;  // one line per mismatch, capped
};

// Cross-checks evaluate() against simulate_reference() on randomly drawn
// accelerators and mappings for a fixed set of small layers (dense, strided,
// and grouped; all well under the simulator's MAC guard). Every field of the
// two reports must agree exactly. trials_per_layer counts valid pairs; draws
// that decode to rejected configurations are redrawn, not counted.
OracleCheckReport oracle_check(u64 trials_per_layer, u64 seed);

}  // namespace naas
