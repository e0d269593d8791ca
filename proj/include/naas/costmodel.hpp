#pragma once

#include <array>
#include <optional>
#include <string>

#include "naas/common.hpp"
#include "naas/hwspace.hpp"
#include "naas/mapspace.hpp"
#include "naas/workload.hpp"

namespace naas {

// Per-access energy in abstract units plus the fixed-point element width.
// These are configuration, not measurements; the defaults keep DRAM traffic
// two orders of magnitude more expensive than on-chip accesses.
struct EnergyModel {
  double e_mac = 1.0;
  double e_l1 = 1.0;
  double e_l2 = 6.0;
  double e_dram = 200.0;
  u64 bytes_per_element = 2;
};

EnergyModel load_energy_model(const std::string& path);
EnergyModel parse_energy_model(const std::string& text, const std::string& origin);
std::string serialize_energy_model(const EnergyModel& em);

enum class TensorKind : uint8_t { Input, Weight, Output };

inline constexpr std::array<TensorKind, 3> kAllTensors = {
    TensorKind::Input, TensorKind::Weight, TensorKind::Output};

const char* tensor_name(TensorKind k);

// Which loop dims index into each tensor. Loops over the other dims leave the
// tensor's working tile untouched.
bool dim_relevant(TensorKind kind, Dim d);

struct LevelAccesses {
  u64 input = 0;
  u64 weight = 0;
  u64 output = 0;

  u64& of(TensorKind k);
  u64 of(TensorKind k) const;
  u64 total() const { return input + weight + output; }
  bool operator==(const LevelAccesses&) const = default;
};

struct CostReport {
  u64 compute_cycles = 0;
  u64 memory_cycles = 0;
  u64 latency_cycles = 0;
  double energy_units = 0.0;
  double edp = 0.0;
  double utilization = 0.0;
  u64 total_macs = 0;
  LevelAccesses dram;
  LevelAccesses l2;
  LevelAccesses l1;
};

// Elements a tile of `kind` occupies. Input tiles carry the convolution halo:
// a tile of XP outputs at stride s needs (XP-1)*s + S input columns.
u64 footprint(TensorKind kind, const Extents& tile, u64 stride);

// How many times a tensor tile is pulled from the level above while the given
// loop nest runs once. Loops irrelevant to the tensor that sit inside its
// innermost moving relevant loop reuse the resident tile and contribute x1;
// irrelevant loops outside it force a refetch per iteration. Single-trip
// loops never move the tile and are transparent on both sides.
u64 refetch_multiplier(const LoopOrder& order, const Extents& trips, TensorKind kind);

struct EvalResult {
  std::optional<CostReport> report;
  std::string reject_reason;

  explicit operator bool() const { return report.has_value(); }
  const CostReport& operator*() const { return *report; }
  const CostReport* operator->() const { return &*report; }
};

// Analytical cost of running `layer` on `accel` under `mapping`. Rejects
// mappings whose tile footprints overflow the L1 or L2 buffers.
EvalResult evaluate(const AcceleratorConfig& accel, const Mapping& mapping,
                    const ConvLayer& layer, const EnergyModel& em);

// Sum over buffer levels of required/available bytes for this mapping's
// tiles. Values where either level's ratio exceeds 1 correspond exactly to
// the mappings evaluate() rejects; the magnitude ranks how badly an invalid
// mapping overflows, which search uses to steer toward feasibility.
double capacity_pressure(const AcceleratorConfig& accel, const Mapping& mapping,
                         const ConvLayer& layer, const EnergyModel& em);

// Assembles latency/energy/EDP from raw counts. Shared between the analytical
// model and the reference simulator so both sides finish with bit-identical
// floating-point arithmetic.
CostReport finalize_report(u64 macs, u64 compute_cycles, const LevelAccesses& dram,
                           const LevelAccesses& l2, const LevelAccesses& l1,
                           const AcceleratorConfig& accel, const EnergyModel& em);

std::string serialize_report(const CostReport& r);
std::string report_csv_header();
std::string report_csv_row(const std::string& tag, const CostReport& r);

}  // namespace naas
