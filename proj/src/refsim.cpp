#include "naas/refsim.hpp"

#include <array>
#include <optional>
#include <random>
#include <set>
#include <sstream>

namespace naas {

namespace {

using TileId = std::array<u64, 6>;

TileId mask_id(const DimMap<u64>& idx, TensorKind kind) {
  TileId id{};
  for (std::size_t i = 0; i < kNumDims; ++i)
    id[i] = dim_relevant(kind, kAllDims[i]) ? idx[kAllDims[i]] : 0;
  return id;
}

// Runs fn(idx) for every point of the index space, innermost loop last in
// `order`, exactly as the hardware would sequence the tiles.
template <typename Fn>
void walk_nest(const LoopOrder& order, const Extents& trips, Fn&& fn) {
  DimMap<u64> idx{};
  while (true) {
    fn(idx);
    int level = static_cast<int>(kNumDims) - 1;
    while (level >= 0) {
      Dim d = order[level];
      if (++idx[d] < trips[d]) break;
      idx[d] = 0;
      --level;
    }
    if (level < 0) break;
  }
}

}  // namespace

CostReport simulate_reference(const AcceleratorConfig& accel, const Mapping& mapping,
                              const ConvLayer& layer, const EnergyModel& em) {
  if (total_macs(layer) > kRefSimMacLimit)
    throw ConfigError("reference simulator: layer " + layer.name + " has " +
                      std::to_string(total_macs(layer)) + " MACs, guard is " +
                      std::to_string(kRefSimMacLimit));
  for (Dim d : kAllDims) {
    if (mapping.l2_tile[d] == 0 || mapping.l1_tile[d] == 0 ||
        mapping.l2_tile[d] > layer.extent[d] || mapping.l1_tile[d] > mapping.l2_tile[d])
      throw InfeasibleError("reference simulator: inconsistent mapping tiles");
  }

  TripCounts trips = trip_counts(mapping, layer, accel);

  u64 l1_need = 0, l2_need = 0;
  for (TensorKind t : kAllTensors) {
    l1_need += footprint(t, trips.per_pe, layer.stride) * em.bytes_per_element;
    l2_need += footprint(t, mapping.l2_tile, layer.stride) * em.bytes_per_element;
  }
  if (l1_need > accel.l1_bytes)
    throw InfeasibleError("reference simulator: L1 capacity exceeded");
  if (l2_need > accel.l2_bytes)
    throw InfeasibleError("reference simulator: L2 capacity exceeded");

  // --- DRAM <-> L2: one buffered tile per tensor; outputs spill on eviction
  // and read their partial sums back when a tile returns.
  std::array<std::optional<TileId>, 3> cur_dram;
  std::array<u64, 3> dram_fetches{};   // input/weight tile loads
  u64 out_writes = 0, out_readbacks = 0;
  std::set<TileId> out_seen;
  walk_nest(mapping.l2_order, trips.l2, [&](const DimMap<u64>& idx) {
    for (TensorKind t : kAllTensors) {
      auto ti = static_cast<std::size_t>(t);
      TileId id = mask_id(idx, t);
      if (cur_dram[ti] && *cur_dram[ti] == id) continue;
      if (t == TensorKind::Output) {
        if (cur_dram[ti]) ++out_writes;
        if (!out_seen.insert(id).second) ++out_readbacks;
      } else {
        ++dram_fetches[ti];
      }
      cur_dram[ti] = id;
    }
  });
  if (cur_dram[static_cast<std::size_t>(TensorKind::Output)]) ++out_writes;

  // --- L2 <-> array: the array's tile identity includes the full L2-level
  // position, so stepping any outer loop invalidates what the PEs hold.
  using ArrayTileId = std::array<u64, 12>;
  std::array<std::optional<ArrayTileId>, 3> cur_l2;
  std::array<u64, 3> l2_fetches{};
  walk_nest(mapping.l2_order, trips.l2, [&](const DimMap<u64>& outer) {
    walk_nest(mapping.l1_order, trips.l1, [&](const DimMap<u64>& inner) {
      for (TensorKind t : kAllTensors) {
        auto ti = static_cast<std::size_t>(t);
        ArrayTileId id{};
        for (std::size_t i = 0; i < kNumDims; ++i) id[i] = outer[kAllDims[i]];
        TileId lo = mask_id(inner, t);
        for (std::size_t i = 0; i < kNumDims; ++i) id[6 + i] = lo[i];
        if (cur_l2[ti] && *cur_l2[ti] == id) continue;
        ++l2_fetches[ti];
        cur_l2[ti] = id;
      }
    });
  });

  // --- Compute: step every PE-level iteration, count the MACs whose indices
  // land inside the layer (lockstep lanes burn cycles on ragged edges).
  u64 cycles = 0, macs = 0;
  walk_nest(mapping.l2_order, trips.l2, [&](const DimMap<u64>& i2) {
    walk_nest(mapping.l1_order, trips.l1, [&](const DimMap<u64>& i1) {
      walk_nest(mapping.pe_order, trips.per_pe, [&](const DimMap<u64>& i0) {
        ++cycles;
        // Offset of this slot within the L1 tile, per dim; parallel dims get
        // a contiguous block per lane.
        DimMap<u64> off{};
        for (Dim d : kAllDims) off[d] = i0[d];
        auto in_bounds = [&](Dim d) {
          u64 o = off[d];
          return o < mapping.l1_tile[d] &&
                 i1[d] * mapping.l1_tile[d] + o < mapping.l2_tile[d] &&
                 i2[d] * mapping.l2_tile[d] + i1[d] * mapping.l1_tile[d] + o <
                     layer.extent[d];
        };
        auto lanes = [&](auto&& self, std::size_t axis) -> void {
          if (axis == accel.parallel_dims.size()) {
            for (Dim d : kAllDims)
              if (!in_bounds(d)) return;
            ++macs;
            return;
          }
          Dim p = accel.parallel_dims[axis];
          for (u64 lane = 0; lane < accel.array_size[axis]; ++lane) {
            off[p] = lane * trips.per_pe[p] + i0[p];
            self(self, axis + 1);
          }
        };
        lanes(lanes, 0);
      });
    });
  });

  LevelAccesses dram, l2acc, l1acc;
  for (TensorKind t : kAllTensors) {
    auto ti = static_cast<std::size_t>(t);
    u64 fp2 = footprint(t, mapping.l2_tile, layer.stride);
    u64 events = t == TensorKind::Output ? out_writes + out_readbacks : dram_fetches[ti];
    dram.of(t) = events * fp2 * layer.groups;

    Extents l1_array = mapping.l1_tile;
    for (std::size_t i = 0; i < accel.parallel_dims.size(); ++i) {
      Dim p = accel.parallel_dims[i];
      l1_array[p] = accel.array_size[i] * ceil_div(mapping.l1_tile[p], accel.array_size[i]);
    }
    l2acc.of(t) = l2_fetches[ti] * footprint(t, l1_array, layer.stride) * layer.groups;
    l1acc.of(t) = macs * layer.groups;
  }

  return finalize_report(macs * layer.groups, cycles * layer.groups, dram, l2acc, l1acc,
                         accel, em);
}

namespace {

std::vector<double> draw_unit_vector(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return v;
}

void compare_counts(const std::string& where, const LevelAccesses& model,
                    const LevelAccesses& sim, std::vector<std::string>& diffs) {
  for (TensorKind t : kAllTensors) {
    if (model.of(t) != sim.of(t))
      diffs.push_back(where + "." + tensor_name(t) + " model=" + std::to_string(model.of(t)) +
                      " sim=" + std::to_string(sim.of(t)));
  }
}

std::vector<std::string> compare_reports(const CostReport& model, const CostReport& sim) {
  std::vector<std::string> diffs;
  compare_counts("dram", model.dram, sim.dram, diffs);
  compare_counts("l2", model.l2, sim.l2, diffs);
  compare_counts("l1", model.l1, sim.l1, diffs);
  auto check = [&](const char* field, auto a, auto b) {
    if (a != b) {
      std::ostringstream os;
      os << field << " model=" << a << " sim=" << b;
      diffs.push_back(os.str());
    }
  };
  check("total_macs", model.total_macs, sim.total_macs);
  check("compute_cycles", model.compute_cycles, sim.compute_cycles);
  check("memory_cycles", model.memory_cycles, sim.memory_cycles);
  check("latency_cycles", model.latency_cycles, sim.latency_cycles);
  check("energy_units", model.energy_units, sim.energy_units);
  check("edp", model.edp, sim.edp);
  check("utilization", model.utilization, sim.utilization);
  return diffs;
}

}  // namespace

OracleCheckReport oracle_check(u64 trials_per_layer, u64 seed) {
  // Small layers that still exercise the interesting paths: halo-overlapped
  // inputs, stride-2 input reuse, and grouped serialization.
  const std::vector<ConvLayer> layers = {
      {"dense-3x3", make_extents(8, 8, 3, 3, 8, 8), 1, 1},
      {"strided-5x5", make_extents(6, 10, 5, 5, 7, 7), 2, 1},
      {"grouped-3x3", make_extents(4, 4, 3, 3, 16, 16), 1, 4},
  };
  const ResourceConstraint budget{"oracle-check", 64, 256 * 1024, 64};
  const EnergyModel em;
  constexpr std::size_t kDetailCap = 20;

  OracleCheckReport out;
  std::mt19937_64 rng(derive_seed(seed, "oracle-check"));
  for (const ConvLayer& layer : layers) {
    for (u64 trial = 0; trial < trials_per_layer; ++trial) {
      // Redraw until the point decodes to a valid accelerator and a mapping
      // the analytical model accepts; only such pairs count as trials.
      AcceleratorConfig accel;
      Mapping mapping;
      CostReport model;
      for (u64 attempt = 0;; ++attempt) {
        if (attempt >= 1'000'000)
          throw ConfigError("oracle_check: could not sample a feasible pair");
        HwDecodeResult hw = decode_hardware(draw_unit_vector(rng, kHwEncodingDims), budget);
        if (!hw) continue;
        bool found = false;
        for (int map_try = 0; map_try < 64 && !found; ++map_try) {
          Mapping m = decode_mapping(draw_unit_vector(rng, kMapEncodingDims), layer, *hw.config);
          if (EvalResult ev = evaluate(*hw.config, m, layer, em)) {
            accel = *hw.config;
            mapping = m;
            model = *ev;
            found = true;
          }
        }
        if (found) break;
      }

      ++out.trials;
      std::vector<std::string> diffs;
      try {
        diffs = compare_reports(model, simulate_reference(accel, mapping, layer, em));
      } catch (const InfeasibleError& e) {
        diffs = {std::string("model accepted but simulator rejected: ") + e.what()};
      }
      if (!diffs.empty()) {
        ++out.mismatches;
        if (out.details.size() < kDetailCap) {
          std::ostringstream os;
          os << layer.name << " trial " << trial << ": " << diffs.front() << " ("
             << diffs.size() << " field(s) differ; accel " << accel.num_pes << " PEs, l1 "
             << accel.l1_bytes << "B, l2 " << accel.l2_bytes << "B)";
          out.details.push_back(os.str());
        }
      }
    }
  }
  return out;
}

}  // namespace naas
