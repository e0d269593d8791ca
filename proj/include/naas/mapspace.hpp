#pragma once

#include <array>
#include <string>
#include <vector>

#include "naas/hwspace.hpp"
#include "naas/workload.hpp"

namespace naas {

using LoopOrder = std::array<Dim, kNumDims>;  // outermost first

// A schedule placing one layer onto the memory hierarchy: loop order and
// tile extents at the global-buffer (L2) and array (L1) levels, order only
// at the PE level. Kernel dims R and S are never tiled temporally.
struct Mapping {
  LoopOrder l2_order{};
  Extents l2_tile{};
  LoopOrder l1_order{};
  Extents l1_tile{};
  LoopOrder pe_order{};

  bool operator==(const Mapping&) const = default;
};

// Hypercube encoding of a mapping:
//   [l2_importance x6, l2_ratio x4 (C,K,Xp,Yp), l1_importance x6,
//    l1_ratio x4, pe_importance x6]
inline constexpr std::size_t kMapEncodingDims = 26;

// Index-based ablation: each importance block collapses to one knob
// selecting among the 720 loop orders.
//   [l2_index, l2_ratio x4, l1_index, l1_ratio x4, pe_index]
inline constexpr std::size_t kMapIndexEncodingDims = 11;

// The four temporally tileable dims, in the order their ratio knobs appear.
inline constexpr std::array<Dim, 4> kTiledDims = {Dim::C, Dim::K, Dim::XP, Dim::YP};

// Highest importance becomes the outermost loop; ties fall back to
// canonical dim order. Shares its implementation with hwspace::rank_dims.
LoopOrder order_from_importance(const DimMap<double>& importance);

LoopOrder unrank_order(u64 index);  // index in [0, 720)

// Decodes tiling ratios and loop orders. Total on [0,1]^26: clamping makes
// every decode satisfy the Mapping invariants. Tiles of parallel dims are
// raised to the axis lane count (capped by the L2 tile) so the array is fed.
Mapping decode_mapping(const std::vector<double>& enc, const ConvLayer& layer,
                       const AcceleratorConfig& accel);
Mapping decode_mapping_indexed(const std::vector<double>& enc, const ConvLayer& layer,
                               const AcceleratorConfig& accel);

// Derived loop bounds consumed by the cost model.
struct TripCounts {
  Extents l2;             // ceil(extent / l2_tile)
  Extents l1;             // ceil(l2_tile / l1_tile)
  Extents per_pe;         // per-PE sequential extents; ceil residue on parallel dims
  Extents lanes;          // axis size for parallel dims, 1 elsewhere
};

TripCounts trip_counts(const Mapping& mapping, const ConvLayer& layer,
                       const AcceleratorConfig& accel);

std::string serialize_mapping(const Mapping& m);
Mapping parse_mapping(const std::string& text, const std::string& origin);

// Human-readable nested for-loop listing.
std::string pretty_print_loop_nest(const Mapping& m, const ConvLayer& layer,
                                   const AcceleratorConfig& accel);

}  // namespace naas
