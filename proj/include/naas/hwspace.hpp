#pragma once

#include <optional>
#include <string>
#include <vector>

#include "naas/workload.hpp"

namespace naas {

// Resource envelope a search must stay inside: PE budget, total on-chip
// memory (global buffer plus all per-PE scratchpads), and NoC bandwidth.
struct ResourceConstraint {
  std::string name;
  u64 max_pes = 0;
  u64 max_onchip_bytes = 0;
  u64 max_bandwidth = 0;  // bytes per cycle
};

// A concrete accelerator: numeric sizing plus connectivity. The i-th array
// axis spatially unrolls parallel_dims[i].
struct AcceleratorConfig {
  std::string name;
  u64 num_pes = 0;
  u64 l1_bytes = 0;  // private per-PE scratchpad
  u64 l2_bytes = 0;  // shared global buffer
  u64 bandwidth = 0; // bytes per cycle
  std::vector<u64> array_size;     // one entry per array axis, 1 to 3 axes
  std::vector<Dim> parallel_dims;  // pairwise distinct, same length

  std::size_t array_ndim() const { return array_size.size(); }
  u64 total_lanes() const;

  bool operator==(const AcceleratorConfig&) const = default;
};

// How lanes along an axis communicate, determined by the dimension they
// parallelize. Informational; attached to reports.
enum class CommKind { Reduction, Broadcast, Neighbor };
CommKind parallel_semantics(Dim d);
const char* comm_kind_name(CommKind k);

// Unit-hypercube encoding of an accelerator:
//   [pe, l1, l2, bw, ndim, size0, size1, size2, importance x6]
inline constexpr std::size_t kHwEncodingDims = 14;

// Importance decoding: the six dims sorted by descending importance, ties
// broken by canonical dim order.
std::array<Dim, kNumDims> rank_dims(const DimMap<double>& importance);

struct HwDecodeResult {
  std::optional<AcceleratorConfig> config;
  std::string reject_reason;  // set when config is empty

  explicit operator bool() const { return config.has_value(); }
};

// Deterministically decodes a hypercube point into an accelerator obeying
// the search strides (#PEs mod 8, buffers mod 16B, array axes mod 2).
// Returns the failed constraint when no valid config exists at this point.
HwDecodeResult decode_hardware(const std::vector<double>& enc,
                               const ResourceConstraint& constraint);

// Inverse of decode_hardware for points in the decoded range; decoding the
// returned encoding reproduces cfg exactly.
std::vector<double> encode_hardware(const AcceleratorConfig& cfg,
                                    const ResourceConstraint& constraint);

// Index-based ablation encoding: the six importance knobs are replaced by a
// single knob selecting one of the P(6, ndim) ordered dim choices.
//   [pe, l1, l2, bw, ndim, size0, size1, size2, index]
inline constexpr std::size_t kHwIndexEncodingDims = 9;
HwDecodeResult decode_hardware_indexed(const std::vector<double>& enc,
                                       const ResourceConstraint& constraint);

// Sizing-only ablation: numeric knobs [pe, l1, l2, bw] with connectivity
// frozen to a baseline.
inline constexpr std::size_t kHwSizingEncodingDims = 4;
HwDecodeResult decode_hardware_sizing(const std::vector<double>& enc,
                                      const ResourceConstraint& constraint,
                                      const AcceleratorConfig& baseline);

// Full invariant check; returns every violation, not just the first.
std::vector<std::string> validate(const AcceleratorConfig& cfg,
                                  const ResourceConstraint& constraint);

ResourceConstraint load_constraint(const std::string& path);
AcceleratorConfig load_accelerator(const std::string& path);
AcceleratorConfig parse_accelerator(const std::string& text, const std::string& origin);
std::string serialize_accelerator(const AcceleratorConfig& cfg);

}  // namespace naas
