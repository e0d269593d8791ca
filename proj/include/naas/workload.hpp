#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "naas/common.hpp"

namespace naas {

// The six convolution loop dimensions, in canonical order. The canonical
// order breaks every importance tie in the encoders, so searches replay
// identically across runs.
enum class Dim : std::uint8_t { C = 0, K, R, S, XP, YP };

inline constexpr std::size_t kNumDims = 6;
inline constexpr std::array<Dim, kNumDims> kAllDims = {Dim::C,  Dim::K,  Dim::R,
                                                       Dim::S,  Dim::XP, Dim::YP};

const char* dim_name(Dim d);
Dim dim_from_name(const std::string& name);  // throws ConfigError on unknown

// Per-dimension table indexed by Dim.
template <typename T>
struct DimMap {
  std::array<T, kNumDims> v{};
  T& operator[](Dim d) { return v[static_cast<std::size_t>(d)]; }
  const T& operator[](Dim d) const { return v[static_cast<std::size_t>(d)]; }
  bool operator==(const DimMap&) const = default;
};

using Extents = DimMap<u64>;

inline Extents make_extents(u64 c, u64 k, u64 r, u64 s, u64 xp, u64 yp) {
  Extents e;
  e[Dim::C] = c;
  e[Dim::K] = k;
  e[Dim::R] = r;
  e[Dim::S] = s;
  e[Dim::XP] = xp;
  e[Dim::YP] = yp;
  return e;
}

// One convolution workload. Extents are per-group trip counts; grouped and
// depthwise convolutions carry the group count as a multiplier. Input
// spatial sizes are derived, never stored.
struct ConvLayer {
  std::string name;
  Extents extent;   // all entries >= 1
  u64 stride = 1;
  u64 groups = 1;

  u64 in_w() const { return (extent[Dim::XP] - 1) * stride + extent[Dim::S]; }
  u64 in_h() const { return (extent[Dim::YP] - 1) * stride + extent[Dim::R]; }

  // Key identifying cost-equivalent layers (everything but the name).
  std::string shape_key() const;

  bool operator==(const ConvLayer&) const = default;
};

struct Network {
  std::string name;
  std::vector<ConvLayer> layers;  // non-empty

  bool operator==(const Network&) const = default;
};

// Total multiply-accumulates: product of the six extents times groups.
u64 total_macs(const ConvLayer& layer);

// Parses a network description file. Non-convolution layers are skipped;
// a note per skipped layer is appended to *warnings when provided.
Network load_network(const std::string& path, std::vector<std::string>* warnings = nullptr);
Network parse_network(const std::string& text, const std::string& origin,
                      std::vector<std::string>* warnings = nullptr);

std::string serialize_network(const Network& net);

// Checks ConvLayer/Network invariants; throws ConfigError naming the layer
// and field on violation.
void validate_network(const Network& net, const std::string& origin);

}  // namespace naas
