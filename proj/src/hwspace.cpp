#include "naas/hwspace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace naas {

using nlohmann::json;

u64 AcceleratorConfig::total_lanes() const {
  u64 p = 1;
  for (u64 a : array_size) p *= a;
  return p;
}

CommKind parallel_semantics(Dim d) {
  switch (d) {
    case Dim::C:
    case Dim::R:
    case Dim::S:
      return CommKind::Reduction;  // partial sums combined across lanes
    case Dim::K:
      return CommKind::Broadcast;  // inputs broadcast to all lanes
    case Dim::XP:
    case Dim::YP:
      return CommKind::Neighbor;   // weights passed along neighboring lanes
  }
  return CommKind::Neighbor;
}

const char* comm_kind_name(CommKind k) {
  switch (k) {
    case CommKind::Reduction: return "reduction";
    case CommKind::Broadcast: return "broadcast";
    case CommKind::Neighbor:  return "neighbor";
  }
  return "?";
}

std::array<Dim, kNumDims> rank_dims(const DimMap<double>& importance) {
  std::array<Dim, kNumDims> order = kAllDims;
  std::stable_sort(order.begin(), order.end(),
                   [&](Dim a, Dim b) { return importance[a] > importance[b]; });
  return order;
}

namespace {

// Snaps x*maxv onto the stride grid: smallest value is `stride`, largest is
// the largest multiple of `stride` not exceeding maxv. Returns 0 when even
// one stride does not fit.
u64 quantize(double x, u64 stride, u64 maxv) {
  u64 top = maxv / stride;
  if (top == 0) return 0;
  auto q = static_cast<long long>(std::llround(x * static_cast<double>(maxv) /
                                               static_cast<double>(stride)));
  q = std::clamp<long long>(q, 1, static_cast<long long>(top));
  return stride * static_cast<u64>(q);
}

struct NumericKnobs {
  u64 num_pes, l1, l2, bw;
};

// Decodes the four numeric knobs shared by every encoding variant. L2
// absorbs rounding shortfalls: the per-PE scratchpad allocation is fixed
// first and the global buffer shrinks to honor the total budget.
// Memory-split and bandwidth decode shared by every encoding variant;
// expects out.num_pes to be set already.
bool decode_memory_bw(const double* k, const ResourceConstraint& c, NumericKnobs& out,
                      std::string& reason) {
  // k[1] is the fraction of the on-chip budget granted to all L1s together.
  u64 l1 = quantize(k[1] / static_cast<double>(out.num_pes), 16, c.max_onchip_bytes);
  if (l1 == 0) {
    reason = "on-chip memory budget below the stride of 16B";
    return false;
  }
  if (out.num_pes * l1 + 16 > c.max_onchip_bytes) {
    reason = "per-PE L1 allocation leaves the global buffer below 16B";
    return false;
  }
  u64 l2 = quantize(k[2], 16, c.max_onchip_bytes);
  u64 l2_avail = ((c.max_onchip_bytes - out.num_pes * l1) / 16) * 16;
  out.l1 = l1;
  out.l2 = std::min(l2, l2_avail);
  out.bw = quantize(k[3], 1, c.max_bandwidth);
  if (out.bw == 0) {
    reason = "bandwidth budget below 1 byte/cycle";
    return false;
  }
  return true;
}

bool decode_numeric(const double* k, const ResourceConstraint& c, NumericKnobs& out,
                    std::string& reason) {
  out.num_pes = quantize(k[0], 8, c.max_pes);
  if (out.num_pes == 0) {
    reason = "PE budget below the stride of 8";
    return false;
  }
  return decode_memory_bw(k, c, out, reason);
}

std::size_t decode_ndim(double knob) {
  auto n = 1 + static_cast<long long>(std::floor(knob * 3.0));
  return static_cast<std::size_t>(std::clamp<long long>(n, 1, 3));
}

// Array axes quantized to stride 2; the last axis shrinks until the array
// fits in the PE budget.
bool decode_array(const double* size_knobs, std::size_t ndim, u64 num_pes,
                  std::vector<u64>& out, std::string& reason) {
  out.clear();
  for (std::size_t i = 0; i < ndim; ++i) {
    u64 a = quantize(size_knobs[i], 2, num_pes);
    if (a == 0) {
      reason = "array axis would shrink below 2";
      return false;
    }
    out.push_back(a);
  }
  u64 others = 1;
  for (std::size_t i = 0; i + 1 < ndim; ++i) others *= out[i];
  u64 max_last = num_pes / others / 2;
  if (max_last == 0) {
    reason = "array axis would shrink below 2";
    return false;
  }
  out.back() = std::min(out.back(), 2 * max_last);
  return true;
}

u64 permutations(u64 n, u64 k) {
  u64 p = 1;
  for (u64 i = 0; i < k; ++i) p *= n - i;
  return p;
}

// Unranks the idx-th ordered selection of k dims out of six.
std::vector<Dim> unrank_dim_selection(u64 idx, std::size_t k) {
  std::vector<Dim> pool(kAllDims.begin(), kAllDims.end());
  std::vector<Dim> sel;
  for (std::size_t j = 0; j < k; ++j) {
    u64 per = permutations(pool.size() - 1, k - j - 1);
    u64 i = idx / per;
    idx %= per;
    sel.push_back(pool[i]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
  }
  return sel;
}

}  // namespace

HwDecodeResult decode_hardware(const std::vector<double>& enc,
                               const ResourceConstraint& constraint) {
  HwDecodeResult res;
  if (enc.size() != kHwEncodingDims) {
    res.reject_reason = "hardware encoding must have 14 entries";
    return res;
  }
  NumericKnobs nk;
  if (!decode_numeric(enc.data(), constraint, nk, res.reject_reason)) return res;
  std::size_t ndim = decode_ndim(enc[4]);
  AcceleratorConfig cfg;
  if (!decode_array(enc.data() + 5, ndim, nk.num_pes, cfg.array_size, res.reject_reason))
    return res;
  DimMap<double> importance;
  for (std::size_t i = 0; i < kNumDims; ++i) importance[kAllDims[i]] = enc[8 + i];
  auto ranked = rank_dims(importance);
  cfg.parallel_dims.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(ndim));
  cfg.num_pes = nk.num_pes;
  cfg.l1_bytes = nk.l1;
  cfg.l2_bytes = nk.l2;
  cfg.bandwidth = nk.bw;
  res.config = std::move(cfg);
  return res;
}

std::vector<double> encode_hardware(const AcceleratorConfig& cfg,
                                    const ResourceConstraint& constraint) {
  std::vector<double> enc(kHwEncodingDims, 0.0);
  enc[0] = static_cast<double>(cfg.num_pes) / static_cast<double>(constraint.max_pes);
  enc[1] = static_cast<double>(cfg.num_pes * cfg.l1_bytes) /
           static_cast<double>(constraint.max_onchip_bytes);
  enc[2] = static_cast<double>(cfg.l2_bytes) / static_cast<double>(constraint.max_onchip_bytes);
  enc[3] = static_cast<double>(cfg.bandwidth) / static_cast<double>(constraint.max_bandwidth);
  enc[4] = (static_cast<double>(cfg.array_ndim()) - 0.5) / 3.0;
  for (std::size_t i = 0; i < cfg.array_ndim(); ++i)
    enc[5 + i] = static_cast<double>(cfg.array_size[i]) / static_cast<double>(cfg.num_pes);
  // Chosen dims get the highest importance in axis order; the rest follow in
  // canonical order strictly below them.
  for (std::size_t i = 0; i < cfg.parallel_dims.size(); ++i)
    enc[8 + static_cast<std::size_t>(cfg.parallel_dims[i])] = 1.0 - 0.1 * static_cast<double>(i);
  double rest = 0.5;
  for (Dim d : kAllDims) {
    bool chosen = std::find(cfg.parallel_dims.begin(), cfg.parallel_dims.end(), d) !=
                  cfg.parallel_dims.end();
    if (!chosen) {
      enc[8 + static_cast<std::size_t>(d)] = rest;
      rest -= 0.05;
    }
  }
  return enc;
}

HwDecodeResult decode_hardware_indexed(const std::vector<double>& enc,
                                       const ResourceConstraint& constraint) {
  HwDecodeResult res;
  if (enc.size() != kHwIndexEncodingDims) {
    res.reject_reason = "indexed hardware encoding must have 9 entries";
    return res;
  }
  NumericKnobs nk;
  if (!decode_numeric(enc.data(), constraint, nk, res.reject_reason)) return res;
  std::size_t ndim = decode_ndim(enc[4]);
  AcceleratorConfig cfg;
  if (!decode_array(enc.data() + 5, ndim, nk.num_pes, cfg.array_size, res.reject_reason))
    return res;
  u64 total = permutations(kNumDims, ndim);
  u64 idx = std::min<u64>(total - 1, static_cast<u64>(enc[8] * static_cast<double>(total)));
  cfg.parallel_dims = unrank_dim_selection(idx, ndim);
  cfg.num_pes = nk.num_pes;
  cfg.l1_bytes = nk.l1;
  cfg.l2_bytes = nk.l2;
  cfg.bandwidth = nk.bw;
  res.config = std::move(cfg);
  return res;
}

HwDecodeResult decode_hardware_sizing(const std::vector<double>& enc,
                                      const ResourceConstraint& constraint,
                                      const AcceleratorConfig& baseline) {
  HwDecodeResult res;
  if (enc.size() != kHwSizingEncodingDims) {
    res.reject_reason = "sizing-only hardware encoding must have 4 entries";
    return res;
  }
  AcceleratorConfig cfg;
  cfg.array_size = baseline.array_size;
  cfg.parallel_dims = baseline.parallel_dims;
  // The frozen array fixes a PE floor, so the knob spans [lanes, max] rounded
  // to the stride; quantizing over the full budget instead would make tight
  // baselines (lanes == max_pes) nearly unsampleable.
  u64 floor_pes = ((std::max<u64>(cfg.total_lanes(), 8) + 7) / 8) * 8;
  if (floor_pes > constraint.max_pes) {
    res.reject_reason = "frozen array exceeds the PE budget";
    return res;
  }
  u64 steps = (constraint.max_pes - floor_pes) / 8;
  auto q = static_cast<long long>(std::llround(enc[0] * static_cast<double>(steps)));
  NumericKnobs nk;
  nk.num_pes = floor_pes + 8 * static_cast<u64>(std::clamp<long long>(
                                   q, 0, static_cast<long long>(steps)));
  if (!decode_memory_bw(enc.data(), constraint, nk, res.reject_reason)) return res;
  cfg.num_pes = nk.num_pes;
  cfg.l1_bytes = nk.l1;
  cfg.l2_bytes = nk.l2;
  cfg.bandwidth = nk.bw;
  res.config = std::move(cfg);
  return res;
}

std::vector<std::string> validate(const AcceleratorConfig& cfg,
                                  const ResourceConstraint& constraint) {
  std::vector<std::string> v;
  if (cfg.num_pes == 0) v.push_back("num_pes must be positive");
  if (cfg.l1_bytes == 0) v.push_back("l1_bytes must be positive");
  if (cfg.l2_bytes == 0) v.push_back("l2_bytes must be positive");
  if (cfg.bandwidth == 0) v.push_back("bandwidth must be positive");
  if (cfg.array_ndim() < 1 || cfg.array_ndim() > 3)
    v.push_back("array must have 1 to 3 axes");
  if (cfg.parallel_dims.size() != cfg.array_ndim())
    v.push_back("parallel dims and array axes must correspond one to one");
  for (std::size_t i = 0; i < cfg.parallel_dims.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.parallel_dims.size(); ++j)
      if (cfg.parallel_dims[i] == cfg.parallel_dims[j]) {
        v.push_back("duplicate parallel dims");
        i = cfg.parallel_dims.size();
        break;
      }
  if (cfg.total_lanes() > cfg.num_pes) v.push_back("array exceeds PEs");
  if (cfg.num_pes > constraint.max_pes) v.push_back("num_pes exceeds constraint");
  if (cfg.l2_bytes + cfg.num_pes * cfg.l1_bytes > constraint.max_onchip_bytes)
    v.push_back("on-chip memory exceeds constraint");
  if (cfg.bandwidth > constraint.max_bandwidth) v.push_back("bandwidth exceeds constraint");
  if (cfg.num_pes % 8 != 0) v.push_back("num_pes must be a multiple of 8");
  if (cfg.l1_bytes % 16 != 0) v.push_back("l1_bytes must be a multiple of 16");
  if (cfg.l2_bytes % 16 != 0) v.push_back("l2_bytes must be a multiple of 16");
  for (u64 a : cfg.array_size)
    if (a % 2 != 0) {
      v.push_back("array sizes must be multiples of 2");
      break;
    }
  return v;
}

namespace {

u64 require_count(const json& j, const char* field, const std::string& origin) {
  if (!j.contains(field))
    throw ConfigError(origin + ": missing field " + field);
  if (!j.at(field).is_number_integer() || j.at(field).get<std::int64_t>() <= 0)
    throw ConfigError(origin + ": field " + std::string(field) +
                      " must be a positive integer");
  return j.at(field).get<u64>();
}

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": parse error: " + e.what());
  }
}

}  // namespace

ResourceConstraint load_constraint(const std::string& path) {
  json doc = parse_file(path);
  ResourceConstraint c;
  c.name = doc.value("name", std::string());
  c.max_pes = require_count(doc, "max_pes", path);
  c.max_onchip_bytes = require_count(doc, "max_onchip_bytes", path);
  c.max_bandwidth = require_count(doc, "max_bandwidth", path);
  return c;
}

namespace {

AcceleratorConfig accelerator_from_json(const json& doc, const std::string& origin) {
  AcceleratorConfig cfg;
  cfg.name = doc.value("name", std::string());
  cfg.num_pes = require_count(doc, "num_pes", origin);
  cfg.l1_bytes = require_count(doc, "l1_bytes", origin);
  cfg.l2_bytes = require_count(doc, "l2_bytes", origin);
  cfg.bandwidth = require_count(doc, "bandwidth", origin);
  if (!doc.contains("array_size") || !doc["array_size"].is_array())
    throw ConfigError(origin + ": missing array field array_size");
  for (const json& a : doc["array_size"]) cfg.array_size.push_back(a.get<u64>());
  if (!doc.contains("parallel_dims") || !doc["parallel_dims"].is_array())
    throw ConfigError(origin + ": missing array field parallel_dims");
  for (const json& d : doc["parallel_dims"])
    cfg.parallel_dims.push_back(dim_from_name(d.get<std::string>()));
  if (cfg.parallel_dims.size() != cfg.array_size.size())
    throw ConfigError(origin + ": parallel_dims and array_size lengths differ");
  return cfg;
}

}  // namespace

AcceleratorConfig load_accelerator(const std::string& path) {
  return accelerator_from_json(parse_file(path), path);
}

AcceleratorConfig parse_accelerator(const std::string& text, const std::string& origin) {
  try {
    return accelerator_from_json(json::parse(text), origin);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": parse error: " + e.what());
  }
}

std::string serialize_accelerator(const AcceleratorConfig& cfg) {
  json doc;
  doc["name"] = cfg.name;
  doc["num_pes"] = cfg.num_pes;
  doc["l1_bytes"] = cfg.l1_bytes;
  doc["l2_bytes"] = cfg.l2_bytes;
  doc["bandwidth"] = cfg.bandwidth;
  doc["array_size"] = cfg.array_size;
  json dims = json::array();
  for (Dim d : cfg.parallel_dims) dims.push_back(dim_name(d));
  doc["parallel_dims"] = std::move(dims);
  json semantics = json::object();
  for (Dim d : cfg.parallel_dims)
    semantics[dim_name(d)] = comm_kind_name(parallel_semantics(d));
  doc["parallel_semantics"] = std::move(semantics);
  return doc.dump(2) + "\n";
}

}  // namespace naas
