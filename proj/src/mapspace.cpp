#include "naas/mapspace.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace naas {

using nlohmann::json;

LoopOrder order_from_importance(const DimMap<double>& importance) {
  return rank_dims(importance);
}

LoopOrder unrank_order(u64 index) {
  std::vector<Dim> pool(kAllDims.begin(), kAllDims.end());
  LoopOrder order{};
  u64 fact = 120;  // 5!
  for (std::size_t j = 0; j < kNumDims; ++j) {
    u64 i = index / fact;
    index %= fact;
    order[j] = pool[i];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
    if (j + 1 < kNumDims) fact /= kNumDims - 1 - j;
  }
  return order;
}

namespace {

u64 round_tile(double ratio, u64 parent) {
  auto t = static_cast<long long>(std::floor(ratio * static_cast<double>(parent) + 0.5));
  return static_cast<u64>(std::clamp<long long>(t, 1, static_cast<long long>(parent)));
}

Mapping decode_tiles(const double* l2_ratio, const double* l1_ratio,
                     const ConvLayer& layer, const AcceleratorConfig& accel) {
  Mapping m;
  m.l2_tile = layer.extent;  // R and S stay at full extent
  m.l1_tile = layer.extent;
  for (std::size_t i = 0; i < kTiledDims.size(); ++i) {
    Dim d = kTiledDims[i];
    m.l2_tile[d] = round_tile(l2_ratio[i], layer.extent[d]);
    m.l1_tile[d] = round_tile(l1_ratio[i], m.l2_tile[d]);
  }
  // Feeding rule: give every parallel dim at least one element per lane.
  for (std::size_t i = 0; i < accel.parallel_dims.size(); ++i) {
    Dim p = accel.parallel_dims[i];
    m.l1_tile[p] = std::max(m.l1_tile[p], std::min(accel.array_size[i], m.l2_tile[p]));
  }
  return m;
}

}  // namespace

Mapping decode_mapping(const std::vector<double>& enc, const ConvLayer& layer,
                       const AcceleratorConfig& accel) {
  Mapping m = decode_tiles(enc.data() + 6, enc.data() + 16, layer, accel);
  DimMap<double> imp;
  for (std::size_t i = 0; i < kNumDims; ++i) imp[kAllDims[i]] = enc[i];
  m.l2_order = order_from_importance(imp);
  for (std::size_t i = 0; i < kNumDims; ++i) imp[kAllDims[i]] = enc[10 + i];
  m.l1_order = order_from_importance(imp);
  for (std::size_t i = 0; i < kNumDims; ++i) imp[kAllDims[i]] = enc[20 + i];
  m.pe_order = order_from_importance(imp);
  return m;
}

Mapping decode_mapping_indexed(const std::vector<double>& enc, const ConvLayer& layer,
                               const AcceleratorConfig& accel) {
  Mapping m = decode_tiles(enc.data() + 1, enc.data() + 6, layer, accel);
  auto to_index = [](double knob) {
    return std::min<u64>(719, static_cast<u64>(knob * 720.0));
  };
  m.l2_order = unrank_order(to_index(enc[0]));
  m.l1_order = unrank_order(to_index(enc[5]));
  m.pe_order = unrank_order(to_index(enc[10]));
  return m;
}

TripCounts trip_counts(const Mapping& mapping, const ConvLayer& layer,
                       const AcceleratorConfig& accel) {
  TripCounts t;
  for (Dim d : kAllDims) {
    t.l2[d] = ceil_div(layer.extent[d], mapping.l2_tile[d]);
    t.l1[d] = ceil_div(mapping.l2_tile[d], mapping.l1_tile[d]);
    t.per_pe[d] = mapping.l1_tile[d];
    t.lanes[d] = 1;
  }
  for (std::size_t i = 0; i < accel.parallel_dims.size(); ++i) {
    Dim p = accel.parallel_dims[i];
    t.lanes[p] = accel.array_size[i];
    t.per_pe[p] = ceil_div(mapping.l1_tile[p], accel.array_size[i]);
  }
  return t;
}

namespace {

json order_to_json(const LoopOrder& o) {
  json arr = json::array();
  for (Dim d : o) arr.push_back(dim_name(d));
  return arr;
}

json tiles_to_json(const Extents& t) {
  json obj;
  for (Dim d : kAllDims) obj[dim_name(d)] = t[d];
  return obj;
}

LoopOrder order_from_json(const json& arr, const std::string& origin) {
  if (!arr.is_array() || arr.size() != kNumDims)
    throw ConfigError(origin + ": loop order must list all six dims");
  LoopOrder o{};
  for (std::size_t i = 0; i < kNumDims; ++i) o[i] = dim_from_name(arr[i].get<std::string>());
  return o;
}

Extents tiles_from_json(const json& obj, const std::string& origin) {
  Extents t{};
  for (Dim d : kAllDims) {
    if (!obj.contains(dim_name(d)))
      throw ConfigError(origin + ": tile map missing dim " + dim_name(d));
    t[d] = obj.at(dim_name(d)).get<u64>();
  }
  return t;
}

}  // namespace

std::string serialize_mapping(const Mapping& m) {
  json doc;
  doc["l2"]["order"] = order_to_json(m.l2_order);
  doc["l2"]["tiles"] = tiles_to_json(m.l2_tile);
  doc["l1"]["order"] = order_to_json(m.l1_order);
  doc["l1"]["tiles"] = tiles_to_json(m.l1_tile);
  doc["pe"]["order"] = order_to_json(m.pe_order);
  return doc.dump(2) + "\n";
}

Mapping parse_mapping(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": parse error: " + e.what());
  }
  Mapping m;
  m.l2_order = order_from_json(doc.at("l2").at("order"), origin);
  m.l2_tile = tiles_from_json(doc.at("l2").at("tiles"), origin);
  m.l1_order = order_from_json(doc.at("l1").at("order"), origin);
  m.l1_tile = tiles_from_json(doc.at("l1").at("tiles"), origin);
  m.pe_order = order_from_json(doc.at("pe").at("order"), origin);
  return m;
}

std::string pretty_print_loop_nest(const Mapping& m, const ConvLayer& layer,
                                   const AcceleratorConfig& accel) {
  TripCounts t = trip_counts(m, layer, accel);
  std::ostringstream os;
  os << "// layer " << layer.name;
  if (layer.groups > 1) os << "  (x" << layer.groups << " groups)";
  os << "\n";
  int indent = 0;
  auto line = [&](const std::string& s) {
    for (int i = 0; i < indent; ++i) os << "  ";
    os << s << "\n";
  };
  for (Dim d : m.l2_order)
    if (t.l2[d] > 1) {
      line("for " + std::string(dim_name(d)) + "2 in [0, " + std::to_string(t.l2[d]) +
           ")  // DRAM -> L2");
      ++indent;
    }
  for (Dim d : m.l1_order)
    if (t.l1[d] > 1) {
      line("for " + std::string(dim_name(d)) + "1 in [0, " + std::to_string(t.l1[d]) +
           ")  // L2 -> array");
      ++indent;
    }
  for (std::size_t i = 0; i < accel.parallel_dims.size(); ++i) {
    Dim p = accel.parallel_dims[i];
    line("par-for " + std::string(dim_name(p)) + " across " +
         std::to_string(accel.array_size[i]) + " lanes (" +
         comm_kind_name(parallel_semantics(p)) + ")");
    ++indent;
  }
  for (Dim d : m.pe_order)
    if (t.per_pe[d] > 1) {
      line("for " + std::string(dim_name(d)) + "0 in [0, " + std::to_string(t.per_pe[d]) +
           ")  // PE");
      ++indent;
    }
  line("mac");
  return os.str();
}

}  // namespace naas
