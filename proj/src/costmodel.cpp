#include "naas/costmodel.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace naas {

using nlohmann::json;

const char* tensor_name(TensorKind k) {
  switch (k) {
    case TensorKind::Input: return "input";
    case TensorKind::Weight: return "weight";
    case TensorKind::Output: return "output";
  }
  return "?";
}

bool dim_relevant(TensorKind kind, Dim d) {
  switch (kind) {
    case TensorKind::Input: return d != Dim::K;
    case TensorKind::Weight: return d != Dim::XP && d != Dim::YP;
    case TensorKind::Output: return d == Dim::K || d == Dim::XP || d == Dim::YP;
  }
  return false;
}

u64& LevelAccesses::of(TensorKind k) {
  switch (k) {
    case TensorKind::Input: return input;
    case TensorKind::Weight: return weight;
    default: return output;
  }
}

u64 LevelAccesses::of(TensorKind k) const {
  return const_cast<LevelAccesses*>(this)->of(k);
}

u64 footprint(TensorKind kind, const Extents& tile, u64 stride) {
  switch (kind) {
    case TensorKind::Weight:
      return tile[Dim::C] * tile[Dim::K] * tile[Dim::R] * tile[Dim::S];
    case TensorKind::Output:
      return tile[Dim::K] * tile[Dim::XP] * tile[Dim::YP];
    case TensorKind::Input:
      return tile[Dim::C] * ((tile[Dim::XP] - 1) * stride + tile[Dim::S]) *
             ((tile[Dim::YP] - 1) * stride + tile[Dim::R]);
  }
  return 0;
}

u64 refetch_multiplier(const LoopOrder& order, const Extents& trips, TensorKind kind) {
  // Innermost relevant loop that actually iterates; loops below it cannot
  // change the tensor's tile id.
  int innermost = -1;
  for (int i = static_cast<int>(kNumDims) - 1; i >= 0; --i) {
    if (dim_relevant(kind, order[i]) && trips[order[i]] > 1) {
      innermost = i;
      break;
    }
  }
  if (innermost < 0) return 1;  // tile never changes
  u64 mult = 1;
  for (int i = 0; i < static_cast<int>(kNumDims); ++i) {
    if (dim_relevant(kind, order[i]))
      mult *= trips[order[i]];
    else if (i < innermost)
      mult *= trips[order[i]];
  }
  return mult;
}

namespace {

u64 product(const Extents& e) {
  u64 p = 1;
  for (Dim d : kAllDims) p *= e[d];
  return p;
}

u64 relevant_product(const Extents& trips, TensorKind kind) {
  u64 p = 1;
  for (Dim d : kAllDims)
    if (dim_relevant(kind, d)) p *= trips[d];
  return p;
}

}  // namespace

double capacity_pressure(const AcceleratorConfig& accel, const Mapping& mapping,
                         const ConvLayer& layer, const EnergyModel& em) {
  for (Dim d : kAllDims) {
    if (mapping.l2_tile[d] == 0 || mapping.l1_tile[d] == 0 ||
        mapping.l2_tile[d] > layer.extent[d] || mapping.l1_tile[d] > mapping.l2_tile[d])
      return 1e6;  // structurally broken tiling: worse than any mere overflow
  }
  TripCounts trips = trip_counts(mapping, layer, accel);
  u64 l1_need = 0, l2_need = 0;
  for (TensorKind t : kAllTensors) {
    l1_need += footprint(t, trips.per_pe, layer.stride);
    l2_need += footprint(t, mapping.l2_tile, layer.stride);
  }
  l1_need *= em.bytes_per_element;
  l2_need *= em.bytes_per_element;
  return static_cast<double>(l1_need) / static_cast<double>(std::max<u64>(1, accel.l1_bytes)) +
         static_cast<double>(l2_need) / static_cast<double>(std::max<u64>(1, accel.l2_bytes));
}

EvalResult evaluate(const AcceleratorConfig& accel, const Mapping& mapping,
                    const ConvLayer& layer, const EnergyModel& em) {
  for (Dim d : kAllDims) {
    if (mapping.l2_tile[d] == 0 || mapping.l1_tile[d] == 0)
      return {std::nullopt, "mapping has a zero tile"};
    if (mapping.l2_tile[d] > layer.extent[d] || mapping.l1_tile[d] > mapping.l2_tile[d])
      return {std::nullopt, "mapping tiles exceed their enclosing level"};
  }

  TripCounts trips = trip_counts(mapping, layer, accel);

  // Buffer capacity: every PE holds its slice of all three tiles in L1, and
  // the full array-level tiles must co-reside in L2.
  u64 l1_need = 0;
  for (TensorKind t : kAllTensors) l1_need += footprint(t, trips.per_pe, layer.stride);
  l1_need *= em.bytes_per_element;
  if (l1_need > accel.l1_bytes)
    return {std::nullopt, "L1 capacity exceeded: tile needs " + std::to_string(l1_need) +
                              " B, buffer holds " + std::to_string(accel.l1_bytes) + " B"};
  u64 l2_need = 0;
  for (TensorKind t : kAllTensors) l2_need += footprint(t, mapping.l2_tile, layer.stride);
  l2_need *= em.bytes_per_element;
  if (l2_need > accel.l2_bytes)
    return {std::nullopt, "L2 capacity exceeded: tile needs " + std::to_string(l2_need) +
                              " B, buffer holds " + std::to_string(accel.l2_bytes) + " B"};

  // The array steps in lockstep, so ceil residues cost full iterations.
  u64 l2_steps = product(trips.l2);
  u64 compute = l2_steps * product(trips.l1) * product(trips.per_pe) * layer.groups;

  // Array-wide L1 tile: parallel dims round up to whole lanes.
  Extents l1_array = mapping.l1_tile;
  for (std::size_t i = 0; i < accel.parallel_dims.size(); ++i) {
    Dim p = accel.parallel_dims[i];
    l1_array[p] = accel.array_size[i] * ceil_div(mapping.l1_tile[p], accel.array_size[i]);
  }

  LevelAccesses dram, l2acc, l1acc;
  for (TensorKind t : kAllTensors) {
    u64 mult2 = refetch_multiplier(mapping.l2_order, trips.l2, t);
    u64 fp2 = footprint(t, mapping.l2_tile, layer.stride);
    if (t == TensorKind::Output) {
      // Every residency of an output tile ends in a write-back; a residency
      // that revisits an earlier tile must first read its partial sums back.
      u64 writes = mult2;
      u64 reads = mult2 - relevant_product(trips.l2, t);
      dram.of(t) = (writes + reads) * fp2 * layer.groups;
    } else {
      dram.of(t) = mult2 * fp2 * layer.groups;
    }
    u64 mult1 = refetch_multiplier(mapping.l1_order, trips.l1, t);
    l2acc.of(t) = l2_steps * mult1 * footprint(t, l1_array, layer.stride) * layer.groups;
    l1acc.of(t) = total_macs(layer);  // each MAC touches all three operands
  }

  return {finalize_report(total_macs(layer), compute, dram, l2acc, l1acc, accel, em), ""};
}

CostReport finalize_report(u64 macs, u64 compute_cycles, const LevelAccesses& dram,
                           const LevelAccesses& l2, const LevelAccesses& l1,
                           const AcceleratorConfig& accel, const EnergyModel& em) {
  CostReport r;
  r.total_macs = macs;
  r.compute_cycles = compute_cycles;
  r.dram = dram;
  r.l2 = l2;
  r.l1 = l1;
  r.memory_cycles = ceil_div(dram.total() * em.bytes_per_element, accel.bandwidth);
  r.latency_cycles = std::max(r.compute_cycles, r.memory_cycles);
  r.energy_units = static_cast<double>(macs) * em.e_mac +
                   static_cast<double>(l1.total()) * em.e_l1 +
                   static_cast<double>(l2.total()) * em.e_l2 +
                   static_cast<double>(dram.total()) * em.e_dram;
  r.edp = static_cast<double>(r.latency_cycles) * r.energy_units;
  r.utilization = static_cast<double>(macs) /
                  (static_cast<double>(r.compute_cycles) * static_cast<double>(accel.total_lanes()));
  return r;
}

EnergyModel parse_energy_model(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": parse error: " + e.what());
  }
  EnergyModel em;
  if (doc.contains("e_mac")) em.e_mac = doc.at("e_mac").get<double>();
  if (doc.contains("e_l1")) em.e_l1 = doc.at("e_l1").get<double>();
  if (doc.contains("e_l2")) em.e_l2 = doc.at("e_l2").get<double>();
  if (doc.contains("e_dram")) em.e_dram = doc.at("e_dram").get<double>();
  if (doc.contains("bytes_per_element"))
    em.bytes_per_element = doc.at("bytes_per_element").get<u64>();
  if (em.e_mac <= 0 || em.e_l1 <= 0 || em.e_l2 <= 0 || em.e_dram <= 0 ||
      em.bytes_per_element == 0)
    throw ConfigError(origin + ": energy costs must be positive");
  return em;
}

EnergyModel load_energy_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open energy model");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_energy_model(ss.str(), path);
}

std::string serialize_energy_model(const EnergyModel& em) {
  json doc;
  doc["e_mac"] = em.e_mac;
  doc["e_l1"] = em.e_l1;
  doc["e_l2"] = em.e_l2;
  doc["e_dram"] = em.e_dram;
  doc["bytes_per_element"] = em.bytes_per_element;
  return doc.dump(2) + "\n";
}

std::string serialize_report(const CostReport& r) {
  json doc;
  doc["latency_cycles"] = r.latency_cycles;
  doc["compute_cycles"] = r.compute_cycles;
  doc["memory_cycles"] = r.memory_cycles;
  doc["energy_units"] = r.energy_units;
  doc["edp"] = r.edp;
  doc["utilization"] = r.utilization;
  doc["total_macs"] = r.total_macs;
  for (auto [name, level] : {std::pair{"dram", &r.dram}, {"l2", &r.l2}, {"l1", &r.l1}}) {
    doc["accesses"][name]["input"] = level->input;
    doc["accesses"][name]["weight"] = level->weight;
    doc["accesses"][name]["output"] = level->output;
  }
  return doc.dump(2) + "\n";
}

std::string report_csv_header() {
  return "tag,latency_cycles,compute_cycles,memory_cycles,energy_units,edp,utilization,"
         "dram_input,dram_weight,dram_output,l2_input,l2_weight,l2_output,"
         "l1_input,l1_weight,l1_output";
}

std::string report_csv_row(const std::string& tag, const CostReport& r) {
  std::ostringstream os;
  os << tag << ',' << r.latency_cycles << ',' << r.compute_cycles << ',' << r.memory_cycles
     << ',' << r.energy_units << ',' << r.edp << ',' << r.utilization << ',' << r.dram.input
     << ',' << r.dram.weight << ',' << r.dram.output << ',' << r.l2.input << ','
     << r.l2.weight << ',' << r.l2.output << ',' << r.l1.input << ',' << r.l1.weight << ','
     << r.l1.output;
  return os.str();
}

}  // namespace naas
