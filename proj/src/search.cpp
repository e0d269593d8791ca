#include "naas/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <sstream>

#include <json.hpp>

namespace naas {

using nlohmann::json;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Fitness floor for capacity-invalid mappings. Any real EDP at desk scale is
// far below this, so valid candidates always out-rank invalid ones; the
// pressure factor on top orders the invalid ones by overflow severity.
constexpr double kCapacityPenalty = 1e30;

// Initial sampling spread for every search over encodings. The good tilings
// and sizings usually sit at the faces of the unit cube (full-extent tiles,
// maxed-out arrays); with the conservative 0.1 default the first generations
// never reach them and the distribution can only contract, so the search
// stalls in whatever basin surrounds the cube's center.
constexpr double kSearchInitSigma = 0.3;
}

SearchMode search_mode_from_name(const std::string& name) {
  if (name == "full") return SearchMode::Full;
  if (name == "sizing-only") return SearchMode::SizingOnly;
  if (name == "index-encoding") return SearchMode::IndexEncoding;
  if (name == "random-baseline") return SearchMode::RandomBaseline;
  throw ConfigError("unknown search mode '" + name +
                    "' (expected full|sizing-only|index-encoding|random-baseline)");
}

const char* search_mode_name(SearchMode m) {
  switch (m) {
    case SearchMode::Full: return "full";
    case SearchMode::SizingOnly: return "sizing-only";
    case SearchMode::IndexEncoding: return "index-encoding";
    case SearchMode::RandomBaseline: return "random-baseline";
  }
  return "?";
}

double geomean(const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("geomean of an empty list");
  double log_sum = 0;
  for (double v : values) {
    if (!(v > 0)) throw ConfigError("geomean needs positive values");
    log_sum += std::log(v);
  }
  return std::exp(log_sum / static_cast<double>(values.size()));
}

namespace {

// Greedy refinement of the tiling ratios, one dim at a time. The EDP surface
// over the ratio knobs is close to coordinate-wise monotone (shrinking a trip
// count helps or is neutral as long as the tile still fits), so a few
// deterministic grid sweeps walk from whatever basin the population search
// settled in to the nearby optimum — the distribution itself rarely commits to
// full-extent tiles because they live at the very faces of the cube. The L2
// and L1 knobs of a dim are swept jointly: growing an L2 tile often overflows
// the array buffer unless the L1 ratio drops with it, so the single-knob moves
// in between can be uphill. Orders are left to the population search; they are
// frequently cost-transparent anyway.
void polish_ratio_knobs(std::vector<double>& enc, double& fitness,
                        const std::function<double(const std::vector<double>&)>& score,
                        bool index_encoding) {
  const std::size_t l2_base = index_encoding ? 1 : 6;
  const std::size_t l1_base = index_encoding ? 6 : 16;
  for (int sweep = 0; sweep < 4; ++sweep) {
    bool improved = false;
    for (std::size_t dim = 0; dim < kTiledDims.size(); ++dim) {
      const std::size_t k2 = l2_base + dim;
      const std::size_t k1 = l1_base + dim;
      double best2 = enc[k2], best1 = enc[k1];
      for (int s2 = 0; s2 <= 10; ++s2)
        for (int s1 = 0; s1 <= 10; ++s1) {
          enc[k2] = 0.1 * s2;
          enc[k1] = 0.1 * s1;
          double f = score(enc);
          if (f < fitness) {
            fitness = f;
            best2 = enc[k2];
            best1 = enc[k1];
            improved = true;
          }
        }
      enc[k2] = best2;
      enc[k1] = best1;
    }
    if (!improved) break;
  }
}

}  // namespace

MappingResult search_mapping(const AcceleratorConfig& accel, const ConvLayer& layer,
                             const SearchBudget& budget, u64 seed, bool index_encoding) {
  auto decode = [&](const std::vector<double>& enc) {
    return index_encoding ? decode_mapping_indexed(enc, layer, accel)
                          : decode_mapping(enc, layer, accel);
  };
  auto score = [&](const std::vector<double>& enc) {
    Mapping m = decode(enc);
    EvalResult r = evaluate(accel, m, layer, budget.energy);
    if (r) return r->edp;
    // Graded infeasibility: every over-capacity mapping scores worse than
    // any valid one, but less-overflowing ones rank better, so the
    // optimizer can walk into the feasible region even when the initial
    // distribution produces no valid tile sizes at all (large layers on
    // small buffers).
    return kCapacityPenalty * capacity_pressure(accel, m, layer, budget.energy);
  };
  MinimizeOptions opt;
  opt.dim = index_encoding ? kMapIndexEncodingDims : kMapEncodingDims;
  opt.lambda = budget.map_population;
  opt.generations = budget.map_generations;
  opt.seed = seed;
  opt.max_rejections = budget.max_rejections;
  opt.workers = 1;  // parallelism lives at the hardware-population level
  opt.init_sigma = kSearchInitSigma;

  auto result = es_minimize(score, opt);
  if (result.best_vector.empty() || !(result.best_fitness < kCapacityPenalty))
    throw InfeasibleError("no valid mapping found for layer " + layer.name +
                          " within the search budget (buffers too small?)");
  polish_ratio_knobs(result.best_vector, result.best_fitness, score, index_encoding);

  Mapping best = decode(result.best_vector);
  EvalResult rep = evaluate(accel, best, layer, budget.energy);
  if (!rep) throw InfeasibleError("internal: winning mapping failed re-evaluation");
  return {best, *rep, std::move(result.history)};
}

MappingResult exhaustive_best_mapping(const AcceleratorConfig& accel, const ConvLayer& layer,
                                      const EnergyModel& em) {
  // (l2, l1) tile pairs per tileable dim; R and S stay at full extent.
  struct TilePair {
    u64 l2, l1;
  };
  std::array<std::vector<TilePair>, kTiledDims.size()> pairs;
  u64 combinations = 1;
  for (std::size_t i = 0; i < kTiledDims.size(); ++i) {
    u64 extent = layer.extent[kTiledDims[i]];
    for (u64 t2 = 1; t2 <= extent; ++t2)
      for (u64 t1 = 1; t1 <= t2; ++t1) pairs[i].push_back({t2, t1});
    combinations *= pairs[i].size();
  }

  std::vector<Dim> moving;
  for (Dim d : kTiledDims)
    if (layer.extent[d] > 1) moving.push_back(d);
  u64 perms = 1;
  for (std::size_t n = 2; n <= moving.size(); ++n) perms *= n;
  if (combinations * perms * perms > 20'000'000)
    throw ConfigError("mapping space of layer " + layer.name +
                      " is too large to enumerate exhaustively");

  auto order_for = [&](const std::vector<Dim>& head) {
    LoopOrder order{};
    std::size_t k = 0;
    for (Dim d : head) order[k++] = d;
    for (Dim d : kAllDims)
      if (std::find(head.begin(), head.end(), d) == head.end()) order[k++] = d;
    return order;
  };

  std::optional<MappingResult> best;
  std::array<std::size_t, kTiledDims.size()> sel{};
  bool tiles_left = true;
  while (tiles_left) {
    Mapping m;
    m.l2_tile = layer.extent;
    m.l1_tile = layer.extent;
    for (std::size_t i = 0; i < kTiledDims.size(); ++i) {
      m.l2_tile[kTiledDims[i]] = pairs[i][sel[i]].l2;
      m.l1_tile[kTiledDims[i]] = pairs[i][sel[i]].l1;
    }
    for (std::size_t i = 0; i < accel.parallel_dims.size(); ++i) {
      Dim p = accel.parallel_dims[i];
      m.l1_tile[p] = std::max(m.l1_tile[p], std::min(accel.array_size[i], m.l2_tile[p]));
    }
    m.pe_order = order_for({});

    std::vector<Dim> outer = moving;
    do {
      m.l2_order = order_for(outer);
      std::vector<Dim> inner = moving;
      do {
        m.l1_order = order_for(inner);
        EvalResult r = evaluate(accel, m, layer, em);
        if (r && (!best || r->edp < best->report.edp)) best = MappingResult{m, *r, {}};
      } while (std::next_permutation(inner.begin(), inner.end()));
    } while (std::next_permutation(outer.begin(), outer.end()));

    tiles_left = false;
    for (std::size_t i = kTiledDims.size(); i-- > 0;) {
      if (++sel[i] < pairs[i].size()) {
        tiles_left = true;
        break;
      }
      sel[i] = 0;
    }
  }
  if (!best)
    throw InfeasibleError("no feasible mapping exists for layer " + layer.name +
                          " on this accelerator");
  return *best;
}

AcceleratorReward evaluate_accelerator(const AcceleratorConfig& accel,
                                       const std::vector<Network>& benchmarks,
                                       const SearchBudget& budget, u64 seed,
                                       bool index_encoding) {
  AcceleratorReward out;
  std::map<std::string, MappingResult> by_shape;
  std::vector<double> edps;
  for (const Network& net : benchmarks) {
    BenchmarkResult br;
    br.benchmark = net.name;
    double edp_sum = 0, latency_sum = 0, energy_sum = 0;
    for (const ConvLayer& layer : net.layers) {
      std::string key = layer.shape_key();
      auto it = by_shape.find(key);
      if (it == by_shape.end()) {
        try {
          it = by_shape
                   .emplace(key, search_mapping(accel, layer, budget,
                                                derive_seed(seed, key), index_encoding))
                   .first;
        } catch (const InfeasibleError&) {
          return {kInf, {}};  // candidate cannot run this benchmark at all
        }
      }
      br.layers.push_back({layer.name, it->second.mapping, it->second.report});
      edp_sum += it->second.report.edp;
      latency_sum += static_cast<double>(it->second.report.latency_cycles);
      energy_sum += it->second.report.energy_units;
    }
    br.edp = budget.sum_edp ? edp_sum : latency_sum * energy_sum;
    edps.push_back(br.edp);
    out.benchmarks.push_back(std::move(br));
  }
  out.geomean_edp = geomean(edps);
  return out;
}

namespace {

// Re-prices the winning candidate with a larger per-layer search; falls back
// to the search-time budget if the longer run somehow strands a layer.
AcceleratorReward final_reward(const AcceleratorConfig& accel,
                               const std::vector<Network>& benchmarks,
                               const SearchBudget& budget, u64 map_seed,
                               bool index_encoding) {
  SearchBudget boosted = budget;
  boosted.map_population *= 2;
  boosted.map_generations *= 2;
  AcceleratorReward r = evaluate_accelerator(accel, benchmarks, boosted, map_seed,
                                             index_encoding);
  if (std::isfinite(r.geomean_edp)) return r;
  return evaluate_accelerator(accel, benchmarks, budget, map_seed, index_encoding);
}

}  // namespace

SearchResult search_accelerator(const ResourceConstraint& constraint,
                                const std::vector<Network>& benchmarks,
                                const SearchBudget& budget, SearchMode mode,
                                const AcceleratorConfig* sizing_baseline) {
  if (benchmarks.empty()) throw ConfigError("accelerator search needs at least one benchmark");
  if (mode == SearchMode::SizingOnly && sizing_baseline == nullptr)
    throw ConfigError("sizing-only mode needs a baseline accelerator for connectivity");

  bool index_encoding = mode == SearchMode::IndexEncoding;
  auto decode = [&](const std::vector<double>& enc) -> HwDecodeResult {
    switch (mode) {
      case SearchMode::SizingOnly:
        return decode_hardware_sizing(enc, constraint, *sizing_baseline);
      case SearchMode::IndexEncoding:
        return decode_hardware_indexed(enc, constraint);
      default:
        return decode_hardware(enc, constraint);
    }
  };

  u64 map_seed = derive_seed(budget.seed, "map");
  MinimizeOptions opt;
  opt.dim = mode == SearchMode::SizingOnly ? kHwSizingEncodingDims
            : index_encoding              ? kHwIndexEncodingDims
                                          : kHwEncodingDims;
  opt.lambda = budget.hw_population;
  opt.generations = budget.hw_generations;
  opt.seed = budget.seed;
  opt.uniform = mode == SearchMode::RandomBaseline;
  opt.max_rejections = budget.max_rejections;
  opt.workers = budget.workers;
  opt.init_sigma = kSearchInitSigma;
  opt.validity = [&](const std::vector<double>& enc) { return static_cast<bool>(decode(enc)); };

  MinimizeResult es = es_minimize(
      [&](const std::vector<double>& enc) {
        HwDecodeResult d = decode(enc);
        if (!d) return kInf;
        return evaluate_accelerator(*d.config, benchmarks, budget, map_seed, index_encoding)
            .geomean_edp;
      },
      opt);
  if (es.best_vector.empty() || !std::isfinite(es.best_fitness))
    throw InfeasibleError("no valid accelerator found under constraint '" + constraint.name +
                          "' within the search budget");

  SearchResult result;
  result.accelerator = *decode(es.best_vector).config;
  result.accelerator.name =
      (constraint.name.empty() ? "searched" : constraint.name + "-searched");
  AcceleratorReward reward =
      final_reward(result.accelerator, benchmarks, budget, map_seed, index_encoding);
  result.benchmarks = std::move(reward.benchmarks);
  result.geomean_edp = reward.geomean_edp;
  result.history = std::move(es.history);
  return result;
}

namespace {

struct NetSearchOutcome {
  double fitness = kInf;
  std::vector<double> best_vector;
};

// Inner network-space ES for one hardware candidate. Mapping results are
// memoized by layer shape, and whole candidates by identity, because the
// sampler revisits both constantly.
NetSearchOutcome net_search(const AcceleratorConfig& accel, const NetSpaceConfig& netspace,
                            const AccuracyOracle& oracle, double min_accuracy,
                            const SearchBudget& budget, u64 seed) {
  struct LayerCost {
    double edp = kInf, latency = 0, energy = 0;
  };
  std::map<std::string, LayerCost> shape_memo;  // layer shape -> searched cost
  std::map<std::string, double> net_memo;       // candidate key -> fitness
  u64 map_seed = derive_seed(budget.seed, "map");

  MinimizeOptions opt;
  opt.dim = net_encoding_dims(netspace);
  opt.lambda = budget.nas_population;
  opt.generations = budget.nas_generations;
  opt.seed = seed;
  opt.max_rejections = budget.max_rejections;
  opt.workers = 1;
  opt.init_sigma = kSearchInitSigma;
  opt.validity = [&](const std::vector<double>& enc) {
    return oracle(decode_network(enc, netspace)) >= min_accuracy;
  };

  MinimizeResult es = es_minimize(
      [&](const std::vector<double>& enc) {
        NetCandidate c = decode_network(enc, netspace);
        std::string ckey = candidate_key(c);
        if (auto hit = net_memo.find(ckey); hit != net_memo.end()) return hit->second;
        double edp_sum = 0, latency_sum = 0, energy_sum = 0;
        bool feasible = true;
        for (const ConvLayer& layer : c.realized.layers) {
          std::string key = layer.shape_key();
          auto it = shape_memo.find(key);
          if (it == shape_memo.end()) {
            LayerCost cost;
            try {
              MappingResult mr =
                  search_mapping(accel, layer, budget, derive_seed(map_seed, key));
              cost = {mr.report.edp, static_cast<double>(mr.report.latency_cycles),
                      mr.report.energy_units};
            } catch (const InfeasibleError&) {
            }
            it = shape_memo.emplace(key, cost).first;
          }
          if (!std::isfinite(it->second.edp)) {
            feasible = false;
            break;
          }
          edp_sum += it->second.edp;
          latency_sum += it->second.latency;
          energy_sum += it->second.energy;
        }
        double fitness = !feasible        ? kInf
                         : budget.sum_edp ? edp_sum
                                          : latency_sum * energy_sum;
        net_memo[ckey] = fitness;
        return fitness;
      },
      opt);
  return {es.best_fitness, std::move(es.best_vector)};
}

}  // namespace

SearchResult co_search(const ResourceConstraint& constraint, const NetSpaceConfig& netspace,
                       const AccuracyOracle& oracle, double min_accuracy,
                       const SearchBudget& budget) {
  std::size_t net_dims = net_encoding_dims(netspace);
  NetCandidate maximal = decode_network(std::vector<double>(net_dims, 1.0), netspace);
  double peak = oracle(maximal);
  if (peak < min_accuracy)
    throw InfeasibleError("accuracy threshold " + std::to_string(min_accuracy) +
                          " is unreachable: the largest candidate reaches " +
                          std::to_string(peak));

  MinimizeOptions opt;
  opt.dim = kHwEncodingDims;
  opt.lambda = budget.hw_population;
  opt.generations = budget.hw_generations;
  opt.seed = budget.seed;
  opt.max_rejections = budget.max_rejections;
  opt.workers = budget.workers;
  opt.init_sigma = kSearchInitSigma;
  opt.validity = [&](const std::vector<double>& enc) {
    return static_cast<bool>(decode_hardware(enc, constraint));
  };

  MinimizeResult es = es_minimize(
      [&](const std::vector<double>& enc) {
        HwDecodeResult d = decode_hardware(enc, constraint);
        if (!d) return kInf;
        u64 inner_seed = derive_seed(budget.seed, serialize_accelerator(*d.config));
        return net_search(*d.config, netspace, oracle, min_accuracy, budget, inner_seed)
            .fitness;
      },
      opt);
  if (es.best_vector.empty() || !std::isfinite(es.best_fitness))
    throw InfeasibleError("co-search found no feasible (accelerator, network) pair under '" +
                          constraint.name + "'");

  SearchResult result;
  result.accelerator = *decode_hardware(es.best_vector, constraint).config;
  result.accelerator.name =
      (constraint.name.empty() ? "co-searched" : constraint.name + "-co-searched");

  // Winner pass: re-run the network search with a doubled budget, then price
  // the winning network with the boosted mapping budget.
  SearchBudget boosted = budget;
  boosted.nas_population *= 2;
  boosted.nas_generations *= 2;
  u64 inner_seed = derive_seed(budget.seed, serialize_accelerator(result.accelerator));
  NetSearchOutcome final_net = net_search(result.accelerator, netspace, oracle, min_accuracy,
                                          boosted, inner_seed);
  if (final_net.best_vector.empty()) {
    // Extremely tight budgets can leave the re-run empty-handed; the search
    // phase proved a feasible pair exists, so re-derive it deterministically.
    final_net = net_search(result.accelerator, netspace, oracle, min_accuracy, budget,
                           inner_seed);
  }
  NetCandidate net = decode_network(final_net.best_vector, netspace);
  result.network_accuracy = oracle(net);
  if (result.network_accuracy < min_accuracy)
    throw InfeasibleError("internal: selected network misses the accuracy threshold");

  u64 map_seed = derive_seed(budget.seed, "map");
  AcceleratorReward reward =
      final_reward(result.accelerator, {net.realized}, budget, map_seed, false);
  result.benchmarks = std::move(reward.benchmarks);
  result.geomean_edp = reward.geomean_edp;
  result.network = std::move(net);
  result.history = std::move(es.history);
  return result;
}

namespace {

json report_to_json(const CostReport& r) { return json::parse(serialize_report(r)); }

CostReport report_from_json(const json& doc, const std::string& origin) {
  CostReport r;
  try {
    r.latency_cycles = doc.at("latency_cycles").get<u64>();
    r.compute_cycles = doc.at("compute_cycles").get<u64>();
    r.memory_cycles = doc.at("memory_cycles").get<u64>();
    r.energy_units = doc.at("energy_units").get<double>();
    r.edp = doc.at("edp").get<double>();
    r.utilization = doc.at("utilization").get<double>();
    r.total_macs = doc.at("total_macs").get<u64>();
    for (auto [name, level] : {std::pair{"dram", &r.dram}, {"l2", &r.l2}, {"l1", &r.l1}}) {
      const json& acc = doc.at("accesses").at(name);
      level->input = acc.at("input").get<u64>();
      level->weight = acc.at("weight").get<u64>();
      level->output = acc.at("output").get<u64>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": malformed cost report: " + e.what());
  }
  return r;
}

}  // namespace

std::string serialize_search_result(const SearchResult& r) {
  json doc;
  doc["accelerator"] = json::parse(serialize_accelerator(r.accelerator));
  doc["geomean_edp"] = r.geomean_edp;
  json benches = json::array();
  for (const BenchmarkResult& br : r.benchmarks) {
    json b;
    b["benchmark"] = br.benchmark;
    b["edp"] = br.edp;
    json layers = json::array();
    for (const LayerResult& lr : br.layers) {
      json l;
      l["layer"] = lr.layer;
      l["mapping"] = json::parse(serialize_mapping(lr.mapping));
      l["report"] = report_to_json(lr.report);
      layers.push_back(std::move(l));
    }
    b["layers"] = std::move(layers);
    benches.push_back(std::move(b));
  }
  doc["benchmarks"] = std::move(benches);
  if (r.network) {
    doc["network"] = json::parse(serialize_candidate(*r.network));
    doc["network_accuracy"] = r.network_accuracy;
  }
  json hist = json::array();
  for (const GenerationStats& g : r.history) {
    json h;
    h["generation"] = g.generation;
    h["fitness_mean"] = g.fitness_mean;
    h["fitness_min"] = g.fitness_min;
    h["rejection_count"] = g.rejection_count;
    hist.push_back(std::move(h));
  }
  doc["history"] = std::move(hist);
  return doc.dump(2) + "\n";
}

SearchResult parse_search_result(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": parse error: " + e.what());
  }
  SearchResult r;
  try {
    r.accelerator = parse_accelerator(doc.at("accelerator").dump(), origin);
    r.geomean_edp = doc.at("geomean_edp").get<double>();
    std::vector<double> edps;
    for (const json& b : doc.at("benchmarks")) {
      BenchmarkResult br;
      br.benchmark = b.at("benchmark").get<std::string>();
      br.edp = b.at("edp").get<double>();
      for (const json& l : b.at("layers")) {
        LayerResult lr;
        lr.layer = l.at("layer").get<std::string>();
        lr.mapping = parse_mapping(l.at("mapping").dump(), origin);
        lr.report = report_from_json(l.at("report"), origin);
        br.layers.push_back(std::move(lr));
      }
      edps.push_back(br.edp);
      r.benchmarks.push_back(std::move(br));
    }
    if (doc.contains("network")) {
      const json& n = doc.at("network");
      NetCandidate c;
      c.width_multiplier = n.at("width_multiplier").get<double>();
      c.active_blocks = n.at("active_blocks").get<std::size_t>();
      c.ratios = n.at("ratios").get<std::vector<double>>();
      c.image_size = n.at("image_size").get<u64>();
      c.realized = parse_network(n.at("network").dump(), origin);
      r.network = std::move(c);
      r.network_accuracy = doc.at("network_accuracy").get<double>();
    }
    for (const json& h : doc.at("history")) {
      GenerationStats g;
      g.generation = h.at("generation").get<u64>();
      g.fitness_mean = h.at("fitness_mean").get<double>();
      g.fitness_min = h.at("fitness_min").get<double>();
      g.rejection_count = h.at("rejection_count").get<u64>();
      r.history.push_back(g);
    }
    if (geomean(edps) != r.geomean_edp)
      throw ConfigError(origin + ": stored geomean_edp disagrees with per-benchmark EDPs");
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": malformed search result: " + e.what());
  }
  return r;
}

std::string summary_csv(const SearchResult& r) {
  std::ostringstream os;
  os << "benchmark,layer,latency,energy,edp\n";
  for (const BenchmarkResult& br : r.benchmarks)
    for (const LayerResult& lr : br.layers)
      os << br.benchmark << ',' << lr.layer << ',' << lr.report.latency_cycles << ','
         << lr.report.energy_units << ',' << lr.report.edp << '\n';
  return os.str();
}

}  // namespace naas
