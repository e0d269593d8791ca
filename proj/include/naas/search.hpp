#pragma once

#include <optional>
#include <string>
#include <vector>

#include "naas/costmodel.hpp"
#include "naas/evolve.hpp"
#include "naas/hwspace.hpp"
#include "naas/mapspace.hpp"
#include "naas/netspace.hpp"
#include "naas/workload.hpp"

namespace naas {

struct SearchBudget {
  std::size_t hw_population = 40;
  u64 hw_generations = 20;
  std::size_t map_population = 16;
  u64 map_generations = 10;
  std::size_t nas_population = 16;
  u64 nas_generations = 8;
  u64 seed = 0;
  int workers = 1;
  u64 max_rejections = 100000;
  bool sum_edp = true;  // false: per-network EDP = (sum latency) x (sum energy)
  EnergyModel energy;
};

enum class SearchMode { Full, SizingOnly, IndexEncoding, RandomBaseline };

SearchMode search_mode_from_name(const std::string& name);
const char* search_mode_name(SearchMode m);

double geomean(const std::vector<double>& values);

struct MappingResult {
  Mapping mapping;
  CostReport report;
  std::vector<GenerationStats> history;
};

// Evolution search over the mapping encoding for one layer. Capacity-invalid
// decodes score +inf; throws InfeasibleError when the budget finds no valid
// mapping at all. index_encoding switches to the flat enumeration knobs.
MappingResult search_mapping(const AcceleratorConfig& accel, const ConvLayer& layer,
                             const SearchBudget& budget, u64 seed,
                             bool index_encoding = false);

// Ground truth for desk-scale layers: enumerates every quantized tiling of
// the four tileable dims crossed with the loop-order classes that can change
// cost (single-trip loops are transparent to the model, so only the moving
// dims' relative order matters, and the PE-level order never enters the
// cost). Feasible only when the product of pairs is small.
MappingResult exhaustive_best_mapping(const AcceleratorConfig& accel, const ConvLayer& layer,
                                      const EnergyModel& em);

struct LayerResult {
  std::string layer;
  Mapping mapping;
  CostReport report;
};

struct BenchmarkResult {
  std::string benchmark;
  std::vector<LayerResult> layers;
  double edp = 0;  // aggregated per SearchBudget::sum_edp
};

struct AcceleratorReward {
  double geomean_edp = 0;  // +inf when any benchmark found no valid mapping
  std::vector<BenchmarkResult> benchmarks;
};

// Reward of one hardware candidate: best-found mapping EDP per layer, summed
// per network, geomean across networks. Layers with identical shapes share
// one mapping search (and its derived seed), so the reward is a pure function
// of (accel, benchmarks, seed).
AcceleratorReward evaluate_accelerator(const AcceleratorConfig& accel,
                                       const std::vector<Network>& benchmarks,
                                       const SearchBudget& budget, u64 seed,
                                       bool index_encoding = false);

struct SearchResult {
  AcceleratorConfig accelerator;
  std::vector<BenchmarkResult> benchmarks;
  double geomean_edp = 0;
  std::optional<NetCandidate> network;
  double network_accuracy = 0;
  std::vector<GenerationStats> history;  // outer (hardware-level) trace
};

// Outer loop: ES over the hardware encoding, fitness from
// evaluate_accelerator, winner re-searched at 4x the mapping budget.
// SizingOnly freezes connectivity to `sizing_baseline` (required for that
// mode); RandomBaseline keeps the full space but never adapts the sampler.
SearchResult search_accelerator(const ResourceConstraint& constraint,
                                const std::vector<Network>& benchmarks,
                                const SearchBudget& budget, SearchMode mode,
                                const AcceleratorConfig* sizing_baseline = nullptr);

// Three-level loop: hardware ES outside, network ES inside, mapping search
// innermost. Network candidates below min_accuracy are rejected at sampling
// time, so the returned network always meets the threshold. Throws
// InfeasibleError when even the maximal candidate misses it.
SearchResult co_search(const ResourceConstraint& constraint, const NetSpaceConfig& netspace,
                       const AccuracyOracle& oracle, double min_accuracy,
                       const SearchBudget& budget);

std::string serialize_search_result(const SearchResult& r);
// Re-derives the geomean from the stored per-benchmark EDPs and throws
// ConfigError if it disagrees with the recorded value.
SearchResult parse_search_result(const std::string& text, const std::string& origin);

std::string summary_csv(const SearchResult& r);

}  // namespace naas
