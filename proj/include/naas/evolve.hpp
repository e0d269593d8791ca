#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "naas/common.hpp"

namespace naas {

// Multivariate-normal search distribution over [0,1]^D. `uniform` switches the
// sampler to plain uniform draws and freezes the distribution — the
// random-search baseline runs through the exact same loop.
struct EvolutionState {
  std::size_t dim = 0;
  std::size_t lambda = 0;
  std::size_t mu = 0;
  u64 generation = 0;
  u64 rng_seed = 0;
  bool uniform = false;
  std::vector<double> mean;        // D entries in [0,1]
  std::vector<double> covariance;  // D x D row-major, symmetric PSD
  std::vector<double> best_vector;
  double best_fitness = std::numeric_limits<double>::infinity();
};

struct ScoredCandidate {
  std::vector<double> vector;
  double fitness = std::numeric_limits<double>::infinity();  // +inf = invalid decode
  std::size_t payload = 0;  // caller-side index of the decoded artifact
};

// `init_sigma` is the initial per-coordinate standard deviation. The default
// 0.1 is deliberately conservative; searches whose optima tend to sit near the
// corners of the unit cube (tiling spaces, for example) should widen it so the
// first generations can actually reach them.
EvolutionState es_init(std::size_t dim, std::size_t lambda, u64 seed, double init_sigma = 0.1);

using ValidityFn = std::function<bool(const std::vector<double>&)>;

// Draws until `lambda` vectors pass `validity`, clipping every coordinate to
// [0,1]. Deterministic in (rng_seed, generation). Throws InfeasibleError after
// `max_rejections` consecutive rejections. `rejections` (optional) accumulates
// the total number of rejected draws.
std::vector<std::vector<double>> es_sample(const EvolutionState& state,
                                           const ValidityFn& validity, u64 max_rejections,
                                           u64* rejections = nullptr);

// Re-centers the distribution on the mu best finite-fitness candidates and
// blends their spread (measured around the old mean, so directed moves widen
// the distribution) into the covariance. Infinite-fitness candidates never
// become parents.
EvolutionState es_update(const EvolutionState& state,
                         const std::vector<ScoredCandidate>& scored);

struct GenerationStats {
  u64 generation = 0;
  double fitness_mean = 0;  // over finite-fitness candidates
  double fitness_min = 0;
  u64 rejection_count = 0;  // sampler rejections + invalid evaluations
};

struct MinimizeResult {
  std::vector<double> best_vector;
  double best_fitness = std::numeric_limits<double>::infinity();
  std::vector<GenerationStats> history;
};

struct MinimizeOptions {
  std::size_t dim = 1;
  std::size_t lambda = 16;
  u64 generations = 10;
  u64 seed = 0;
  bool uniform = false;
  u64 max_rejections = 100000;
  int workers = 1;            // 1 = serial; 0 = all hardware threads
  ValidityFn validity;        // empty = accept everything
  double init_sigma = 0.1;    // initial sampling spread, see es_init
};

// Objective returns the fitness to minimize, or +inf to reject the candidate.
using ObjectiveFn = std::function<double(const std::vector<double>&)>;

// Full sample/evaluate/update loop. Candidate evaluations within a generation
// run in parallel when workers != 1; updates are serial, results are stored by
// sample index, so the outcome does not depend on the worker count.
MinimizeResult es_minimize(const ObjectiveFn& objective, const MinimizeOptions& opt);

std::string history_csv(const std::vector<GenerationStats>& history);

}  // namespace naas
