#include "naas/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace naas {

namespace {

constexpr double kCovBlend = 0.3;
constexpr double kRepairEps = 1e-8;

// Uniform double in [0,1) from the top 53 bits — keeps the sample stream
// independent of the standard library's distribution internals.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller; one spare is cached per sampler instance.
class NormalSource {
 public:
  explicit NormalSource(std::mt19937_64& rng) : rng_(rng) {}

  double operator()() {
    if (spare_) {
      double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = 0;
    while (u1 == 0) u1 = uniform01(rng_);
    double u2 = uniform01(rng_);
    double radius = std::sqrt(-2.0 * std::log(u1));
    spare_ = radius * std::sin(2.0 * M_PI * u2);
    return radius * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64& rng_;
  std::optional<double> spare_;
};

// Lower-triangular Cholesky factor, or nullopt if the matrix is not positive
// definite within tolerance.
std::optional<std::vector<double>> cholesky(const std::vector<double>& m, std::size_t d) {
  std::vector<double> L(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = m[i * d + j];
      for (std::size_t k = 0; k < j; ++k) sum -= L[i * d + k] * L[j * d + k];
      if (i == j) {
        if (sum <= 0) return std::nullopt;
        L[i * d + i] = std::sqrt(sum);
      } else {
        L[i * d + j] = sum / L[j * d + j];
      }
    }
  }
  return L;
}

// Adds eps*I (escalating) until the factorization succeeds.
std::vector<double> repair_psd(std::vector<double> m, std::size_t d) {
  double eps = kRepairEps;
  for (int attempt = 0; attempt < 12; ++attempt) {
    if (cholesky(m, d)) return m;
    for (std::size_t i = 0; i < d; ++i) m[i * d + i] += eps;
    eps *= 10.0;
  }
  // Pathological input; fall back to a tiny isotropic ball so sampling stays alive.
  std::fill(m.begin(), m.end(), 0.0);
  for (std::size_t i = 0; i < d; ++i) m[i * d + i] = kRepairEps;
  return m;
}

}  // namespace

EvolutionState es_init(std::size_t dim, std::size_t lambda, u64 seed, double init_sigma) {
  if (dim < 1) throw ConfigError("evolution: dimension must be at least 1");
  if (lambda < 4) throw ConfigError("evolution: population must be at least 4");
  if (!(init_sigma > 0) || !(init_sigma <= 1.0))
    throw ConfigError("evolution: init_sigma must be in (0, 1]");
  EvolutionState s;
  s.dim = dim;
  s.lambda = lambda;
  s.mu = std::max<std::size_t>(2, lambda / 4);
  s.rng_seed = seed;
  s.mean.assign(dim, 0.5);
  s.covariance.assign(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) s.covariance[i * dim + i] = init_sigma * init_sigma;
  return s;
}

std::vector<std::vector<double>> es_sample(const EvolutionState& state,
                                           const ValidityFn& validity, u64 max_rejections,
                                           u64* rejections) {
  std::mt19937_64 rng(derive_seed(state.rng_seed, state.generation));
  NormalSource normal(rng);
  std::size_t d = state.dim;
  std::vector<double> factor;
  if (!state.uniform) factor = *cholesky(repair_psd(state.covariance, d), d);

  std::vector<std::vector<double>> out;
  out.reserve(state.lambda);
  std::vector<double> x(d), z(d);
  u64 consecutive = 0;
  while (out.size() < state.lambda) {
    if (state.uniform) {
      for (std::size_t i = 0; i < d; ++i) x[i] = uniform01(rng);
    } else {
      for (std::size_t i = 0; i < d; ++i) z[i] = normal();
      for (std::size_t i = 0; i < d; ++i) {
        double v = state.mean[i];
        for (std::size_t k = 0; k <= i; ++k) v += factor[i * d + k] * z[k];
        x[i] = std::clamp(v, 0.0, 1.0);
      }
    }
    if (!validity || validity(x)) {
      out.push_back(x);
      consecutive = 0;
    } else {
      if (rejections) ++*rejections;
      if (++consecutive >= max_rejections)
        throw InfeasibleError("evolution: " + std::to_string(max_rejections) +
                              " consecutive samples rejected; space looks over-constrained");
    }
  }
  return out;
}

EvolutionState es_update(const EvolutionState& state,
                         const std::vector<ScoredCandidate>& scored) {
  EvolutionState next = state;
  next.generation = state.generation + 1;

  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < scored.size(); ++i)
    if (std::isfinite(scored[i].fitness)) idx.push_back(i);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scored[a].fitness < scored[b].fitness;
  });
  if (idx.empty()) return next;  // nothing usable this generation

  if (scored[idx[0]].fitness < next.best_fitness) {
    next.best_fitness = scored[idx[0]].fitness;
    next.best_vector = scored[idx[0]].vector;
  }
  if (state.uniform) return next;  // baseline never adapts

  std::size_t parents = std::min<std::size_t>(state.mu, idx.size());
  std::size_t d = state.dim;
  std::vector<double> centroid(d, 0.0);
  for (std::size_t p = 0; p < parents; ++p)
    for (std::size_t i = 0; i < d; ++i) centroid[i] += scored[idx[p]].vector[i];
  for (double& v : centroid) v = std::clamp(v / static_cast<double>(parents), 0.0, 1.0);

  // Rank-mu style blend around the *old* mean: a population that marched in
  // one direction stretches the distribution along it instead of collapsing.
  std::vector<double> cov(d * d, 0.0);
  for (std::size_t p = 0; p < parents; ++p) {
    const auto& x = scored[idx[p]].vector;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j <= i; ++j)
        cov[i * d + j] += (x[i] - state.mean[i]) * (x[j] - state.mean[j]);
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double blended = (1.0 - kCovBlend) * state.covariance[i * d + j] +
                       kCovBlend * cov[i * d + j] / static_cast<double>(parents);
      cov[i * d + j] = blended;
      cov[j * d + i] = blended;
    }
  next.mean = std::move(centroid);
  next.covariance = repair_psd(std::move(cov), d);
  return next;
}

MinimizeResult es_minimize(const ObjectiveFn& objective, const MinimizeOptions& opt) {
  EvolutionState state = es_init(opt.dim, opt.lambda, opt.seed, opt.init_sigma);
  state.uniform = opt.uniform;

  MinimizeResult result;
  for (u64 gen = 0; gen < opt.generations; ++gen) {
    u64 rejections = 0;
    auto samples = es_sample(state, opt.validity, opt.max_rejections, &rejections);

    std::vector<double> fitness(samples.size());
    std::exception_ptr error;
    int workers = opt.workers;
#ifdef _OPENMP
    if (workers == 0) workers = omp_get_max_threads();
#endif
    if (workers == 1) {
      for (std::size_t i = 0; i < samples.size(); ++i) fitness[i] = objective(samples[i]);
    } else {
#pragma omp parallel for schedule(dynamic) num_threads(workers)
      for (std::size_t i = 0; i < samples.size(); ++i) {
        try {
          fitness[i] = objective(samples[i]);
        } catch (...) {
#pragma omp critical
          if (!error) error = std::current_exception();
        }
      }
      if (error) std::rethrow_exception(error);
    }

    std::vector<ScoredCandidate> scored(samples.size());
    GenerationStats stats;
    stats.generation = gen;
    stats.rejection_count = rejections;
    double sum = 0;
    double min = std::numeric_limits<double>::infinity();
    std::size_t finite = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      scored[i] = {std::move(samples[i]), fitness[i], i};
      if (std::isfinite(fitness[i])) {
        sum += fitness[i];
        min = std::min(min, fitness[i]);
        ++finite;
      } else {
        ++stats.rejection_count;
      }
    }
    stats.fitness_mean =
        finite ? sum / static_cast<double>(finite) : std::numeric_limits<double>::infinity();
    stats.fitness_min = min;
    result.history.push_back(stats);

    state = es_update(state, scored);
  }
  result.best_vector = state.best_vector;
  result.best_fitness = state.best_fitness;
  return result;
}

std::string history_csv(const std::vector<GenerationStats>& history) {
  std::ostringstream os;
  os << "generation,fitness_mean,fitness_min,rejection_count\n";
  for (const auto& g : history)
    os << g.generation << ',' << g.fitness_mean << ',' << g.fitness_min << ','
       << g.rejection_count << '\n';
  return os.str();
}

}  // namespace naas
