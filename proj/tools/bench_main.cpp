// Throughput benchmark: evaluates a population of mapping candidates with the
// serial loop and with the OpenMP loop, verifies both produce bit-identical
// fitness vectors, and reports the speedup. Also times one analytical
// evaluation against one reference simulation to show why the simulator is a
// test oracle rather than a search component.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <random>
#include <vector>

#include <omp.h>

#include "naas/refsim.hpp"
#include "naas/search.hpp"

using namespace naas;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::vector<double>> draw_batch(u64 seed, std::size_t count, std::size_t dims) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> batch(count, std::vector<double>(dims));
  for (auto& enc : batch)
    for (double& x : enc) x = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return batch;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"naas throughput benchmark: serial vs OpenMP population evaluation"};
  std::size_t batch = 20000;
  int workers = omp_get_max_threads();
  u64 seed = 1;
  int repeats = 3;
  app.add_option("--batch", batch, "candidate mappings per measurement")->capture_default_str();
  app.add_option("--workers", workers, "OpenMP threads for the parallel pass")
      ->capture_default_str();
  app.add_option("--seed", seed, "RNG seed for the candidate batch")->capture_default_str();
  app.add_option("--repeats", repeats, "measurements per variant (best is reported)")
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  AcceleratorConfig accel;
  accel.name = "bench-256pe";
  accel.num_pes = 256;
  accel.l1_bytes = 2048;
  accel.l2_bytes = 256 * 1024;
  accel.bandwidth = 32;
  accel.array_size = {16, 16};
  accel.parallel_dims = {Dim::K, Dim::XP};

  ConvLayer layer{"bench-conv", make_extents(64, 128, 3, 3, 56, 56), 1, 1};
  const EnergyModel em;

  const auto batch_encodings = draw_batch(seed, batch, kMapEncodingDims);
  auto score = [&](const std::vector<double>& enc) {
    Mapping m = decode_mapping(enc, layer, accel);
    EvalResult ev = evaluate(accel, m, layer, em);
    return ev ? ev->edp : std::numeric_limits<double>::infinity();
  };

  std::vector<double> serial_fit(batch), parallel_fit(batch);
  double serial_best = 1e300, parallel_best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < batch; ++i) serial_fit[i] = score(batch_encodings[i]);
    serial_best = std::min(serial_best, seconds_since(t0));
  }
  for (int r = 0; r < repeats; ++r) {
    auto t0 = std::chrono::steady_clock::now();
#pragma omp parallel for schedule(static) num_threads(workers)
    for (long long i = 0; i < static_cast<long long>(batch); ++i)
      parallel_fit[static_cast<std::size_t>(i)] = score(batch_encodings[static_cast<std::size_t>(i)]);
    parallel_best = std::min(parallel_best, seconds_since(t0));
  }

  std::size_t diffs = 0, valid = 0;
  for (std::size_t i = 0; i < batch; ++i) {
    // Infinities compare equal to themselves, so plain inequality is the
    // right bit-level check here.
    if (serial_fit[i] != parallel_fit[i]) ++diffs;
    if (std::isfinite(serial_fit[i])) ++valid;
  }

  std::cout << "population evaluation (" << batch << " mappings, " << valid << " valid)\n";
  std::cout << std::fixed << std::setprecision(1);
  std::cout << "  serial:   " << serial_best * 1e3 << " ms  ("
            << double(batch) / serial_best / 1e3 << " k evals/s)\n";
  std::cout << "  omp x" << workers << ":   " << parallel_best * 1e3 << " ms  ("
            << double(batch) / parallel_best / 1e3 << " k evals/s)\n";
  std::cout << std::setprecision(2) << "  speedup:  x" << serial_best / parallel_best << "\n";
  std::cout << "  result agreement: " << (diffs == 0 ? "identical" : "DIFFERS") << " (" << diffs
            << " mismatching entries)\n";

  // Analytical model vs reference simulator, one small layer.
  ConvLayer probe{"probe", make_extents(8, 8, 3, 3, 8, 8), 1, 1};
  AcceleratorConfig small = accel;
  small.name = "bench-8pe";
  small.num_pes = 8;
  small.array_size = {8};
  small.parallel_dims = {Dim::K};
  Mapping m = decode_mapping(std::vector<double>(kMapEncodingDims, 0.5), probe, small);

  constexpr int kModelCalls = 20000, kSimCalls = 20;
  auto t0 = std::chrono::steady_clock::now();
  double sink = 0;
  for (int i = 0; i < kModelCalls; ++i) sink += evaluate(small, m, probe, em)->edp;
  double model_s = seconds_since(t0) / kModelCalls;
  t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < kSimCalls; ++i) sink += simulate_reference(small, m, probe, em).edp;
  double sim_s = seconds_since(t0) / kSimCalls;

  std::cout << "single evaluation, " << probe.name << " (" << total_macs(probe) << " MACs)\n"
            << std::setprecision(2) << "  analytical model:    " << model_s * 1e6 << " us\n"
            << "  reference simulator: " << sim_s * 1e6 << " us  (x" << std::setprecision(0)
            << sim_s / model_s << " slower)\n";
  if (!std::isfinite(sink)) std::cout << "";  // keep the loops observable
  if (diffs != 0) return 1;
  return 0;
}
