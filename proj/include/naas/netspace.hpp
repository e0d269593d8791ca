#pragma once

#include <functional>
#include <string>
#include <vector>

#include "naas/common.hpp"
#include "naas/workload.hpp"

namespace naas {

// ResNet-style bottleneck search space: width multiplier, active block count,
// per-block channel-reduction ratio, input resolution. Small by OFA standards
// but shaped the same way, and big enough that search beats enumeration.
struct NetSpaceConfig {
  std::vector<double> width_multipliers = {0.65, 0.8, 1.0};
  std::size_t max_blocks = 18;
  std::vector<double> reduction_ratios = {0.2, 0.25, 0.35};
  u64 image_min = 128;
  u64 image_max = 256;
  u64 image_step = 16;

  // Synthetic-accuracy surrogate coefficients (see synthetic_accuracy).
  double acc_base = 0.60;
  double acc_width = 0.08;
  double acc_depth = 0.18;
  double acc_image = 0.10;
  double acc_ratio = 0.01;

  std::vector<u64> image_sizes() const;
};

// Encoding layout: [width, depth, ratio per block (max_blocks), image].
std::size_t net_encoding_dims(const NetSpaceConfig& cfg);

struct NetCandidate {
  double width_multiplier = 1.0;
  std::size_t active_blocks = 0;
  std::vector<double> ratios;  // one per active block
  u64 image_size = 0;
  Network realized;
};

// Total on the hypercube: every knob indexes its choice list by
// floor(x * |choices|), clamped. The realized network is a four-stage
// bottleneck skeleton with a 7x7/stride-2 stem.
NetCandidate decode_network(const std::vector<double>& enc, const NetSpaceConfig& cfg);

// Stable identity string (width/depth/image/ratios), used as the lookup key
// for external accuracy tables and for deduplication.
std::string candidate_key(const NetCandidate& c);

// Deterministic monotone stand-in for a trained accuracy predictor: wider,
// deeper, higher-resolution candidates always score higher.
double synthetic_accuracy(const NetCandidate& c, const NetSpaceConfig& cfg);

using AccuracyOracle = std::function<double(const NetCandidate&)>;

AccuracyOracle make_synthetic_oracle(const NetSpaceConfig& cfg);

// JSON object mapping candidate_key -> accuracy. Listed candidates use the
// table value; anything unlisted falls back to the synthetic surrogate.
AccuracyOracle load_accuracy_table(const std::string& path, const NetSpaceConfig& cfg);

std::string serialize_candidate(const NetCandidate& c);

}  // namespace naas
