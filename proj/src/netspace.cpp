#include "naas/netspace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include <json.hpp>

namespace naas {

using nlohmann::json;

namespace {

// Stage layout of the full-depth skeleton and its per-stage output channels
// at width 1.0 (bottleneck expansion already applied).
constexpr std::size_t kNumStages = 4;
constexpr std::size_t kStageCap[kNumStages] = {4, 4, 6, 4};
constexpr u64 kStageWidth[kNumStages] = {256, 512, 1024, 2048};

u64 round8(double channels) {
  return std::max<u64>(8, 8 * static_cast<u64>(std::llround(channels / 8.0)));
}

template <typename T>
T pick(const std::vector<T>& choices, double knob) {
  auto i = static_cast<std::size_t>(knob * static_cast<double>(choices.size()));
  return choices[std::min(i, choices.size() - 1)];
}

}  // namespace

std::vector<u64> NetSpaceConfig::image_sizes() const {
  std::vector<u64> out;
  for (u64 s = image_min; s <= image_max; s += image_step) out.push_back(s);
  return out;
}

std::size_t net_encoding_dims(const NetSpaceConfig& cfg) { return 2 + cfg.max_blocks + 1; }

NetCandidate decode_network(const std::vector<double>& enc, const NetSpaceConfig& cfg) {
  if (enc.size() != net_encoding_dims(cfg))
    throw ConfigError("network encoding needs " + std::to_string(net_encoding_dims(cfg)) +
                      " entries, got " + std::to_string(enc.size()));
  if (cfg.width_multipliers.empty() || cfg.reduction_ratios.empty() ||
      cfg.image_min > cfg.image_max || cfg.image_step == 0)
    throw ConfigError("network space config has an empty choice list");

  NetCandidate c;
  c.width_multiplier = pick(cfg.width_multipliers, enc[0]);

  std::vector<std::size_t> depth_choices;
  for (std::size_t b = kNumStages; b <= cfg.max_blocks; ++b) depth_choices.push_back(b);
  c.active_blocks = pick(depth_choices, enc[1]);

  for (std::size_t b = 0; b < c.active_blocks; ++b)
    c.ratios.push_back(pick(cfg.reduction_ratios, enc[2 + b]));
  c.image_size = pick(cfg.image_sizes(), enc[2 + cfg.max_blocks]);

  // One block per stage first, then round-robin up to each stage's cap.
  std::size_t per_stage[kNumStages] = {1, 1, 1, 1};
  std::size_t placed = kNumStages;
  for (std::size_t s = 0; placed < c.active_blocks; s = (s + 1) % kNumStages)
    if (per_stage[s] < kStageCap[s]) {
      ++per_stage[s];
      ++placed;
    }

  Network& net = c.realized;
  {
    std::ostringstream name;
    name << "net_w" << c.width_multiplier << "_d" << c.active_blocks << "_i" << c.image_size;
    net.name = name.str();
  }

  auto spatial = [](u64 in, u64 stride) { return ceil_div(in, stride); };
  u64 xy = spatial(c.image_size, 2);  // 7x7 stride-2 stem
  u64 channels = round8(64 * c.width_multiplier);
  net.layers.push_back({"stem", make_extents(3, channels, 7, 7, xy, xy), 2, 1});
  xy = spatial(xy, 2);  // 3x3 stride-2 max-pool, not a conv

  std::size_t block_index = 0;
  for (std::size_t s = 0; s < kNumStages; ++s) {
    u64 out_ch = round8(static_cast<double>(kStageWidth[s]) * c.width_multiplier);
    for (std::size_t b = 0; b < per_stage[s]; ++b, ++block_index) {
      u64 mid = round8(static_cast<double>(out_ch) * c.ratios[block_index]);
      u64 stride = (s > 0 && b == 0) ? 2 : 1;
      u64 out_xy = spatial(xy, stride);
      std::string tag = "s" + std::to_string(s) + "b" + std::to_string(b);
      net.layers.push_back({tag + "c0", make_extents(channels, mid, 1, 1, xy, xy), 1, 1});
      net.layers.push_back({tag + "c1", make_extents(mid, mid, 3, 3, out_xy, out_xy), stride, 1});
      net.layers.push_back({tag + "c2", make_extents(mid, out_ch, 1, 1, out_xy, out_xy), 1, 1});
      channels = out_ch;
      xy = out_xy;
    }
  }
  return c;
}

std::string candidate_key(const NetCandidate& c) {
  std::ostringstream os;
  os << "w" << c.width_multiplier << "_d" << c.active_blocks << "_i" << c.image_size << "_r";
  for (double r : c.ratios) os << r << (&r == &c.ratios.back() ? "" : "-");
  return os.str();
}

double synthetic_accuracy(const NetCandidate& c, const NetSpaceConfig& cfg) {
  double ratio_penalty = 0;
  for (double r : c.ratios) ratio_penalty += 1.0 - r;
  return cfg.acc_base + cfg.acc_width * std::log(c.width_multiplier) +
         cfg.acc_depth * (static_cast<double>(c.active_blocks) /
                          static_cast<double>(cfg.max_blocks)) +
         cfg.acc_image * (static_cast<double>(c.image_size) / 256.0) -
         cfg.acc_ratio * ratio_penalty;
}

AccuracyOracle make_synthetic_oracle(const NetSpaceConfig& cfg) {
  return [cfg](const NetCandidate& c) { return synthetic_accuracy(c, cfg); };
}

AccuracyOracle load_accuracy_table(const std::string& path, const NetSpaceConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open accuracy table");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": parse error: " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(path + ": accuracy table must be a JSON object");
  auto table = std::make_shared<std::map<std::string, double>>();
  for (const auto& [key, value] : doc.items()) {
    double acc = value.get<double>();
    if (acc < 0.0 || acc > 1.0)
      throw ConfigError(path + ": accuracy for " + key + " outside [0,1]");
    (*table)[key] = acc;
  }
  return [table, cfg](const NetCandidate& c) {
    auto it = table->find(candidate_key(c));
    return it != table->end() ? it->second : synthetic_accuracy(c, cfg);
  };
}

std::string serialize_candidate(const NetCandidate& c) {
  json doc;
  doc["width_multiplier"] = c.width_multiplier;
  doc["active_blocks"] = c.active_blocks;
  doc["ratios"] = c.ratios;
  doc["image_size"] = c.image_size;
  doc["key"] = candidate_key(c);
  doc["network"] = json::parse(serialize_network(c.realized));
  return doc.dump(2) + "\n";
}

}  // namespace naas
