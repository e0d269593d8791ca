#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "naas/hwspace.hpp"

using namespace naas;

namespace {

std::string data_path(const std::string& rel) { return std::string(NAAS_DATA_DIR) + "/" + rel; }

DimMap<double> importance_of(double c, double k, double r, double s, double xp, double yp) {
  DimMap<double> imp;
  imp[Dim::C] = c;
  imp[Dim::K] = k;
  imp[Dim::R] = r;
  imp[Dim::S] = s;
  imp[Dim::XP] = xp;
  imp[Dim::YP] = yp;
  return imp;
}

std::vector<double> random_unit_vector(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

const ResourceConstraint kEdgeTpu{"edgetpu", 4096, 8388608, 256};
const ResourceConstraint kEyeriss{"eyeriss", 168, 196608, 8};

}  // namespace

TEST_CASE("rank_dims sorts by importance with canonical tie-break") {
  auto order = rank_dims(importance_of(5, 2, 5, 1, 3, 4));
  std::array<Dim, 6> want = {Dim::C, Dim::R, Dim::YP, Dim::XP, Dim::K, Dim::S};
  CHECK(order == want);

  // All equal: canonical order exactly.
  CHECK(rank_dims(importance_of(1, 1, 1, 1, 1, 1)) == kAllDims);
}

TEST_CASE("rank_dims is a permutation and monotone in each coordinate") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    DimMap<double> imp;
    for (Dim d : kAllDims) imp[d] = u(rng);
    auto order = rank_dims(imp);

    std::set<Dim> seen(order.begin(), order.end());
    REQUIRE(seen.size() == kNumDims);
    for (std::size_t i = 0; i + 1 < kNumDims; ++i)
      CHECK(imp[order[i]] >= imp[order[i + 1]]);

    // Raising one dim's importance never pushes it further in.
    Dim d = kAllDims[trial % kNumDims];
    auto pos = [&](const std::array<Dim, 6>& o) {
      return std::find(o.begin(), o.end(), d) - o.begin();
    };
    auto before = pos(order);
    imp[d] += u(rng);
    CHECK(pos(rank_dims(imp)) <= before);
  }
}

TEST_CASE("parallel dims imply their communication pattern") {
  CHECK(parallel_semantics(Dim::C) == CommKind::Reduction);
  CHECK(parallel_semantics(Dim::R) == CommKind::Reduction);
  CHECK(parallel_semantics(Dim::S) == CommKind::Reduction);
  CHECK(parallel_semantics(Dim::K) == CommKind::Broadcast);
  CHECK(parallel_semantics(Dim::XP) == CommKind::Neighbor);
  CHECK(parallel_semantics(Dim::YP) == CommKind::Neighbor);
}

TEST_CASE("decode_hardware hits the documented EdgeTPU-like point") {
  // PE knob at the top, two axes of 16 lanes, C and K most important.
  std::vector<double> enc(kHwEncodingDims, 0.0);
  enc[0] = 1.0;           // 4096 PEs
  enc[1] = 0.5;           // some L1 share
  enc[2] = 0.5;           // L2
  enc[3] = 1.0;           // full bandwidth
  enc[4] = 0.5;           // 2 axes
  enc[5] = 16.0 / 4096.0; // axis 0 -> 16
  enc[6] = 16.0 / 4096.0; // axis 1 -> 16
  enc[8 + 0] = 1.0;       // C
  enc[8 + 1] = 0.9;       // K
  auto res = decode_hardware(enc, kEdgeTpu);
  REQUIRE(res);
  CHECK(res.config->num_pes == 4096);
  CHECK(res.config->array_size == std::vector<u64>{16, 16});
  CHECK(res.config->parallel_dims == std::vector<Dim>{Dim::C, Dim::K});
  CHECK(res.config->bandwidth == 256);
  CHECK(validate(*res.config, kEdgeTpu).empty());
}

TEST_CASE("decoded accelerators always honor strides and budgets") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<u64> pes(1, 512), mem(1, 1 << 20), bw(1, 256);
  int accepted = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    ResourceConstraint c{"fuzz", pes(rng), mem(rng), bw(rng)};
    auto enc = random_unit_vector(rng, kHwEncodingDims);
    auto res = decode_hardware(enc, c);
    if (!res) {
      CHECK(!res.reject_reason.empty());
      continue;
    }
    ++accepted;
    const AcceleratorConfig& cfg = *res.config;
    CHECK(cfg.num_pes % 8 == 0);
    CHECK(cfg.l1_bytes % 16 == 0);
    CHECK(cfg.l2_bytes % 16 == 0);
    for (u64 a : cfg.array_size) CHECK(a % 2 == 0);
    CHECK(cfg.total_lanes() <= cfg.num_pes);
    CHECK(validate(cfg, c).empty());
    // Decoding is pure: the same point decodes to the same machine.
    auto again = decode_hardware(enc, c);
    REQUIRE(again);
    CHECK(*again.config == cfg);
  }
  CHECK(accepted > 5000);  // most of the fuzz space must be decodable
}

TEST_CASE("encode_hardware inverts decode_hardware on decoded points") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 2000; ++trial) {
    auto enc = random_unit_vector(rng, kHwEncodingDims);
    auto res = decode_hardware(enc, kEdgeTpu);
    if (!res) continue;
    auto back = decode_hardware(encode_hardware(*res.config, kEdgeTpu), kEdgeTpu);
    REQUIRE(back);
    CHECK(*back.config == *res.config);
  }
}

TEST_CASE("indexed decode covers every ordered dim selection") {
  std::vector<double> enc(kHwIndexEncodingDims, 0.5);
  enc[0] = 1.0;
  enc[5] = 16.0 / 4096.0;
  enc[6] = 16.0 / 4096.0;

  // ndim=2: 30 ordered pairs; sweep the index knob and collect them all.
  std::set<std::vector<Dim>> seen;
  for (int i = 0; i < 3000; ++i) {
    enc[8] = (static_cast<double>(i) + 0.5) / 3000.0;
    auto res = decode_hardware_indexed(enc, kEdgeTpu);
    REQUIRE(res);
    REQUIRE(res.config->parallel_dims.size() == 2);
    CHECK(res.config->parallel_dims[0] != res.config->parallel_dims[1]);
    seen.insert(res.config->parallel_dims);
  }
  CHECK(seen.size() == 30);

  // Index 0 is the first selection in canonical order.
  enc[8] = 0.0;
  auto first = decode_hardware_indexed(enc, kEdgeTpu);
  REQUIRE(first);
  CHECK(first.config->parallel_dims == std::vector<Dim>{Dim::C, Dim::K});
}

TEST_CASE("sizing decode freezes connectivity and spans the feasible PE range") {
  AcceleratorConfig base = load_accelerator(data_path("accelerators/eyeriss-like.json"));
  REQUIRE(base.total_lanes() == 168);

  // Tight baseline: lanes == max_pes. Every knob value must still decode.
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 500; ++trial) {
    auto enc = random_unit_vector(rng, kHwSizingEncodingDims);
    auto res = decode_hardware_sizing(enc, kEyeriss, base);
    REQUIRE(res);
    CHECK(res.config->array_size == base.array_size);
    CHECK(res.config->parallel_dims == base.parallel_dims);
    CHECK(res.config->num_pes == 168);  // only one feasible PE count here
    CHECK(validate(*res.config, kEyeriss).empty());
  }

  // Roomier budget: knob 0 sits at the lane floor, knob 1 at the budget top.
  ResourceConstraint roomy{"roomy", 512, 1 << 20, 64};
  std::vector<double> lo(kHwSizingEncodingDims, 0.5), hi(kHwSizingEncodingDims, 0.5);
  lo[0] = 0.0;
  hi[0] = 1.0;
  auto rlo = decode_hardware_sizing(lo, roomy, base);
  auto rhi = decode_hardware_sizing(hi, roomy, base);
  REQUIRE(rlo);
  REQUIRE(rhi);
  CHECK(rlo.config->num_pes == 168);
  CHECK(rhi.config->num_pes == 512);

  // A baseline that cannot fit the budget is rejected, not crashed.
  auto bad = decode_hardware_sizing(lo, ResourceConstraint{"tiny", 64, 1 << 20, 64}, base);
  CHECK(!bad);
  CHECK(bad.reject_reason.find("PE budget") != std::string::npos);
}

TEST_CASE("validate reports every violation") {
  AcceleratorConfig cfg;
  cfg.num_pes = 12;          // not a multiple of 8
  cfg.l1_bytes = 8;          // not a multiple of 16
  cfg.l2_bytes = 32;
  cfg.bandwidth = 4;
  cfg.array_size = {4, 4};
  cfg.parallel_dims = {Dim::K, Dim::K};  // duplicate

  auto v = validate(cfg, ResourceConstraint{"c", 8, 1 << 16, 8});
  auto has = [&](const char* needle) {
    return std::any_of(v.begin(), v.end(), [&](const std::string& s) {
      return s.find(needle) != std::string::npos;
    });
  };
  CHECK(has("multiple of 8"));
  CHECK(has("multiple of 16"));
  CHECK(has("duplicate"));
  CHECK(has("array exceeds PEs"));
  CHECK(has("num_pes exceeds constraint"));
}

TEST_CASE("constraint and accelerator files load, round-trip, and cross-check") {
  ResourceConstraint eyeriss = load_constraint(data_path("constraints/eyeriss.json"));
  CHECK(eyeriss.max_pes == 168);
  CHECK(eyeriss.max_onchip_bytes == 196608);
  CHECK(eyeriss.max_bandwidth == 8);

  AcceleratorConfig like = load_accelerator(data_path("accelerators/eyeriss-like.json"));
  CHECK(validate(like, eyeriss).empty());
  // The baseline saturates its envelope: L2 plus all L1s equals the budget.
  CHECK(like.l2_bytes + like.num_pes * like.l1_bytes == eyeriss.max_onchip_bytes);

  AcceleratorConfig back = parse_accelerator(serialize_accelerator(like), "round-trip");
  CHECK(back == like);

  CHECK_THROWS_AS(load_constraint("/nonexistent/c.json"), ConfigError);
  CHECK_THROWS_AS(load_accelerator("/nonexistent/a.json"), ConfigError);
}
