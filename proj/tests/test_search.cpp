#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "naas/search.hpp"

using namespace naas;

namespace {

std::string data_path(const std::string& rel) { return std::string(NAAS_DATA_DIR) + "/" + rel; }

AcceleratorConfig single_pe() {
  AcceleratorConfig a;
  a.name = "one-pe";
  a.num_pes = 1;
  a.l1_bytes = 2048;
  a.l2_bytes = 1u << 20;
  a.bandwidth = 16;
  a.array_size = {1};
  a.parallel_dims = {Dim::K};
  return a;
}

AcceleratorConfig small_array() {
  AcceleratorConfig a;
  a.name = "small-array";
  a.num_pes = 8;
  a.l1_bytes = 64 * 1024;
  a.l2_bytes = 4u << 20;
  a.bandwidth = 32;
  a.array_size = {4, 2};
  a.parallel_dims = {Dim::K, Dim::XP};
  return a;
}

SearchBudget tiny_budget(u64 seed) {
  SearchBudget b;
  b.map_population = 16;
  b.map_generations = 10;
  b.seed = seed;
  return b;
}

std::vector<double> random_unit_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// New loop order with the moving (trips > 1) dims kept in their original
// relative order but everything else — slot choice and the single-trip dims —
// rearranged at random.
LoopOrder shuffle_transparent(const LoopOrder& order, const Extents& trips,
                              std::mt19937_64& rng) {
  std::vector<Dim> moving, still;
  for (Dim d : order) (trips[d] > 1 ? moving : still).push_back(d);
  std::vector<std::size_t> slots(order.size());
  for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
  std::shuffle(slots.begin(), slots.end(), rng);
  std::vector<std::size_t> moving_slots(slots.begin(), slots.begin() + moving.size());
  std::sort(moving_slots.begin(), moving_slots.end());
  std::shuffle(still.begin(), still.end(), rng);
  LoopOrder out{};
  std::size_t mi = 0, si = 0, ri = moving.size();
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (mi < moving_slots.size() && moving_slots[mi] == i)
      out[i] = moving[mi++];
    else
      out[i] = still[si++], ++ri;
  }
  return out;
}

// Every stored layer report must re-evaluate to the exact same numbers.
void check_reports_reproduce(const SearchResult& r, const std::vector<Network>& benchmarks,
                             const EnergyModel& em) {
  std::map<std::string, const Network*> nets;
  for (const Network& n : benchmarks) nets[n.name] = &n;
  for (const BenchmarkResult& br : r.benchmarks) {
    REQUIRE(nets.count(br.benchmark) == 1);
    const Network& net = *nets[br.benchmark];
    REQUIRE(br.layers.size() == net.layers.size());
    for (const LayerResult& lr : br.layers) {
      auto it = std::find_if(net.layers.begin(), net.layers.end(),
                             [&](const ConvLayer& l) { return l.name == lr.layer; });
      REQUIRE(it != net.layers.end());
      EvalResult check = evaluate(r.accelerator, lr.mapping, *it, em);
      REQUIRE(static_cast<bool>(check));
      CHECK(serialize_report(*check) == serialize_report(lr.report));
    }
  }
}

}  // namespace

TEST_CASE("geomean matches hand examples and rejects bad input") {
  CHECK(geomean({4.0}) == doctest::Approx(4.0));
  CHECK(geomean({1.0, 100.0}) == doctest::Approx(10.0));
  CHECK(geomean({2.0, 4.0, 8.0}) == doctest::Approx(4.0));
  CHECK_THROWS_AS(geomean({}), ConfigError);
  CHECK_THROWS_AS(geomean({1.0, 0.0}), ConfigError);
  CHECK_THROWS_AS(geomean({-2.0}), ConfigError);
}

TEST_CASE("search mode names round-trip") {
  for (SearchMode m : {SearchMode::Full, SearchMode::SizingOnly, SearchMode::IndexEncoding,
                       SearchMode::RandomBaseline})
    CHECK(search_mode_from_name(search_mode_name(m)) == m);
  CHECK_THROWS_AS(search_mode_from_name("greedy"), ConfigError);
}

TEST_CASE("single-trip loops and the PE-level order never change the cost") {
  // This is the property the exhaustive enumerator leans on when it collapses
  // the order space to permutations of the moving dims.
  ConvLayer layer{"t", make_extents(4, 3, 2, 1, 5, 4), 1, 1};
  AcceleratorConfig accel = small_array();
  EnergyModel em;
  std::mt19937_64 rng(99);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    Mapping m = decode_mapping(random_unit_vector(kMapEncodingDims, rng), layer, accel);
    EvalResult base = evaluate(accel, m, layer, em);
    REQUIRE(static_cast<bool>(base));
    TripCounts trips = trip_counts(m, layer, accel);

    Mapping alt = m;
    std::shuffle(alt.pe_order.begin(), alt.pe_order.end(), rng);
    alt.l2_order = shuffle_transparent(m.l2_order, trips.l2, rng);
    alt.l1_order = shuffle_transparent(m.l1_order, trips.l1, rng);
    EvalResult moved = evaluate(accel, alt, layer, em);
    REQUIRE(static_cast<bool>(moved));
    CHECK(serialize_report(*moved) == serialize_report(*base));
    if (alt.l2_order != m.l2_order || alt.l1_order != m.l1_order) ++checked;
  }
  CHECK(checked > 200);  // the shuffles actually exercised different orders
}

TEST_CASE("exhaustive mapping search is a true lower bound on the desk layer") {
  ConvLayer layer{"desk", make_extents(4, 4, 1, 1, 4, 4), 1, 1};
  AcceleratorConfig accel = single_pe();
  EnergyModel em;
  MappingResult best = exhaustive_best_mapping(accel, layer, em);

  // The winner must re-evaluate to its own reported cost.
  EvalResult again = evaluate(accel, best.mapping, layer, em);
  REQUIRE(static_cast<bool>(again));
  CHECK(again->edp == best.report.edp);
  CHECK(serialize_report(*again) == serialize_report(best.report));

  // No decodable mapping may beat it.
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    Mapping m = decode_mapping(random_unit_vector(kMapEncodingDims, rng), layer, accel);
    EvalResult r = evaluate(accel, m, layer, em);
    REQUIRE(static_cast<bool>(r));
    CHECK(r->edp >= best.report.edp);
  }

  // Evolution search lands within 5% of the enumerated optimum.
  SearchBudget budget = tiny_budget(1);
  MappingResult es = search_mapping(accel, layer, budget, 1);
  CHECK(es.report.edp >= best.report.edp - 1e-9);
  CHECK(es.report.edp <= 1.05 * best.report.edp);
  CHECK(es.history.size() == budget.map_generations);
}

TEST_CASE("with roomy buffers the untiled mapping is already optimal") {
  ConvLayer layer{"roomy", make_extents(3, 4, 2, 2, 4, 3), 1, 1};
  AcceleratorConfig accel = single_pe();
  accel.l1_bytes = 1u << 20;
  EnergyModel em;

  Mapping untiled;
  untiled.l2_tile = layer.extent;
  untiled.l1_tile = layer.extent;
  untiled.l2_order = untiled.l1_order = untiled.pe_order = kAllDims;
  EvalResult flat = evaluate(accel, untiled, layer, em);
  REQUIRE(static_cast<bool>(flat));

  MappingResult best = exhaustive_best_mapping(accel, layer, em);
  CHECK(flat->edp == best.report.edp);

  MappingResult es = search_mapping(accel, layer, tiny_budget(3), 3);
  CHECK(es.report.edp <= 1.05 * best.report.edp);
}

TEST_CASE("exhaustive search refuses spaces it cannot enumerate") {
  ConvLayer big{"big", make_extents(64, 64, 3, 3, 56, 56), 1, 1};
  CHECK_THROWS_AS(exhaustive_best_mapping(single_pe(), big, EnergyModel{}), ConfigError);
}

TEST_CASE("mapping search reports infeasibility when nothing fits") {
  AcceleratorConfig cramped = single_pe();
  cramped.l1_bytes = 4;  // three elements at two bytes each cannot fit
  ConvLayer layer{"t", make_extents(4, 4, 1, 1, 4, 4), 1, 1};
  CHECK_THROWS_AS(search_mapping(cramped, layer, tiny_budget(0), 0), InfeasibleError);
  CHECK_THROWS_AS(exhaustive_best_mapping(cramped, layer, EnergyModel{}), InfeasibleError);
}

TEST_CASE("mapping search is deterministic in the seed for both encodings") {
  ConvLayer layer{"t", make_extents(8, 12, 3, 3, 10, 10), 1, 1};
  AcceleratorConfig accel = small_array();
  SearchBudget budget = tiny_budget(0);
  for (bool indexed : {false, true}) {
    MappingResult a = search_mapping(accel, layer, budget, 42, indexed);
    MappingResult b = search_mapping(accel, layer, budget, 42, indexed);
    CHECK(serialize_mapping(a.mapping) == serialize_mapping(b.mapping));
    CHECK(a.report.edp == b.report.edp);
  }
}

TEST_CASE("evaluate_accelerator on one layer equals a direct mapping search") {
  ConvLayer layer{"solo", make_extents(6, 8, 3, 3, 7, 7), 1, 1};
  Network net{"single", {layer}};
  AcceleratorConfig accel = small_array();
  SearchBudget budget = tiny_budget(5);

  AcceleratorReward reward = evaluate_accelerator(accel, {net}, budget, 123);
  MappingResult direct =
      search_mapping(accel, layer, budget, derive_seed(u64{123}, layer.shape_key()));

  REQUIRE(reward.benchmarks.size() == 1);
  REQUIRE(reward.benchmarks[0].layers.size() == 1);
  CHECK(reward.benchmarks[0].layers[0].report.edp == direct.report.edp);
  CHECK(serialize_mapping(reward.benchmarks[0].layers[0].mapping) ==
        serialize_mapping(direct.mapping));
  CHECK(reward.benchmarks[0].edp == direct.report.edp);
  CHECK(reward.geomean_edp == doctest::Approx(direct.report.edp).epsilon(1e-12));
}

TEST_CASE("identical layer shapes share one searched mapping") {
  ConvLayer a{"a", make_extents(6, 8, 3, 3, 7, 7), 1, 1};
  ConvLayer b = a;
  b.name = "b";
  Network net{"twins", {a, b}};
  AcceleratorConfig accel = small_array();

  AcceleratorReward reward = evaluate_accelerator(accel, {net}, tiny_budget(5), 9);
  REQUIRE(reward.benchmarks.size() == 1);
  REQUIRE(reward.benchmarks[0].layers.size() == 2);
  const auto& layers = reward.benchmarks[0].layers;
  CHECK(serialize_mapping(layers[0].mapping) == serialize_mapping(layers[1].mapping));
  CHECK(layers[0].report.edp == layers[1].report.edp);
  CHECK(reward.benchmarks[0].edp == 2.0 * layers[0].report.edp);
}

TEST_CASE("a duplicated benchmark leaves the geomean at the single-network EDP") {
  ConvLayer layer{"solo", make_extents(6, 8, 3, 3, 7, 7), 1, 1};
  Network net1{"copy1", {layer}};
  Network net2{"copy2", {layer}};
  AcceleratorConfig accel = small_array();

  AcceleratorReward reward = evaluate_accelerator(accel, {net1, net2}, tiny_budget(5), 77);
  REQUIRE(reward.benchmarks.size() == 2);
  CHECK(reward.benchmarks[0].edp == reward.benchmarks[1].edp);
  CHECK(reward.geomean_edp == doctest::Approx(reward.benchmarks[0].edp).epsilon(1e-12));
}

TEST_CASE("sum_edp flag switches the per-network aggregate") {
  ConvLayer a{"a", make_extents(6, 8, 3, 3, 7, 7), 1, 1};
  ConvLayer b{"b", make_extents(4, 12, 1, 1, 9, 9), 1, 1};
  Network net{"pair", {a, b}};
  AcceleratorConfig accel = small_array();

  SearchBudget summed = tiny_budget(5);
  summed.sum_edp = true;
  AcceleratorReward rs = evaluate_accelerator(accel, {net}, summed, 3);
  REQUIRE(rs.benchmarks.size() == 1);
  double edp_sum = 0;
  for (const LayerResult& lr : rs.benchmarks[0].layers) edp_sum += lr.report.edp;
  CHECK(rs.benchmarks[0].edp == edp_sum);

  SearchBudget product = summed;
  product.sum_edp = false;
  AcceleratorReward rp = evaluate_accelerator(accel, {net}, product, 3);
  REQUIRE(rp.benchmarks.size() == 1);
  double lat = 0, en = 0;
  for (const LayerResult& lr : rp.benchmarks[0].layers) {
    lat += static_cast<double>(lr.report.latency_cycles);
    en += lr.report.energy_units;
  }
  CHECK(rp.benchmarks[0].edp == lat * en);
  CHECK(rp.benchmarks[0].edp != rs.benchmarks[0].edp);
}

TEST_CASE("an accelerator that cannot run a benchmark scores infinite") {
  AcceleratorConfig cramped = single_pe();
  cramped.l1_bytes = 4;
  ConvLayer layer{"t", make_extents(4, 4, 1, 1, 4, 4), 1, 1};
  Network net{"n", {layer}};
  AcceleratorReward reward = evaluate_accelerator(cramped, {net}, tiny_budget(0), 0);
  CHECK(std::isinf(reward.geomean_edp));
  CHECK(reward.benchmarks.empty());
}

TEST_CASE("accelerator search returns a valid, reproducible, re-checkable result") {
  ResourceConstraint constraint = load_constraint(data_path("constraints/eyeriss.json"));
  std::vector<Network> benchmarks = {load_network(data_path("networks/smoke.json"))};
  SearchBudget budget;
  budget.hw_population = 8;
  budget.hw_generations = 3;
  budget.map_population = 8;
  budget.map_generations = 5;
  budget.seed = 7;
  budget.workers = 2;

  SearchResult r = search_accelerator(constraint, benchmarks, budget, SearchMode::Full);
  CHECK(validate(r.accelerator, constraint).empty());
  CHECK(r.accelerator.name == constraint.name + "-searched");
  CHECK(std::isfinite(r.geomean_edp));
  CHECK(r.geomean_edp > 0);
  CHECK(r.history.size() == budget.hw_generations);
  REQUIRE(r.benchmarks.size() == 1);
  check_reports_reproduce(r, benchmarks, budget.energy);

  SearchResult again = search_accelerator(constraint, benchmarks, budget, SearchMode::Full);
  CHECK(serialize_search_result(again) == serialize_search_result(r));
}

TEST_CASE("ablation modes run inside the same contract") {
  ResourceConstraint constraint = load_constraint(data_path("constraints/eyeriss.json"));
  std::vector<Network> benchmarks = {load_network(data_path("networks/smoke.json"))};
  SearchBudget budget;
  budget.hw_population = 8;
  budget.hw_generations = 3;
  budget.map_population = 8;
  budget.map_generations = 5;
  budget.seed = 11;
  budget.workers = 2;

  SUBCASE("random baseline") {
    SearchResult r =
        search_accelerator(constraint, benchmarks, budget, SearchMode::RandomBaseline);
    CHECK(validate(r.accelerator, constraint).empty());
    CHECK(std::isfinite(r.geomean_edp));
    CHECK(r.history.size() == budget.hw_generations);
  }
  SUBCASE("index encoding") {
    SearchResult r =
        search_accelerator(constraint, benchmarks, budget, SearchMode::IndexEncoding);
    CHECK(validate(r.accelerator, constraint).empty());
    CHECK(std::isfinite(r.geomean_edp));
  }
  SUBCASE("sizing-only keeps the baseline connectivity") {
    AcceleratorConfig baseline =
        load_accelerator(data_path("accelerators/eyeriss-like.json"));
    SearchResult r = search_accelerator(constraint, benchmarks, budget,
                                        SearchMode::SizingOnly, &baseline);
    CHECK(validate(r.accelerator, constraint).empty());
    CHECK(r.accelerator.parallel_dims == baseline.parallel_dims);
    CHECK(r.accelerator.array_size == baseline.array_size);
    CHECK(r.accelerator.num_pes >= baseline.total_lanes());
  }
  SUBCASE("sizing-only without a baseline is a configuration error") {
    CHECK_THROWS_AS(
        search_accelerator(constraint, benchmarks, budget, SearchMode::SizingOnly),
        ConfigError);
  }
  SUBCASE("no benchmarks is a configuration error") {
    CHECK_THROWS_AS(search_accelerator(constraint, {}, budget, SearchMode::Full),
                    ConfigError);
  }
}

TEST_CASE("search results round-trip through JSON and reject tampered totals") {
  ResourceConstraint constraint = load_constraint(data_path("constraints/eyeriss.json"));
  std::vector<Network> benchmarks = {load_network(data_path("networks/smoke.json"))};
  SearchBudget budget;
  budget.hw_population = 6;
  budget.hw_generations = 2;
  budget.map_population = 8;
  budget.map_generations = 4;
  budget.seed = 2;

  SearchResult r = search_accelerator(constraint, benchmarks, budget, SearchMode::Full);
  std::string text = serialize_search_result(r);
  SearchResult back = parse_search_result(text, "round-trip");
  CHECK(serialize_search_result(back) == text);

  // Grow the recorded geomean by 50%: the stored per-benchmark EDPs no longer
  // support it, which is exactly what the evaluate-recheck path must catch.
  std::string tampered = text;
  std::size_t pos = tampered.find("\"geomean_edp\":");
  REQUIRE(pos != std::string::npos);
  std::size_t end = tampered.find_first_of(",\n", pos);
  double value = back.geomean_edp * 1.5;
  tampered.replace(pos, end - pos, "\"geomean_edp\": " + std::to_string(value));
  bool threw = false;
  try {
    parse_search_result(tampered, "tampered");
  } catch (const ConfigError& e) {
    threw = true;
    CHECK(std::string(e.what()).find("geomean") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("summary CSV lists one row per layer") {
  ResourceConstraint constraint = load_constraint(data_path("constraints/eyeriss.json"));
  std::vector<Network> benchmarks = {load_network(data_path("networks/smoke.json"))};
  SearchBudget budget;
  budget.hw_population = 6;
  budget.hw_generations = 2;
  budget.map_population = 8;
  budget.map_generations = 4;
  budget.seed = 2;
  SearchResult r = search_accelerator(constraint, benchmarks, budget, SearchMode::Full);

  std::string csv = summary_csv(r);
  std::size_t rows = std::count(csv.begin(), csv.end(), '\n');
  std::size_t layer_count = 0;
  for (const BenchmarkResult& br : r.benchmarks) layer_count += br.layers.size();
  CHECK(rows == layer_count + 1);
  CHECK(csv.rfind("benchmark,layer,latency,energy,edp\n", 0) == 0);
}

TEST_CASE("co-search meets the accuracy threshold or says why it cannot") {
  ResourceConstraint constraint = load_constraint(data_path("constraints/eyeriss.json"));
  NetSpaceConfig netspace;
  netspace.max_blocks = 6;  // keeps the realized networks small for the test
  AccuracyOracle oracle = make_synthetic_oracle(netspace);
  SearchBudget budget;
  budget.hw_population = 4;
  budget.hw_generations = 2;
  budget.map_population = 8;
  budget.map_generations = 4;
  budget.nas_population = 6;
  budget.nas_generations = 2;
  budget.seed = 13;
  budget.workers = 2;

  SUBCASE("an unreachable threshold fails upfront with the ceiling in the message") {
    bool threw = false;
    try {
      co_search(constraint, netspace, oracle, 0.99, budget);
    } catch (const InfeasibleError& e) {
      threw = true;
      CHECK(std::string(e.what()).find("unreachable") != std::string::npos);
    }
    CHECK(threw);
  }

  SUBCASE("a reachable threshold returns a network that meets it") {
    SearchResult r = co_search(constraint, netspace, oracle, 0.70, budget);
    REQUIRE(r.network.has_value());
    CHECK(r.network_accuracy >= 0.70);
    CHECK(oracle(*r.network) == r.network_accuracy);
    CHECK(validate(r.accelerator, constraint).empty());
    CHECK(std::isfinite(r.geomean_edp));
    REQUIRE(r.benchmarks.size() == 1);
    CHECK(r.benchmarks[0].layers.size() == r.network->realized.layers.size());
    check_reports_reproduce(r, {r.network->realized}, budget.energy);

    std::string text = serialize_search_result(r);
    SearchResult back = parse_search_result(text, "co-search");
    REQUIRE(back.network.has_value());
    CHECK(serialize_search_result(back) == text);
  }
}
