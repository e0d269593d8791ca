// Command-line driver: hardware search, per-layer mapping search, joint
// hardware/network co-search, stored-result re-evaluation, and the
// model-vs-simulator oracle check.
//
// Exit codes: 0 success, 2 bad configuration or usage, 3 search space
// infeasible under the given constraint, 4 oracle or re-evaluation mismatch,
// 1 anything unexpected.

#include <CLI11.hpp>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <sstream>

#include "naas/refsim.hpp"
#include "naas/runio.hpp"
#include "naas/search.hpp"

using namespace naas;

namespace {

struct Opts {
  std::string constraint;
  std::string accelerator;
  std::string baseline;
  std::string result;
  std::string accuracy_table;
  std::string energy_model;
  std::string out = "out";
  std::vector<std::string> benchmarks;
  std::string mode = "full";
  std::string aggregate = "sum-edp";
  double min_accuracy = 0.70;
  u64 trials = 500;
  std::optional<u64> seed;
  SearchBudget budget;
};

void add_common_options(CLI::App* cmd, Opts& o) {
  cmd->add_option("--seed", o.seed, "RNG seed (falls back to NAAS_SEED, then 0)");
  cmd->add_option("--workers", o.budget.workers, "parallel fitness evaluations")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--energy-model", o.energy_model, "per-access energy cost table (JSON)");
  cmd->add_option("--out", o.out, "output directory for run artifacts")->capture_default_str();
}

void add_map_budget(CLI::App* cmd, Opts& o) {
  cmd->add_option("--map-pop", o.budget.map_population, "mapping ES population")
      ->capture_default_str();
  cmd->add_option("--map-gens", o.budget.map_generations, "mapping ES generations")
      ->capture_default_str();
}

void add_hw_budget(CLI::App* cmd, Opts& o) {
  cmd->add_option("--hw-pop", o.budget.hw_population, "hardware ES population")
      ->capture_default_str();
  cmd->add_option("--hw-gens", o.budget.hw_generations, "hardware ES generations")
      ->capture_default_str();
  cmd->add_option("--aggregate", o.aggregate,
                  "per-network EDP aggregation: sum-edp | latency-energy")
      ->capture_default_str();
}

void add_benchmarks(CLI::App* cmd, Opts& o) {
  cmd->add_option("--benchmarks", o.benchmarks, "network description files (repeatable)")
      ->required()
      ->expected(-1);
}

// --seed wins, then the NAAS_SEED environment variable, then 0.
u64 resolve_seed(const std::optional<u64>& cli_seed) {
  if (cli_seed) return *cli_seed;
  const char* env = std::getenv("NAAS_SEED");
  if (!env || !*env) return 0;
  try {
    std::size_t pos = 0;
    unsigned long long v = std::stoull(env, &pos);
    if (env[pos] != '\0') throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string("NAAS_SEED is not an unsigned integer: ") + env);
  }
}

void finish_budget(Opts& o) {
  o.budget.seed = resolve_seed(o.seed);
  if (!o.energy_model.empty()) o.budget.energy = load_energy_model(o.energy_model);
  if (o.aggregate == "sum-edp")
    o.budget.sum_edp = true;
  else if (o.aggregate == "latency-energy")
    o.budget.sum_edp = false;
  else
    throw ConfigError("unknown --aggregate '" + o.aggregate +
                      "' (expected sum-edp or latency-energy)");
}

std::vector<Network> load_benchmarks(const std::vector<std::string>& paths) {
  std::vector<Network> nets;
  for (const std::string& path : paths) {
    std::vector<std::string> warnings;
    nets.push_back(load_network(path, &warnings));
    for (const std::string& w : warnings) std::cerr << "warning: " << path << ": " << w << "\n";
  }
  return nets;
}

std::string describe_accelerator(const AcceleratorConfig& a) {
  std::ostringstream os;
  os << a.num_pes << " PEs, array ";
  for (std::size_t i = 0; i < a.array_size.size(); ++i)
    os << (i ? "x" : "") << a.array_size[i];
  os << " over (";
  for (std::size_t i = 0; i < a.parallel_dims.size(); ++i) {
    os << (i ? ", " : "") << dim_name(a.parallel_dims[i]) << ":"
       << comm_kind_name(parallel_semantics(a.parallel_dims[i]));
  }
  os << "), L1 " << a.l1_bytes << " B/PE, L2 " << a.l2_bytes << " B, " << a.bandwidth
     << " B/cycle";
  return os.str();
}

void print_result_summary(const std::string& tag, const SearchResult& r) {
  std::cout << "[" << tag << "] geomean EDP " << std::scientific << std::setprecision(4)
            << r.geomean_edp << std::defaultfloat << "\n";
  std::cout << "  accelerator: " << describe_accelerator(r.accelerator) << "\n";
  for (const BenchmarkResult& br : r.benchmarks) {
    double util_sum = 0;
    for (const LayerResult& lr : br.layers) util_sum += lr.report.utilization;
    std::cout << "  " << br.benchmark << ": edp " << std::scientific << std::setprecision(4)
              << br.edp << std::defaultfloat << ", " << br.layers.size()
              << " layer(s), mean utilization " << std::fixed << std::setprecision(3)
              << (br.layers.empty() ? 0.0 : util_sum / double(br.layers.size()))
              << std::defaultfloat << "\n";
  }
  if (r.network) {
    std::cout << "  network: width x" << r.network->width_multiplier << ", "
              << r.network->active_blocks << " blocks, " << r.network->image_size << "px input, "
              << r.network->realized.layers.size() << " conv layers, accuracy " << std::fixed
              << std::setprecision(4) << r.network_accuracy << std::defaultfloat << "\n";
  }
}

std::string iso_timestamp_utc() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Everything time- or host-dependent lives here so the result/summary/history
// files stay byte-identical across reruns of the same seed.
void write_metadata(const std::string& out_dir, const std::string& command, const Opts& o,
                    const std::vector<std::string>& tags) {
  nlohmann::ordered_json doc;
  doc["command"] = command;
  doc["generated_at"] = iso_timestamp_utc();
  doc["seed"] = o.budget.seed;
  doc["runs"] = tags;
  write_file(out_dir + "/metadata.json", doc.dump(2) + "\n");
}

int run_search_hw(Opts& o) {
  finish_budget(o);
  SearchMode mode = search_mode_from_name(o.mode);
  ResourceConstraint constraint = load_constraint(o.constraint);
  std::vector<Network> nets = load_benchmarks(o.benchmarks);
  std::optional<AcceleratorConfig> baseline;
  if (!o.baseline.empty()) baseline = load_accelerator(o.baseline);
  if (mode == SearchMode::SizingOnly && !baseline)
    throw ConfigError("--mode sizing-only needs --baseline for the frozen connectivity");

  SearchResult r =
      search_accelerator(constraint, nets, o.budget, mode, baseline ? &*baseline : nullptr);
  const std::string tag = search_mode_name(mode);
  write_run_bundle(o.out, tag, r);
  write_metadata(o.out, "search-hw", o, {tag});
  emit_plots(o.out);
  print_result_summary(tag, r);
  std::cout << "artifacts in " << o.out << "/\n";
  return 0;
}

int run_search_map(Opts& o) {
  finish_budget(o);
  bool indexed = false;
  if (o.mode == "index-encoding")
    indexed = true;
  else if (o.mode != "full")
    throw ConfigError("search-map supports --mode full or index-encoding, got '" + o.mode + "'");

  AcceleratorConfig accel = load_accelerator(o.accelerator);
  std::vector<Network> nets = load_benchmarks(o.benchmarks);

  SearchResult r;
  r.accelerator = accel;
  std::map<std::string, MappingResult> by_shape;
  std::vector<double> edps;
  for (const Network& net : nets) {
    BenchmarkResult br;
    br.benchmark = net.name;
    double edp_sum = 0, lat_sum = 0, en_sum = 0;
    for (const ConvLayer& layer : net.layers) {
      const std::string key = layer.shape_key();
      auto it = by_shape.find(key);
      if (it == by_shape.end()) {
        MappingResult mr =
            search_mapping(accel, layer, o.budget, derive_seed(o.budget.seed, key), indexed);
        if (r.history.empty()) r.history = mr.history;
        it = by_shape.emplace(key, std::move(mr)).first;
      }
      br.layers.push_back({layer.name, it->second.mapping, it->second.report});
      edp_sum += it->second.report.edp;
      lat_sum += double(it->second.report.latency_cycles);
      en_sum += it->second.report.energy_units;
    }
    br.edp = o.budget.sum_edp ? edp_sum : lat_sum * en_sum;
    edps.push_back(br.edp);
    r.benchmarks.push_back(std::move(br));
  }
  r.geomean_edp = geomean(edps);

  write_run_bundle(o.out, "map", r);
  write_metadata(o.out, "search-map", o, {"map"});
  emit_plots(o.out);
  print_result_summary("map", r);
  std::cout << "artifacts in " << o.out << "/\n";
  return 0;
}

int run_co_search(Opts& o) {
  finish_budget(o);
  ResourceConstraint constraint = load_constraint(o.constraint);
  NetSpaceConfig netspace;
  AccuracyOracle oracle = o.accuracy_table.empty()
                              ? make_synthetic_oracle(netspace)
                              : load_accuracy_table(o.accuracy_table, netspace);

  SearchResult r = co_search(constraint, netspace, oracle, o.min_accuracy, o.budget);
  write_run_bundle(o.out, "co", r);
  write_metadata(o.out, "co-search", o, {"co"});
  emit_plots(o.out);
  print_result_summary("co", r);
  std::cout << "artifacts in " << o.out << "/\n";
  return 0;
}

int run_evaluate(Opts& o) {
  finish_budget(o);
  SearchResult stored = parse_search_result(read_file(o.result), o.result);
  std::map<std::string, Network> nets;
  for (Network& net : load_benchmarks(o.benchmarks)) nets.emplace(net.name, std::move(net));

  u64 checked = 0;
  std::vector<std::string> mismatches;
  for (const BenchmarkResult& br : stored.benchmarks) {
    auto net_it = nets.find(br.benchmark);
    if (net_it == nets.end())
      throw ConfigError("result references benchmark '" + br.benchmark +
                        "' but no loaded network has that name");
    std::map<std::string, const ConvLayer*> layers;
    for (const ConvLayer& l : net_it->second.layers) layers.emplace(l.name, &l);
    for (const LayerResult& lr : br.layers) {
      auto lay_it = layers.find(lr.layer);
      if (lay_it == layers.end())
        throw ConfigError("result references layer '" + lr.layer + "' missing from " +
                          br.benchmark);
      ++checked;
      EvalResult ev = evaluate(stored.accelerator, lr.mapping, *lay_it->second, o.budget.energy);
      if (!ev) {
        mismatches.push_back(br.benchmark + "/" + lr.layer +
                             ": stored mapping now rejected: " + ev.reject_reason);
      } else if (serialize_report(*ev) != serialize_report(lr.report)) {
        mismatches.push_back(br.benchmark + "/" + lr.layer + ": report fields changed");
      }
    }
  }
  std::cout << "re-evaluated " << checked << " layer(s) across " << stored.benchmarks.size()
            << " benchmark(s): " << mismatches.size() << " mismatch(es)\n";
  for (std::size_t i = 0; i < mismatches.size() && i < 10; ++i)
    std::cout << "  " << mismatches[i] << "\n";
  return mismatches.empty() ? 0 : 4;
}

int run_oracle_check(Opts& o) {
  u64 seed = resolve_seed(o.seed);
  OracleCheckReport rep = oracle_check(o.trials, seed);
  std::cout << "oracle check: " << rep.trials << " model-vs-simulator trials, " << rep.mismatches
            << " mismatch(es)\n";
  for (const std::string& d : rep.details) std::cout << "  " << d << "\n";
  return rep.mismatches == 0 ? 0 : 4;
}

int run_ablation(Opts& o) {
  finish_budget(o);
  ResourceConstraint constraint = load_constraint(o.constraint);
  std::vector<Network> nets = load_benchmarks(o.benchmarks);
  AcceleratorConfig baseline = load_accelerator(o.baseline);

  std::vector<std::string> tags;
  std::vector<std::pair<std::string, double>> table;
  for (SearchMode mode : {SearchMode::Full, SearchMode::SizingOnly, SearchMode::IndexEncoding,
                          SearchMode::RandomBaseline}) {
    SearchResult r = search_accelerator(constraint, nets, o.budget, mode, &baseline);
    const std::string tag = search_mode_name(mode);
    write_run_bundle(o.out, tag, r);
    print_result_summary(tag, r);
    tags.push_back(tag);
    table.emplace_back(tag, r.geomean_edp);
  }
  write_metadata(o.out, "ablation", o, tags);
  emit_plots(o.out);

  double full_edp = table.front().second;
  std::cout << "mode comparison (geomean EDP, ratio vs full):\n";
  for (const auto& [tag, edp] : table) {
    std::cout << "  " << std::left << std::setw(16) << tag << std::right << std::scientific
              << std::setprecision(4) << edp << std::defaultfloat << "  x" << std::fixed
              << std::setprecision(3) << (edp / full_edp) << std::defaultfloat << "\n";
  }
  std::cout << "artifacts in " << o.out << "/\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolutionary design-space search for convolution accelerators"};
  app.require_subcommand(1);
  Opts o;

  CLI::App* hw = app.add_subcommand(
      "search-hw", "search accelerator configs (and their mappings) under a resource budget");
  hw->add_option("--constraint", o.constraint, "resource constraint file")->required();
  add_benchmarks(hw, o);
  hw->add_option("--mode", o.mode,
                 "full | sizing-only | index-encoding | random-baseline")
      ->capture_default_str();
  hw->add_option("--baseline", o.baseline,
                 "accelerator whose connectivity sizing-only mode keeps");
  add_hw_budget(hw, o);
  add_map_budget(hw, o);
  add_common_options(hw, o);

  CLI::App* mp = app.add_subcommand("search-map",
                                    "search per-layer mappings for a fixed accelerator");
  mp->add_option("--accelerator", o.accelerator, "accelerator description file")->required();
  add_benchmarks(mp, o);
  mp->add_option("--mode", o.mode, "full | index-encoding")->capture_default_str();
  mp->add_option("--aggregate", o.aggregate,
                 "per-network EDP aggregation: sum-edp | latency-energy")
      ->capture_default_str();
  add_map_budget(mp, o);
  add_common_options(mp, o);

  CLI::App* co = app.add_subcommand(
      "co-search", "jointly search accelerator and network under an accuracy floor");
  co->add_option("--constraint", o.constraint, "resource constraint file")->required();
  co->add_option("--min-accuracy", o.min_accuracy, "reject networks below this accuracy")
      ->capture_default_str();
  co->add_option("--accuracy-table", o.accuracy_table,
                 "JSON candidate-key -> accuracy table (synthetic surrogate otherwise)");
  add_hw_budget(co, o);
  add_map_budget(co, o);
  co->add_option("--nas-pop", o.budget.nas_population, "network ES population")
      ->capture_default_str();
  co->add_option("--nas-gens", o.budget.nas_generations, "network ES generations")
      ->capture_default_str();
  add_common_options(co, o);

  CLI::App* ev = app.add_subcommand(
      "evaluate", "re-evaluate a stored result's mappings and verify its reports");
  ev->add_option("--result", o.result, "result_*.json from an earlier run")->required();
  add_benchmarks(ev, o);
  ev->add_option("--energy-model", o.energy_model,
                 "energy table the original run used (defaults otherwise)");

  CLI::App* oc = app.add_subcommand(
      "oracle-check", "compare the analytical model against the reference simulator");
  oc->add_option("--trials", o.trials, "valid pairs per probe layer")->capture_default_str();
  oc->add_option("--seed", o.seed, "RNG seed (falls back to NAAS_SEED, then 0)");

  CLI::App* ab = app.add_subcommand(
      "ablation", "run all four search modes on one constraint and compare them");
  ab->add_option("--constraint", o.constraint, "resource constraint file")->required();
  add_benchmarks(ab, o);
  ab->add_option("--baseline", o.baseline, "accelerator for sizing-only connectivity")
      ->required();
  add_hw_budget(ab, o);
  add_map_budget(ab, o);
  add_common_options(ab, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(hw)) return run_search_hw(o);
    if (app.got_subcommand(mp)) return run_search_map(o);
    if (app.got_subcommand(co)) return run_co_search(o);
    if (app.got_subcommand(ev)) return run_evaluate(o);
    if (app.got_subcommand(oc)) return run_oracle_check(o);
    if (app.got_subcommand(ab)) return run_ablation(o);
    throw ConfigError("no subcommand selected");
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
