#include "naas/runio.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "naas/common.hpp"
#include "naas/evolve.hpp"

namespace fs = std::filesystem;

namespace naas {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  out << content;
  if (!out) throw ConfigError("write failed for " + path);
}

void write_run_bundle(const std::string& out_dir, const std::string& tag,
                      const SearchResult& result) {
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_file((dir / ("result_" + tag + ".json")).string(), serialize_search_result(result));
  write_file((dir / ("summary_" + tag + ".csv")).string(), summary_csv(result));
  write_file((dir / ("history_" + tag + ".csv")).string(), history_csv(result.history));
}

namespace {

// Returns the file names in dir that look like prefix<tag>suffix, sorted so
// the emitted CSVs are ordered the same way on every run.
std::vector<std::pair<std::string, std::string>> tagged_files(const fs::path& dir,
                                                              const std::string& prefix,
                                                              const std::string& suffix) {
  std::vector<std::pair<std::string, std::string>> found;  // (tag, path)
  if (!fs::is_directory(dir)) return found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() <= prefix.size() + suffix.size()) continue;
    if (name.compare(0, prefix.size(), prefix) != 0) continue;
    if (name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) continue;
    const std::string tag = name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
    found.emplace_back(tag, entry.path().string());
  }
  std::sort(found.begin(), found.end());
  return found;
}

}  // namespace

void emit_plots(const std::string& result_dir) {
  const fs::path dir(result_dir);
  const auto histories = tagged_files(dir, "history_", ".csv");
  const auto results = tagged_files(dir, "result_", ".json");
  if (histories.empty() && results.empty())
    throw ConfigError(result_dir + ": no history_*.csv or result_*.json to plot");

  if (!histories.empty()) {
    std::ostringstream curve;
    curve << "generation,mode,fitness_mean,fitness_min\n";
    for (const auto& [tag, path] : histories) {
      std::istringstream rows(read_file(path));
      std::string line;
      std::getline(rows, line);  // header
      while (std::getline(rows, line)) {
        if (line.empty()) continue;
        // history rows are generation,fitness_mean,fitness_min,rejection_count
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        const auto c3 = line.find(',', c2 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos || c3 == std::string::npos)
          throw ConfigError(path + ": malformed history row: " + line);
        curve << line.substr(0, c1) << ',' << tag << ',' << line.substr(c1 + 1, c3 - c1 - 1)
              << '\n';
      }
    }
    write_file((dir / "learning_curve.csv").string(), curve.str());
  }

  if (!results.empty()) {
    std::ostringstream cmp;
    cmp << "benchmark,mode,edp\n";
    for (const auto& [tag, path] : results) {
      const SearchResult r = parse_search_result(read_file(path), path);
      for (const BenchmarkResult& br : r.benchmarks)
        cmp << br.benchmark << ',' << tag << ',' << br.edp << '\n';
    }
    write_file((dir / "comparison.csv").string(), cmp.str());
  }
}

}  // namespace naas
