#pragma once

#include <string>
#include <vector>

#include "naas/search.hpp"

namespace naas {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Writes the standard artifact bundle for one search run into out_dir:
// result_<tag>.json, summary_<tag>.csv, history_<tag>.csv. The tag is the
// search mode (or "map"/"co" for the single-level commands), so several runs
// can share a directory and be compared.
void write_run_bundle(const std::string& out_dir, const std::string& tag,
                      const SearchResult& result);

// Re-derives plot-ready CSVs from whatever run bundles sit in result_dir:
// learning_curve.csv (generation, mode, fitness mean/min) from history_*.csv
// and comparison.csv (benchmark, mode, edp) from result_*.json. Throws
// ConfigError when the directory holds neither.
void emit_plots(const std::string& result_dir);

}  // namespace naas
