#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "aoc/bounds.hpp"
#include "aoc/scenario.hpp"

namespace aoc {

// RFC-4180-style table with '#'-prefixed comment lines above the header row.
// Numeric cells are rendered with the shortest round-tripping representation,
// so parse -> emit is byte-identical.
struct Csv {
  std::vector<std::string> comments;  // without the leading "# "
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

std::string fmt_num(double x);
double parse_num(const std::string& cell);  // throws on garbage

std::string csv_to_string(const Csv& table);
Csv csv_parse(const std::string& text);  // throws ScenarioError on ragged rows

struct RunOptions {
  bool deterministic = false;  // suppress timestamps and runtime columns
  bool has_seed = false;       // --seed override for sim-based commands
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = AOC_THREADS env or hardware concurrency
};

int resolve_threads(int requested);

// One experiment point of the scenario grid, in deterministic scenario order
// (w outer, m middle, epsilon inner).
struct BoundPoint {
  double w = 0.0;
  int m = 0;
  double eps = 0.0;
  BoundResult res;
};

std::vector<BoundPoint> compute_bound_grid(const Scenario& sc, int threads);

// Files are returned as (name, content) pairs; the CLI decides where they
// land, tests read them in memory.
struct RunOutput {
  std::vector<std::pair<std::string, std::string>> files;
  std::vector<std::string> warnings;
  bool dominance_ok = true;
};

RunOutput run_bound(const Scenario& sc, const RunOptions& opt);    // sequential
RunOutput run_sweep(const Scenario& sc, const RunOptions& opt);    // concurrent
RunOutput run_simulate(const Scenario& sc, const RunOptions& opt);
RunOutput run_compare(const Scenario& sc, const RunOptions& opt);
RunOutput run_preset(const std::string& name, const RunOptions& opt);

}  // namespace aoc
