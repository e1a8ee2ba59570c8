#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "aoc/report.hpp"
#include "aoc/scenario.hpp"

namespace fs = std::filesystem;

namespace {

int write_output(const aoc::RunOutput& out, const std::string& out_dir) {
  fs::create_directories(out_dir);
  for (const auto& [name, content] : out.files) {
    fs::path p = fs::path(out_dir) / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) {
      std::fprintf(stderr, "error: cannot write %s\n", p.string().c_str());
      return 2;
    }
    f << content;
    std::fprintf(stderr, "wrote %s\n", p.string().c_str());
  }
  for (const std::string& w : out.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  if (!out.dominance_ok) {
    std::fprintf(stderr, "error: simulated quantile exceeds the analytic bound\n");
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"age-of-information bounds from min-plus network calculus, with a trace-level "
               "validation simulator"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir = ".", preset_name;
  aoc::RunOptions opt;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub, bool needs_scenario) {
    if (needs_scenario)
      sub->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    sub->add_option("--out", out_dir, "output directory (default: current)");
    sub->add_option("--seed", seed, "override the scenario's simulation seed");
    sub->add_flag("--deterministic", opt.deterministic,
                  "suppress timestamps and runtime columns for byte-stable output");
    return sub;
  };

  CLI::App* c_bound = add_common(
      app.add_subcommand("bound", "compute analytic bounds over the scenario grid"), true);
  CLI::App* c_sim = add_common(
      app.add_subcommand("simulate", "run the trace simulator and emit samples + quantiles"),
      true);
  CLI::App* c_cmp = add_common(
      app.add_subcommand("compare", "bounds vs simulated quantiles with dominance flags"), true);
  CLI::App* c_sweep = add_common(
      app.add_subcommand("sweep", "bound over the grid, points dispatched concurrently "
                                  "(AOC_THREADS caps the pool)"),
      true);
  CLI::App* c_preset = add_common(
      app.add_subcommand("preset", "write a built-in scenario and its results"), false);
  c_preset->add_option("--name", preset_name, "preset name: fig3|fig4|fig5|fig6")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // help/version exit 0, parse failures are input errors
  }

  for (CLI::App* sub : {c_bound, c_sim, c_cmp, c_sweep, c_preset})
    if (sub->parsed() && sub->count("--seed") > 0) {
      opt.has_seed = true;
      opt.seed = seed;
    }

  try {
    aoc::RunOutput out;
    if (c_preset->parsed()) {
      out = aoc::run_preset(preset_name, opt);
    } else {
      aoc::Scenario sc = aoc::load_scenario(scenario_path);
      if (c_bound->parsed())
        out = aoc::run_bound(sc, opt);
      else if (c_sim->parsed())
        out = aoc::run_simulate(sc, opt);
      else if (c_cmp->parsed())
        out = aoc::run_compare(sc, opt);
      else
        out = aoc::run_sweep(sc, opt);
    }
    return write_output(out, out_dir);
  } catch (const aoc::ScenarioError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
