#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace aoc {

// Parse/validation failure; the message names the offending field.
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SourceKind { Periodic, Poisson };
enum class ServiceKind { LatencyRate, MarkovOnOff };

struct SimSpec {
  double horizon_ms = 0.0;  // 0 = derive from target_samples
  std::uint64_t seed = 1;
  std::uint64_t target_samples = 100000;  // informative departures per point
  double error_p = 0.0;
  int error_run_cap = 0;
  std::uint64_t max_sample_rows = 100000;  // cap on emitted per-sample rows
};

// A scenario is a sweep grid: every combination of (w, m, epsilon) is one
// experiment point. Units are kb and ms throughout.
struct Scenario {
  std::string id;

  SourceKind source = SourceKind::Periodic;
  double l_kb = 1.0;
  std::vector<double> w_ms;  // update interval (periodic) or mean gap (poisson)
  double phase_ms = 0.0;

  ServiceKind service = ServiceKind::LatencyRate;
  double p_on = 0.0, gamma_kb_ms = 0.0, beta_ms = 0.0;  // markov_onoff
  double rate_kb_ms = 0.0, latency_ms = 0.0;            // latency_rate

  bool has_loss = false;
  double eta = 0.0;

  std::vector<int> priority_m{0};
  std::vector<double> epsilon;

  bool has_sim = false;
  SimSpec sim;
};

// Parse and validate scenario JSON; throws ScenarioError with a diagnostic
// naming the offending field.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);

// Canonical serialization; parse(scenario_to_json(s)) reproduces s exactly.
std::string scenario_to_json(const Scenario& sc);

// Built-in parameter sets: fig3, fig4, fig5, fig6. Unknown name throws.
Scenario preset_scenario(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace aoc
