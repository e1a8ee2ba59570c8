#include <doctest.h>

#include <cmath>
#include <string>

#include "aoc/report.hpp"
#include "aoc/scenario.hpp"

using namespace aoc;

namespace {

std::string scenario_json(const std::string& service, const std::string& extra = "") {
  return R"({
    "id": "t",
    "source": {"type": "periodic", "l_kb": 1.0, "w_ms": 2.0},
    "service": )" + service + R"(,
    "epsilon": [0.001])" + extra + "\n}";
}

const char* kMarkov = R"({"type": "markov_onoff", "p_on": 0.9, "gamma_kb_ms": 1.0, "beta_ms": 8.0})";
const char* kRate = R"({"type": "latency_rate", "rate_kb_ms": 1.0, "latency_ms": 0.5})";

void check_fails_naming(const std::string& json, const std::string& field) {
  bool threw = false;
  std::string what;
  try {
    parse_scenario(json);
  } catch (const ScenarioError& e) {
    threw = true;
    what = e.what();
  }
  INFO("expected diagnostic naming '", field, "', got: ", what);
  REQUIRE(threw);
  CHECK(what.find(field) != std::string::npos);
}

const std::string kBoundCols =
    "scenario,w_ms,epsilon,m,delta_eps_ms,v_eps_ms,theta,r,tau0,b,feasible";

double cell(const Csv& t, std::size_t row, const std::string& col) {
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    if (t.columns[i] == col) return parse_num(t.rows.at(row).at(i));
  throw std::runtime_error("no column " + col);
}

}  // namespace

TEST_CASE("scenario parsing and canonical round-trip") {
  Scenario sc = parse_scenario(scenario_json(kMarkov, R"(, "priority_m": [0, 10],
    "sim": {"seed": 7, "target_samples": 5000, "error_p": 0.1, "error_run_cap": 2})"));
  CHECK(sc.id == "t");
  CHECK(sc.source == SourceKind::Periodic);
  CHECK(sc.w_ms == std::vector<double>{2.0});
  CHECK(sc.service == ServiceKind::MarkovOnOff);
  CHECK(sc.beta_ms == 8.0);
  CHECK(sc.priority_m == std::vector<int>{0, 10});
  CHECK(sc.epsilon == std::vector<double>{0.001});
  REQUIRE(sc.has_sim);
  CHECK(sc.sim.seed == 7);
  CHECK(sc.sim.target_samples == 5000);
  CHECK(sc.sim.error_run_cap == 2);

  std::string text = scenario_to_json(sc);
  Scenario back = parse_scenario(text);
  CHECK(scenario_to_json(back) == text);
  CHECK(back.sim.error_p == sc.sim.error_p);
  CHECK(back.w_ms == sc.w_ms);

  // defaulted epsilon for the deterministic closed form
  Scenario det = parse_scenario(R"({
    "id": "d",
    "source": {"type": "periodic", "l_kb": 1.0, "w_ms": [1.0, 2.0]},
    "service": {"type": "latency_rate", "rate_kb_ms": 1.0}
  })");
  CHECK(det.epsilon == std::vector<double>{0.0});
  CHECK(det.latency_ms == 0.0);
  CHECK(parse_scenario(scenario_to_json(det)).epsilon == det.epsilon);
}

TEST_CASE("scenario diagnostics name the offending field") {
  check_fails_naming("{", "malformed");
  check_fails_naming(R"({"source": {}})", "id");
  check_fails_naming(R"({"id": "x"})", "source");
  check_fails_naming(R"({"id":"x","source":{"type":"burst","l_kb":1,"w_ms":1},
                       "service":)" + std::string(kRate) + "}", "source.type");
  std::string bad_l = scenario_json(kMarkov);
  bad_l.replace(bad_l.find("\"l_kb\": 1.0"), 11, "\"l_kb\": -1.5");
  check_fails_naming(bad_l, "source.l_kb");
  check_fails_naming(R"({"id":"x","source":{"type":"periodic","l_kb":1,"w_ms":[]},
                       "service":)" + std::string(kRate) + "}", "source.w_ms");
  check_fails_naming(R"({"id":"x","source":{"type":"periodic","l_kb":1,"w_ms":[2,0]},
                       "service":)" + std::string(kRate) + "}", "source.w_ms");
  check_fails_naming(R"({"id":"x","source":{"type":"poisson","l_kb":1,"w_ms":2,"phase_ms":0.5},
                       "service":)" + std::string(kRate) + R"(,"epsilon":0.01})",
                     "source.phase_ms");
  check_fails_naming(R"({"id":"x","source":{"type":"poisson","l_kb":1,"w_ms":2},
                       "service":)" + std::string(kMarkov) + R"(,"epsilon":0.01})",
                     "service.type");
  check_fails_naming(scenario_json(kMarkov, R"(, "loss": {"eta": 2})"), "loss");
  check_fails_naming(R"({"id":"x","source":{"type":"poisson","l_kb":1,"w_ms":2},
                       "service":)" + std::string(kRate) +
                     R"(,"epsilon":0.01,"loss":{"eta":1}})", "loss");
  check_fails_naming(scenario_json(kRate, R"(, "priority_m": 3)"), "priority_m");
  check_fails_naming(scenario_json(kMarkov, R"(, "priority_m": -1)"), "priority_m");
  check_fails_naming(scenario_json(kMarkov).replace(scenario_json(kMarkov).find("0.001"), 5, "1.5  "),
                     "epsilon");
  check_fails_naming(scenario_json(kMarkov, R"(, "typo_field": 1)"), "typo_field");
  check_fails_naming(scenario_json(kMarkov, R"(, "sim": {"error_p": 1.0})"), "sim.error_p");
  check_fails_naming(scenario_json(kMarkov, R"(, "sim": {"target_samples": 0})"),
                     "sim.target_samples");
  check_fails_naming(R"({"id":"x","source":{"type":"periodic","l_kb":1,"w_ms":[2,4],
                       "phase_ms":3},"service":)" + std::string(kRate) + "}",
                     "source.phase_ms");
}

TEST_CASE("presets") {
  Scenario f3 = preset_scenario("fig3");
  CHECK(f3.w_ms.size() == 25);
  CHECK(f3.w_ms.front() == doctest::Approx(1.0));
  CHECK(f3.w_ms.back() == doctest::Approx(64.0));
  CHECK(f3.epsilon == std::vector<double>{1e-3, 1e-6, 1e-9});
  CHECK(f3.service == ServiceKind::MarkovOnOff);

  Scenario f4 = preset_scenario("fig4");
  CHECK(f4.has_sim);
  CHECK(f4.w_ms == std::vector<double>{2.0, 4.0, 8.0, 16.0});

  Scenario f5 = preset_scenario("fig5");
  CHECK(f5.source == SourceKind::Poisson);
  CHECK(f5.w_ms.front() == doctest::Approx(0.5));
  CHECK(f5.w_ms.back() == doctest::Approx(64.0));

  Scenario f6 = preset_scenario("fig6");
  CHECK(f6.priority_m == std::vector<int>{0, 10, 20, 30});
  CHECK(f6.epsilon == std::vector<double>{1e-6});
  CHECK(f6.w_ms == f3.w_ms);  // the m=0 curve must ride on the same grid

  CHECK_THROWS_AS(preset_scenario("fig7"), ScenarioError);
  for (const std::string& n : preset_names()) CHECK_NOTHROW(preset_scenario(n));
}

TEST_CASE("csv emission parses back byte-identically") {
  Csv t;
  t.comments = {"scenario: demo", "curve: epsilon=1e-06"};
  t.columns = {"name", "x", "y"};
  t.rows = {{"plain", fmt_num(1.5), fmt_num(1e-9)},
            {"with,comma", fmt_num(-0.25), fmt_num(kInf)},
            {"with\"quote", fmt_num(12345.678901234567), fmt_num(0.0)}};
  std::string text = csv_to_string(t);
  Csv back = csv_parse(text);
  CHECK(back.comments == t.comments);
  CHECK(back.columns == t.columns);
  CHECK(back.rows == t.rows);
  CHECK(csv_to_string(back) == text);

  CHECK(parse_num(fmt_num(0.1)) == 0.1);
  CHECK(parse_num(fmt_num(kInf)) == kInf);
  CHECK(std::isinf(parse_num("-inf")));
  CHECK_THROWS_AS(parse_num("12x"), ScenarioError);
  CHECK_THROWS_AS(csv_parse("a,b\n1,2,3\n"), ScenarioError);
  CHECK_THROWS_AS(csv_parse(""), ScenarioError);
}

TEST_CASE("run_bound: deterministic closed form and statistical equivalence") {
  RunOptions det;
  det.deterministic = true;

  Scenario sc = parse_scenario(R"({
    "id": "det",
    "source": {"type": "periodic", "l_kb": 1.0, "w_ms": [1.0, 2.0, 4.0]},
    "service": {"type": "latency_rate", "rate_kb_ms": 2.0, "latency_ms": 0.5}
  })");
  RunOutput out = run_bound(sc, det);
  REQUIRE(out.files.size() == 1);
  CHECK(out.files[0].first == "det_bound.csv");
  Csv table = csv_parse(out.files[0].second);
  REQUIRE(table.rows.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    double w = cell(table, k, "w_ms");
    CHECK(cell(table, k, "delta_eps_ms") == doctest::Approx(w + 0.5 + 0.5));  // w + t0 + l/c
    CHECK(cell(table, k, "v_eps_ms") == doctest::Approx(1.0));
    CHECK(cell(table, k, "feasible") == 1.0);
  }

  Scenario lossy = parse_scenario(R"({
    "id": "lossy",
    "source": {"type": "periodic", "l_kb": 1.0, "w_ms": 2.0},
    "service": {"type": "latency_rate", "rate_kb_ms": 1.0},
    "loss": {"eta": 2}
  })");
  Csv lt = csv_parse(run_bound(lossy, det).files[0].second);
  CHECK(cell(lt, 0, "delta_eps_ms") == doctest::Approx(3.0 * 2.0 + 1.0));  // (eta+1)w + l/c

  Scenario mk = parse_scenario(scenario_json(kMarkov));
  Csv mt = csv_parse(run_bound(mk, det).files[0].second);
  BoundResult direct = optimize_periodic_bound(
      PeriodicSource(1.0, 2.0), markov_mgf_envelope(markov_from_stats(0.9, 1.0, 8.0)), 1e-3);
  CHECK(cell(mt, 0, "delta_eps_ms") == direct.delta_eps);
  CHECK(cell(mt, 0, "v_eps_ms") == direct.v_eps);
  CHECK(cell(mt, 0, "theta") == direct.params.theta);

  Scenario ps = parse_scenario(R"({
    "id": "pois",
    "source": {"type": "poisson", "l_kb": 1.0, "w_ms": 4.0},
    "service": {"type": "latency_rate", "rate_kb_ms": 1.0},
    "epsilon": [1e-6]
  })");
  Csv pt = csv_parse(run_bound(ps, det).files[0].second);
  BoundResult pdirect = optimize_random_arrivals_bound(PoissonSource(1.0, 4.0), 1.0, 1.0, 1e-6);
  CHECK(cell(pt, 0, "delta_eps_ms") == pdirect.delta_eps);
}

TEST_CASE("run_sweep: concurrency does not change a byte") {
  Scenario sc = parse_scenario(R"({
    "id": "sweep",
    "source": {"type": "periodic", "l_kb": 1.0, "w_ms": [4.0, 8.0, 16.0, 32.0]},
    "service": {"type": "markov_onoff", "p_on": 0.9, "gamma_kb_ms": 1.0, "beta_ms": 8.0},
    "epsilon": [0.001, 1e-06],
    "priority_m": [0, 5]
  })");
  RunOptions one;
  one.deterministic = true;
  one.threads = 1;
  RunOptions many = one;
  many.threads = 4;
  RunOutput a = run_sweep(sc, one);
  RunOutput b = run_sweep(sc, many);
  REQUIRE(a.files.size() == 1);
  CHECK(a.files[0].second == b.files[0].second);
  CHECK(run_bound(sc, one).files[0].second == a.files[0].second);

  Csv table = csv_parse(a.files[0].second);
  std::string joined;
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    joined += (i ? "," : "") + table.columns[i];
  CHECK(joined == kBoundCols);
  CHECK(table.rows.size() == 4 * 2 * 2);
}

TEST_CASE("run_simulate: attained deterministic bound, reproducibility, warnings") {
  RunOptions det;
  det.deterministic = true;
  Scenario sc = parse_scenario(R"({
    "id": "att",
    "source": {"type": "periodic", "l_kb": 1.0, "w_ms": 2.0},
    "service": {"type": "latency_rate", "rate_kb_ms": 1.0},
    "sim": {"seed": 3, "target_samples": 500}
  })");
  RunOutput out = run_simulate(sc, det);
  REQUIRE(out.files.size() == 2);
  CHECK(out.files[0].first == "att_w2_samples.csv");
  CHECK(out.files[1].first == "att_summary.csv");

  Csv samples = csv_parse(out.files[0].second);
  REQUIRE(samples.rows.size() >= 500);
  for (std::size_t k = 1; k < samples.rows.size(); ++k) {
    CHECK(parse_num(samples.rows[k][1]) == doctest::Approx(3.0));  // w + l/c
    CHECK(parse_num(samples.rows[k][2]) == doctest::Approx(1.0));  // l/c
  }
  Csv summary = csv_parse(out.files[1].second);
  CHECK(cell(summary, 0, "peak_q_ms") == doctest::Approx(3.0));
  CHECK(cell(summary, 0, "delay_q_ms") == doctest::Approx(1.0));

  RunOutput again = run_simulate(sc, det);
  CHECK(again.files[0].second == out.files[0].second);
  CHECK(again.files[1].second == out.files[1].second);

  // quantile deeper than the sample count warns but succeeds
  Scenario thin = parse_scenario(scenario_json(
      kMarkov, R"(, "sim": {"seed": 5, "target_samples": 1000})"));
  RunOutput thin_out = run_simulate(thin, det);
  CHECK(!thin_out.warnings.empty());

  // explicit horizon too short for any departure
  Scenario empty = parse_scenario(R"({
    "id": "e",
    "source": {"type": "periodic", "l_kb": 1.0, "w_ms": 2.0, "phase_ms": 1.0},
    "service": {"type": "latency_rate", "rate_kb_ms": 1.0},
    "sim": {"horizon_ms": 0.5, "seed": 1}
  })");
  CHECK_THROWS_AS(run_simulate(empty, det), ScenarioError);
}

TEST_CASE("run_simulate: priority cross-traffic lengthens the low flow's delays") {
  RunOptions det;
  det.deterministic = true;
  Scenario sc = parse_scenario(R"({
    "id": "prio",
    "source": {"type": "periodic", "l_kb": 1.0, "w_ms": 16.0},
    "service": {"type": "markov_onoff", "p_on": 0.9, "gamma_kb_ms": 1.0, "beta_ms": 8.0},
    "epsilon": [0.01],
    "priority_m": [0, 5],
    "sim": {"seed": 11, "target_samples": 4000}
  })");
  RunOutput out = run_simulate(sc, det);
  Csv summary = csv_parse(out.files.back().second);
  REQUIRE(summary.rows.size() == 2);
  CHECK(cell(summary, 0, "m") == 0.0);
  CHECK(cell(summary, 1, "m") == 5.0);
  CHECK(cell(summary, 1, "delay_q_ms") > cell(summary, 0, "delay_q_ms"));
  CHECK(cell(summary, 1, "peak_q_ms") > cell(summary, 0, "peak_q_ms"));
}

TEST_CASE("run_compare: dominance on a small grid, violations detected") {
  RunOptions det;
  det.deterministic = true;
  Scenario sc = parse_scenario(R"({
    "id": "cmp",
    "source": {"type": "periodic", "l_kb": 1.0, "w_ms": [2.0, 8.0]},
    "service": {"type": "markov_onoff", "p_on": 0.9, "gamma_kb_ms": 1.0, "beta_ms": 8.0},
    "epsilon": [0.01],
    "sim": {"seed": 17, "target_samples": 30000}
  })");
  RunOutput out = run_compare(sc, det);
  CHECK(out.dominance_ok);
  Csv table = csv_parse(out.files[0].second);
  REQUIRE(table.rows.size() == 2);
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    CHECK(cell(table, k, "dominance") == 1.0);
    CHECK(cell(table, k, "delta_eps_ms") >= cell(table, k, "peak_q_ms"));
    CHECK(cell(table, k, "v_eps_ms") >= cell(table, k, "delay_q_ms"));
    CHECK(cell(table, k, "n_samples") == 30000.0);
    CHECK(cell(table, k, "runtime_ms") == 0.0);
  }

  Scenario nosim = parse_scenario(scenario_json(kMarkov));
  CHECK_THROWS_AS(run_compare(nosim, det), ScenarioError);
}

TEST_CASE("run_preset: file sets and scenario purity") {
  RunOptions det;
  det.deterministic = true;
  RunOutput f5 = run_preset("fig5", det);
  REQUIRE(f5.files.size() == 3);
  CHECK(f5.files[0].first == "fig5.json");
  CHECK(f5.files[1].first == "fig5_bound.csv");
  CHECK(f5.files[2].first == "fig5_delta.csv");
  Scenario parsed = parse_scenario(f5.files[0].second);
  CHECK(parsed.id == "fig5");
  Csv curve = csv_parse(f5.files[2].second);
  CHECK(curve.columns == std::vector<std::string>{"w_ms", "delta_eps_ms"});
  REQUIRE(curve.rows.size() == 25);

  // interior minimum of the two-regime curve
  std::size_t argmin = 0;
  double best = kInf;
  for (std::size_t k = 0; k < curve.rows.size(); ++k) {
    double d = parse_num(curve.rows[k][1]);
    if (d < best) {
      best = d;
      argmin = k;
    }
  }
  CHECK(argmin > 0);
  CHECK(argmin < curve.rows.size() - 1);

  RunOutput again = run_preset("fig5", det);
  for (std::size_t i = 0; i < f5.files.size(); ++i) CHECK(again.files[i] == f5.files[i]);

  CHECK_THROWS_AS(run_preset("fig9", det), ScenarioError);
}
