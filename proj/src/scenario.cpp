#include "aoc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace aoc {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw ScenarioError("scenario: field '" + field + "': " + why);
}

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) fail(where.empty() ? it.key() : where + "." + it.key(), "unknown field");
  }
}

double need_number(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) fail(where + "." + key, "missing");
  if (!obj[key].is_number()) fail(where + "." + key, "must be a number");
  return obj[key].get<double>();
}

double opt_number(const json& obj, const std::string& where, const char* key, double dflt) {
  if (!obj.contains(key)) return dflt;
  if (!obj[key].is_number()) fail(where + "." + key, "must be a number");
  return obj[key].get<double>();
}

// a positive number, or a non-empty list of positive numbers
std::vector<double> positive_list(const json& v, const std::string& field) {
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.get<double>());
  } else if (v.is_array()) {
    for (const json& x : v) {
      if (!x.is_number()) fail(field, "list entries must be numbers");
      out.push_back(x.get<double>());
    }
  } else {
    fail(field, "must be a number or a list of numbers");
  }
  if (out.empty()) fail(field, "list must be non-empty");
  for (double x : out)
    if (!(x > 0.0) || !std::isfinite(x)) fail(field, "entries must be positive and finite");
  return out;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo * std::pow(hi / lo, double(i) / double(n - 1));
  return g;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("scenario: malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ScenarioError("scenario: top level must be a JSON object");
  reject_unknown(root, "", {"id", "source", "service", "loss", "priority_m", "epsilon", "sim"});

  Scenario sc;

  if (!root.contains("id") || !root["id"].is_string() || root["id"].get<std::string>().empty())
    fail("id", "required non-empty string");
  sc.id = root["id"].get<std::string>();

  // --- source ---
  if (!root.contains("source") || !root["source"].is_object()) fail("source", "required object");
  const json& src = root["source"];
  reject_unknown(src, "source", {"type", "l_kb", "w_ms", "phase_ms"});
  std::string stype = src.contains("type") && src["type"].is_string()
                          ? src["type"].get<std::string>()
                          : (fail("source.type", "required string"), "");
  if (stype == "periodic")
    sc.source = SourceKind::Periodic;
  else if (stype == "poisson")
    sc.source = SourceKind::Poisson;
  else
    fail("source.type", "must be 'periodic' or 'poisson', got '" + stype + "'");

  sc.l_kb = need_number(src, "source", "l_kb");
  if (!(sc.l_kb > 0.0) || !std::isfinite(sc.l_kb)) fail("source.l_kb", "must be positive");
  if (!src.contains("w_ms")) fail("source.w_ms", "missing");
  sc.w_ms = positive_list(src["w_ms"], "source.w_ms");
  sc.phase_ms = opt_number(src, "source", "phase_ms", 0.0);
  if (sc.source == SourceKind::Poisson && src.contains("phase_ms"))
    fail("source.phase_ms", "not applicable to a poisson source");
  if (sc.phase_ms < 0.0) fail("source.phase_ms", "must be non-negative");
  double w_min = *std::min_element(sc.w_ms.begin(), sc.w_ms.end());
  if (sc.phase_ms >= w_min && sc.phase_ms > 0.0)
    fail("source.phase_ms", "must be below every w_ms entry");

  // --- service ---
  if (!root.contains("service") || !root["service"].is_object())
    fail("service", "required object");
  const json& sv = root["service"];
  std::string vtype = sv.contains("type") && sv["type"].is_string()
                          ? sv["type"].get<std::string>()
                          : (fail("service.type", "required string"), "");
  if (vtype == "latency_rate") {
    sc.service = ServiceKind::LatencyRate;
    reject_unknown(sv, "service", {"type", "rate_kb_ms", "latency_ms"});
    sc.rate_kb_ms = need_number(sv, "service", "rate_kb_ms");
    if (!(sc.rate_kb_ms > 0.0)) fail("service.rate_kb_ms", "must be positive");
    sc.latency_ms = opt_number(sv, "service", "latency_ms", 0.0);
    if (sc.latency_ms < 0.0) fail("service.latency_ms", "must be non-negative");
  } else if (vtype == "markov_onoff") {
    sc.service = ServiceKind::MarkovOnOff;
    reject_unknown(sv, "service", {"type", "p_on", "gamma_kb_ms", "beta_ms"});
    sc.p_on = need_number(sv, "service", "p_on");
    if (!(sc.p_on > 0.0 && sc.p_on < 1.0)) fail("service.p_on", "must lie in (0,1)");
    sc.gamma_kb_ms = need_number(sv, "service", "gamma_kb_ms");
    if (!(sc.gamma_kb_ms > 0.0)) fail("service.gamma_kb_ms", "must be positive");
    sc.beta_ms = need_number(sv, "service", "beta_ms");
    if (!(sc.beta_ms > 0.0)) fail("service.beta_ms", "must be positive");
    if (sc.source == SourceKind::Poisson)
      fail("service.type", "markov_onoff requires a periodic source "
                           "(poisson bounds assume a constant-rate server)");
  } else {
    fail("service.type", "must be 'latency_rate' or 'markov_onoff', got '" + vtype + "'");
  }

  // --- loss ---
  if (root.contains("loss")) {
    if (!root["loss"].is_object()) fail("loss", "must be an object");
    const json& ls = root["loss"];
    reject_unknown(ls, "loss", {"eta"});
    sc.has_loss = true;
    sc.eta = need_number(ls, "loss", "eta");
    if (sc.eta < 0.0) fail("loss.eta", "must be non-negative");
    if (sc.service != ServiceKind::LatencyRate)
      fail("loss", "loss model applies to latency_rate service only");
    if (sc.source != SourceKind::Periodic)
      fail("loss", "loss model applies to periodic sources only");
  }

  // --- priority ---
  if (root.contains("priority_m")) {
    const json& pm = root["priority_m"];
    sc.priority_m.clear();
    auto take = [&](const json& x) {
      if (!x.is_number_integer() || x.get<long long>() < 0)
        fail("priority_m", "entries must be non-negative integers");
      sc.priority_m.push_back(int(x.get<long long>()));
    };
    if (pm.is_array()) {
      for (const json& x : pm) take(x);
      if (sc.priority_m.empty()) fail("priority_m", "list must be non-empty");
    } else {
      take(pm);
    }
    bool any_pos = std::any_of(sc.priority_m.begin(), sc.priority_m.end(),
                               [](int m) { return m > 0; });
    if (any_pos && (sc.source != SourceKind::Periodic || sc.service != ServiceKind::MarkovOnOff))
      fail("priority_m", "m > 0 requires a periodic source over a markov_onoff service");
  }

  // --- epsilon ---
  bool deterministic_bound =
      sc.service == ServiceKind::LatencyRate && sc.source == SourceKind::Periodic;
  if (root.contains("epsilon")) {
    const json& ev = root["epsilon"];
    if (ev.is_number()) {
      sc.epsilon = {ev.get<double>()};
    } else if (ev.is_array()) {
      sc.epsilon.clear();
      for (const json& x : ev) {
        if (!x.is_number()) fail("epsilon", "list entries must be numbers");
        sc.epsilon.push_back(x.get<double>());
      }
      if (sc.epsilon.empty()) fail("epsilon", "list must be non-empty");
    } else {
      fail("epsilon", "must be a number or a list of numbers");
    }
    for (double e : sc.epsilon) {
      if (!std::isfinite(e) || e < 0.0 || e >= 1.0) fail("epsilon", "entries must lie in [0,1)");
      if (e == 0.0 && !deterministic_bound)
        fail("epsilon", "0 is only meaningful for the deterministic closed form");
    }
  } else if (deterministic_bound) {
    sc.epsilon = {0.0};  // deterministic closed form, no risk level involved
  } else {
    fail("epsilon", "required for statistical scenarios");
  }

  // --- sim ---
  if (root.contains("sim")) {
    if (!root["sim"].is_object()) fail("sim", "must be an object");
    const json& sm = root["sim"];
    reject_unknown(sm, "sim",
                   {"horizon_ms", "seed", "target_samples", "error_p", "error_run_cap",
                    "max_sample_rows"});
    sc.has_sim = true;
    sc.sim.horizon_ms = opt_number(sm, "sim", "horizon_ms", 0.0);
    if (sc.sim.horizon_ms < 0.0) fail("sim.horizon_ms", "must be non-negative");
    if (sm.contains("seed")) {
      if (!sm["seed"].is_number_unsigned() && !sm["seed"].is_number_integer())
        fail("sim.seed", "must be a non-negative integer");
      if (sm["seed"].is_number_integer() && sm["seed"].get<long long>() < 0)
        fail("sim.seed", "must be a non-negative integer");
      sc.sim.seed = sm["seed"].get<std::uint64_t>();
    }
    if (sm.contains("target_samples")) {
      if (!sm["target_samples"].is_number_integer() || sm["target_samples"].get<long long>() < 1)
        fail("sim.target_samples", "must be a positive integer");
      sc.sim.target_samples = sm["target_samples"].get<std::uint64_t>();
    }
    sc.sim.error_p = opt_number(sm, "sim", "error_p", 0.0);
    if (sc.sim.error_p < 0.0 || sc.sim.error_p >= 1.0) fail("sim.error_p", "must lie in [0,1)");
    if (sm.contains("error_run_cap")) {
      if (!sm["error_run_cap"].is_number_integer() || sm["error_run_cap"].get<long long>() < 0)
        fail("sim.error_run_cap", "must be a non-negative integer");
      sc.sim.error_run_cap = int(sm["error_run_cap"].get<long long>());
    }
    if (sm.contains("max_sample_rows")) {
      if (!sm["max_sample_rows"].is_number_integer() || sm["max_sample_rows"].get<long long>() < 1)
        fail("sim.max_sample_rows", "must be a positive integer");
      sc.sim.max_sample_rows = sm["max_sample_rows"].get<std::uint64_t>();
    }
  }

  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("scenario: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string scenario_to_json(const Scenario& sc) {
  json root;
  root["id"] = sc.id;

  json src;
  src["type"] = sc.source == SourceKind::Periodic ? "periodic" : "poisson";
  src["l_kb"] = sc.l_kb;
  src["w_ms"] = sc.w_ms;
  if (sc.source == SourceKind::Periodic && sc.phase_ms != 0.0) src["phase_ms"] = sc.phase_ms;
  root["source"] = src;

  json sv;
  if (sc.service == ServiceKind::LatencyRate) {
    sv["type"] = "latency_rate";
    sv["rate_kb_ms"] = sc.rate_kb_ms;
    sv["latency_ms"] = sc.latency_ms;
  } else {
    sv["type"] = "markov_onoff";
    sv["p_on"] = sc.p_on;
    sv["gamma_kb_ms"] = sc.gamma_kb_ms;
    sv["beta_ms"] = sc.beta_ms;
  }
  root["service"] = sv;

  if (sc.has_loss) root["loss"] = json{{"eta", sc.eta}};
  root["priority_m"] = sc.priority_m;
  root["epsilon"] = sc.epsilon;
  if (sc.has_sim) {
    root["sim"] = json{{"horizon_ms", sc.sim.horizon_ms},
                       {"seed", sc.sim.seed},
                       {"target_samples", sc.sim.target_samples},
                       {"error_p", sc.sim.error_p},
                       {"error_run_cap", sc.sim.error_run_cap},
                       {"max_sample_rows", sc.sim.max_sample_rows}};
  }
  return root.dump(2) + "\n";
}

std::vector<std::string> preset_names() { return {"fig3", "fig4", "fig5", "fig6"}; }

Scenario preset_scenario(const std::string& name) {
  Scenario sc;
  sc.id = name;
  if (name == "fig3") {
    sc.source = SourceKind::Periodic;
    sc.l_kb = 1.0;
    sc.w_ms = log_grid(1.0, 64.0, 25);
    sc.service = ServiceKind::MarkovOnOff;
    sc.p_on = 0.9;
    sc.gamma_kb_ms = 1.0;
    sc.beta_ms = 8.0;
    sc.epsilon = {1e-3, 1e-6, 1e-9};
  } else if (name == "fig4") {
    sc.source = SourceKind::Periodic;
    sc.l_kb = 1.0;
    sc.w_ms = {2.0, 4.0, 8.0, 16.0};
    sc.service = ServiceKind::MarkovOnOff;
    sc.p_on = 0.9;
    sc.gamma_kb_ms = 1.0;
    sc.beta_ms = 8.0;
    sc.epsilon = {1e-3};
    sc.has_sim = true;
    sc.sim.seed = 20240817;
    sc.sim.target_samples = 200000;
  } else if (name == "fig5") {
    sc.source = SourceKind::Poisson;
    sc.l_kb = 1.0;
    sc.w_ms = log_grid(0.5, 64.0, 25);
    sc.service = ServiceKind::LatencyRate;
    sc.rate_kb_ms = 1.0;
    sc.latency_ms = 0.0;
    sc.epsilon = {1e-6};
  } else if (name == "fig6") {
    sc.source = SourceKind::Periodic;
    sc.l_kb = 1.0;
    sc.w_ms = log_grid(1.0, 64.0, 25);
    sc.service = ServiceKind::MarkovOnOff;
    sc.p_on = 0.9;
    sc.gamma_kb_ms = 1.0;
    sc.beta_ms = 8.0;
    sc.epsilon = {1e-6};
    sc.priority_m = {0, 10, 20, 30};
  } else {
    throw ScenarioError("scenario: unknown preset '" + name +
                        "' (known: fig3, fig4, fig5, fig6)");
  }
  return sc;
}

}  // namespace aoc
