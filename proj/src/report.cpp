#include "aoc/report.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <mutex>
#include <thread>

#include "aoc/sim.hpp"

namespace aoc {

namespace {

std::string iso_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\n\r") != std::string::npos;
}

void append_field(std::string& out, const std::string& s) {
  if (!needs_quoting(s)) {
    out += s;
    return;
  }
  out += '"';
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  a ^= b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2);
  return a;
}

}  // namespace

std::string fmt_num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0.0 ? "inf" : "-inf";
  char buf[32];
  if (x == std::floor(x) && std::abs(x) < 9.007199254740992e15) {
    auto res = std::to_chars(buf, buf + sizeof buf, (long long)(x));
    return std::string(buf, res.ptr);
  }
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_num(const std::string& cell) {
  double v = 0.0;
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
    throw ScenarioError("csv: cell is not a number: '" + cell + "'");
  return v;
}

std::string csv_to_string(const Csv& table) {
  std::string out;
  for (const std::string& c : table.comments) {
    out += "# ";
    out += c;
    out += '\n';
  }
  auto emit_row = [&out](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      append_field(out, row[i]);
    }
    out += '\n';
  };
  emit_row(table.columns);
  for (const auto& row : table.rows) emit_row(row);
  return out;
}

Csv csv_parse(const std::string& text) {
  Csv table;
  std::size_t i = 0;
  const std::size_t n = text.size();
  bool header_seen = false;
  while (i < n) {
    if (!header_seen && text[i] == '#') {
      std::size_t eol = text.find('\n', i);
      if (eol == std::string::npos) eol = n;
      std::size_t start = i + 1;
      if (start < eol && text[start] == ' ') ++start;
      table.comments.emplace_back(text.substr(start, eol - start));
      i = eol + 1;
      continue;
    }
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    for (;; ++i) {
      if (i >= n) {
        if (quoted) throw ScenarioError("csv: unterminated quoted field");
        row.push_back(std::move(field));
        break;
      }
      char c = text[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < n && text[i + 1] == '"') {
            field += '"';
            ++i;
          } else {
            quoted = false;
          }
        } else {
          field += c;
        }
      } else if (c == '"' && field.empty()) {
        quoted = true;
      } else if (c == ',') {
        row.push_back(std::move(field));
        field.clear();
      } else if (c == '\n') {
        row.push_back(std::move(field));
        ++i;
        break;
      } else if (c != '\r') {
        field += c;
      }
    }
    if (!header_seen) {
      table.columns = std::move(row);
      header_seen = true;
    } else if (row.size() != 1 || !row[0].empty()) {  // skip trailing blank line
      if (row.size() != table.columns.size())
        throw ScenarioError("csv: row has " + std::to_string(row.size()) + " fields, header has " +
                            std::to_string(table.columns.size()));
      table.rows.push_back(std::move(row));
    }
  }
  if (!header_seen) throw ScenarioError("csv: missing header row");
  return table;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("AOC_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 1024) return int(v);
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? int(hc) : 1;
}

namespace {

BoundResult bound_point(const Scenario& sc, double w, int m, double eps) {
  if (sc.source == SourceKind::Poisson) {
    PoissonSource src(sc.l_kb, w);
    double t0 = sc.latency_ms + sc.l_kb / sc.rate_kb_ms;
    return optimize_random_arrivals_bound(src, sc.rate_kb_ms, t0, eps);
  }
  PeriodicSource src(sc.l_kb, w);
  if (sc.service == ServiceKind::LatencyRate)
    return deterministic_periodic_bound(src, sc.rate_kb_ms, sc.latency_ms,
                                        sc.has_loss ? sc.eta : 0.0);
  MgfEnvelope env = markov_mgf_envelope(markov_from_stats(sc.p_on, sc.gamma_kb_ms, sc.beta_ms));
  if (m == 0) return optimize_periodic_bound(src, env, eps);
  return priority_aoi_bound(src, env, m, eps);
}

std::vector<std::string> base_comments(const Scenario& sc, const RunOptions& opt,
                                       bool with_seed) {
  std::vector<std::string> cm{"scenario: " + sc.id};
  if (with_seed) cm.push_back("seed: " + std::to_string(sc.sim.seed));
  if (!opt.deterministic) cm.push_back("generated: " + iso_timestamp());
  return cm;
}

}  // namespace

std::vector<BoundPoint> compute_bound_grid(const Scenario& sc, int threads) {
  std::vector<BoundPoint> pts;
  for (double w : sc.w_ms)
    for (int m : sc.priority_m)
      for (double eps : sc.epsilon) pts.push_back({w, m, eps, {}});

  int n_threads = std::min<std::size_t>(std::size_t(resolve_threads(threads)), pts.size());
  if (n_threads <= 1) {
    for (BoundPoint& p : pts) p.res = bound_point(sc, p.w, p.m, p.eps);
    return pts;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr err;
  std::mutex err_mu;
  auto work = [&] {
    std::size_t i;
    while ((i = next.fetch_add(1)) < pts.size() && !failed.load()) {
      try {
        pts[i].res = bound_point(sc, pts[i].w, pts[i].m, pts[i].eps);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!failed.exchange(true)) err = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int k = 0; k < n_threads; ++k) pool.emplace_back(work);
  for (std::thread& th : pool) th.join();
  if (failed.load()) std::rethrow_exception(err);
  return pts;
}

namespace {

Csv bound_csv(const Scenario& sc, const std::vector<BoundPoint>& pts, const RunOptions& opt) {
  Csv table;
  table.comments = base_comments(sc, opt, false);
  table.columns = {"scenario", "w_ms",  "epsilon", "m", "delta_eps_ms", "v_eps_ms",
                   "theta",    "r",     "tau0",    "b", "feasible"};
  for (const BoundPoint& p : pts) {
    const BoundResult& r = p.res;
    table.rows.push_back({sc.id, fmt_num(p.w), fmt_num(p.eps), fmt_num(p.m),
                          fmt_num(r.delta_eps), fmt_num(r.v_eps), fmt_num(r.params.theta),
                          fmt_num(r.params.r), fmt_num(r.params.tau0), fmt_num(r.params.b),
                          r.feasible ? "1" : "0"});
  }
  return table;
}

// One simulated sweep point: informative departures with times, plus every
// per-message delay of the flow of interest.
struct SimQuant {
  std::vector<double> t;           // informative departure times
  std::vector<double> peaks;       // aligned with t
  std::vector<double> inf_delays;  // aligned with t
  std::vector<double> delays;      // all departed messages of the flow
  std::uint64_t total = 0;
  double horizon = 0.0;
};

SimQuant simulate_vector_once(const Scenario& sc, double w, int m, std::uint64_t seed,
                              double horizon) {
  std::vector<std::vector<double>> flows;
  if (m > 0) {
    Rng phase_rng(mix_seed(seed, 0xfeedULL));
    for (int k = 0; k < m; ++k)
      flows.push_back(gen_arrivals(PeriodicSource(sc.l_kb, w, phase_rng.uniform() * w), horizon));
  }
  if (sc.source == SourceKind::Periodic)
    flows.push_back(gen_arrivals(PeriodicSource(sc.l_kb, w, sc.phase_ms), horizon));
  else
    flows.push_back(gen_arrivals(PoissonSource(sc.l_kb, w), horizon, seed));
  int interest = int(flows.size()) - 1;

  ChannelPath path =
      sc.service == ServiceKind::MarkovOnOff
          ? gen_markov_path(markov_from_stats(sc.p_on, sc.gamma_kb_ms, sc.beta_ms), horizon,
                            mix_seed(seed, 1))
          : constant_path(sc.rate_kb_ms, horizon);

  ServeResult served = serve_priority(flows, std::vector<double>(flows.size(), sc.l_kb), path);
  if (sc.latency_ms > 0.0)
    for (EventRecord& rec : served.trace) rec.t_departure += sc.latency_ms;
  if (sc.sim.error_p > 0.0) {
    Rng err_rng(mix_seed(seed, 2));
    apply_errors(served.trace, {sc.sim.error_p, sc.sim.error_run_cap}, err_rng);
  }

  SimQuant out;
  out.horizon = horizon;
  bool any = false;
  for (const EventRecord& rec : served.trace) any = any || rec.flow == interest;
  if (!any) return out;

  AoiSampleSet set = measure_aoi(served.trace, interest);
  for (const AoiSample& s : set.samples) {
    out.t.push_back(s.t);
    out.peaks.push_back(s.aoi);
  }
  std::size_t di = 0;
  for (const EventRecord& rec : served.trace) {
    if (rec.flow != interest) continue;
    out.delays.push_back(set.delays[di]);
    if (!rec.error) out.inf_delays.push_back(set.delays[di]);
    ++di;
  }
  out.total = out.delays.size();
  return out;
}

SimQuant sim_point(const Scenario& sc, double w, int m, std::uint64_t seed) {
  // streaming fast path: bounded memory, exact informative-departure target
  if (sc.source == SourceKind::Periodic && sc.service == ServiceKind::MarkovOnOff && m == 0 &&
      sc.sim.horizon_ms == 0.0) {
    QuantileRun run = run_periodic_markov_fcfs(
        PeriodicSource(sc.l_kb, w, sc.phase_ms),
        markov_from_stats(sc.p_on, sc.gamma_kb_ms, sc.beta_ms), sc.sim.target_samples, seed,
        {sc.sim.error_p, sc.sim.error_run_cap});
    SimQuant out;
    out.peaks = std::move(run.peaks);
    out.delays = std::move(run.delays);
    out.total = run.total;
    out.horizon = run.horizon_used;
    return out;  // departure times are not tracked on this path
  }

  double p_err = sc.sim.error_p;
  double need = double(sc.sim.target_samples) / (1.0 - p_err);
  double horizon = sc.sim.horizon_ms > 0.0 ? sc.sim.horizon_ms
                                           : w * (need * 1.05 + 16.0) + sc.phase_ms;
  for (int attempt = 0;; ++attempt) {
    SimQuant out = simulate_vector_once(sc, w, m, seed, horizon);
    if (sc.sim.horizon_ms > 0.0 || out.peaks.size() >= sc.sim.target_samples || attempt >= 6)
      return out;
    horizon *= 1.6;
  }
}

double tail_quantile(const std::vector<double>& v, double eps) {
  if (v.empty()) throw ScenarioError("simulation produced no samples");
  if (eps <= 0.0) return *std::max_element(v.begin(), v.end());
  return empirical_quantile(v, 1.0 - eps);
}

void reliability_warnings(const Scenario& sc, double w, int m, const SimQuant& sq,
                          std::vector<std::string>& warnings) {
  for (double eps : sc.epsilon) {
    if (eps <= 0.0) continue;
    if (!quantile_reliable(sq.peaks.size(), 1.0 - eps))
      warnings.push_back("w=" + fmt_num(w) + " m=" + std::to_string(m) + " epsilon=" +
                         fmt_num(eps) + ": " + std::to_string(sq.peaks.size()) +
                         " peak samples give fewer than 100 points above the quantile");
  }
}

}  // namespace

RunOutput run_bound(const Scenario& sc, const RunOptions& opt) {
  RunOutput out;
  std::vector<BoundPoint> pts = compute_bound_grid(sc, 1);
  out.files.emplace_back(sc.id + "_bound.csv", csv_to_string(bound_csv(sc, pts, opt)));
  return out;
}

RunOutput run_sweep(const Scenario& sc, const RunOptions& opt) {
  RunOutput out;
  std::vector<BoundPoint> pts = compute_bound_grid(sc, opt.threads);
  out.files.emplace_back(sc.id + "_bound.csv", csv_to_string(bound_csv(sc, pts, opt)));
  return out;
}

RunOutput run_simulate(const Scenario& sc, const RunOptions& opt) {
  RunOutput out;
  Scenario s = sc;
  if (opt.has_seed) s.sim.seed = opt.seed;

  Csv summary;
  summary.comments = base_comments(s, opt, true);
  summary.columns = {"scenario", "w_ms",      "m",          "epsilon",  "n_peaks",
                     "n_delays", "peak_q_ms", "delay_q_ms", "reliable"};

  std::size_t wi = 0;
  for (double w : s.w_ms) {
    ++wi;
    std::size_t mi = 0;
    for (int m : s.priority_m) {
      ++mi;
      std::uint64_t seed = mix_seed(mix_seed(s.sim.seed, wi), mi);
      SimQuant sq = sim_point(s, w, m, seed);
      if (sq.peaks.empty())
        throw ScenarioError("simulation produced no informative departures at w=" + fmt_num(w) +
                            " (horizon too short?)");
      reliability_warnings(s, w, m, sq, out.warnings);

      for (double eps : s.epsilon) {
        bool reliable = eps > 0.0 && quantile_reliable(sq.peaks.size(), 1.0 - eps) &&
                        quantile_reliable(sq.delays.size(), 1.0 - eps);
        summary.rows.push_back({s.id, fmt_num(w), fmt_num(m), fmt_num(eps),
                                fmt_num(double(sq.peaks.size())),
                                fmt_num(double(sq.delays.size())),
                                fmt_num(tail_quantile(sq.peaks, eps)),
                                fmt_num(tail_quantile(sq.delays, eps)), reliable ? "1" : "0"});
      }

      Csv samples;
      samples.comments = base_comments(s, opt, true);
      samples.comments.insert(samples.comments.begin() + 1,
                              "w_ms: " + fmt_num(w) + ", m: " + std::to_string(m));
      samples.columns = {"t_ms", "aoi_ms", "delay_ms"};
      std::size_t rows = std::min<std::size_t>(sq.t.size(), s.sim.max_sample_rows);
      if (rows < sq.peaks.size())
        samples.comments.push_back("rows capped at " + std::to_string(rows) + " of " +
                                   std::to_string(sq.peaks.size()));
      for (std::size_t k = 0; k < rows; ++k)
        samples.rows.push_back(
            {fmt_num(sq.t[k]), fmt_num(sq.peaks[k]), fmt_num(sq.inf_delays[k])});
      std::string name = s.id + "_w" + fmt_num(w) + (m > 0 ? "_m" + std::to_string(m) : "") +
                         "_samples.csv";
      out.files.emplace_back(name, csv_to_string(samples));
    }
  }
  out.files.emplace_back(s.id + "_summary.csv", csv_to_string(summary));
  return out;
}

namespace {

struct ComparePoint {
  double w;
  int m;
  SimQuant sq;
  double runtime_ms;
};

Csv compare_csv(const Scenario& sc, const std::vector<BoundPoint>& bounds,
                const std::vector<ComparePoint>& sims, const RunOptions& opt, bool* all_ok) {
  Csv table;
  table.comments = base_comments(sc, opt, true);
  table.columns = {"scenario",  "w_ms",       "m",         "epsilon",   "delta_eps_ms",
                   "v_eps_ms",  "peak_q_ms",  "delay_q_ms", "dominance", "n_samples",
                   "runtime_ms"};
  *all_ok = true;
  for (const BoundPoint& bp : bounds) {
    const ComparePoint* cp = nullptr;
    for (const ComparePoint& c : sims)
      if (c.w == bp.w && c.m == bp.m) cp = &c;
    if (!cp) continue;
    double peak_q = tail_quantile(cp->sq.peaks, bp.eps);
    double delay_q = tail_quantile(cp->sq.delays, bp.eps);
    bool ok = bp.res.delta_eps >= peak_q && bp.res.v_eps >= delay_q;
    *all_ok = *all_ok && ok;
    table.rows.push_back({sc.id, fmt_num(bp.w), fmt_num(bp.m), fmt_num(bp.eps),
                          fmt_num(bp.res.delta_eps), fmt_num(bp.res.v_eps), fmt_num(peak_q),
                          fmt_num(delay_q), ok ? "1" : "0",
                          fmt_num(double(cp->sq.peaks.size())), fmt_num(cp->runtime_ms)});
  }
  return table;
}

std::vector<ComparePoint> run_compare_sims(const Scenario& sc, const RunOptions& opt,
                                           std::vector<std::string>& warnings) {
  std::vector<ComparePoint> sims;
  std::size_t wi = 0;
  for (double w : sc.w_ms) {
    ++wi;
    std::size_t mi = 0;
    for (int m : sc.priority_m) {
      ++mi;
      std::uint64_t seed = mix_seed(mix_seed(sc.sim.seed, wi), mi);
      auto t0 = std::chrono::steady_clock::now();
      SimQuant sq = sim_point(sc, w, m, seed);
      auto t1 = std::chrono::steady_clock::now();
      if (sq.peaks.empty())
        throw ScenarioError("simulation produced no informative departures at w=" + fmt_num(w) +
                            " (horizon too short?)");
      reliability_warnings(sc, w, m, sq, warnings);
      double rt = opt.deterministic
                      ? 0.0
                      : std::chrono::duration<double, std::milli>(t1 - t0).count();
      sims.push_back({w, m, std::move(sq), rt});
    }
  }
  return sims;
}

}  // namespace

RunOutput run_compare(const Scenario& sc, const RunOptions& opt) {
  if (!sc.has_sim)
    throw ScenarioError("scenario: field 'sim': required for compare");
  RunOutput out;
  Scenario s = sc;
  if (opt.has_seed) s.sim.seed = opt.seed;

  std::vector<BoundPoint> bounds = compute_bound_grid(s, 1);
  std::vector<ComparePoint> sims = run_compare_sims(s, opt, out.warnings);
  bool all_ok = false;
  Csv table = compare_csv(s, bounds, sims, opt, &all_ok);
  out.dominance_ok = all_ok;
  out.files.emplace_back(s.id + "_compare.csv", csv_to_string(table));
  return out;
}

RunOutput run_preset(const std::string& name, const RunOptions& opt) {
  Scenario sc = preset_scenario(name);
  if (opt.has_seed) sc.sim.seed = opt.seed;

  RunOutput out;
  out.files.emplace_back(name + ".json", scenario_to_json(sc));

  std::vector<BoundPoint> bounds = compute_bound_grid(sc, opt.threads);
  out.files.emplace_back(name + "_bound.csv", csv_to_string(bound_csv(sc, bounds, opt)));

  auto curve_csv = [&](const std::string& label, const std::string& xcol,
                       const std::string& ycol,
                       const std::vector<std::pair<double, double>>& xy) {
    Csv c;
    c.comments = base_comments(sc, opt, false);
    c.comments.insert(c.comments.begin() + 1, "curve: " + label);
    c.columns = {xcol, ycol};
    for (const auto& [x, y] : xy) c.rows.push_back({fmt_num(x), fmt_num(y)});
    return c;
  };

  if (name == "fig3") {
    for (double eps : sc.epsilon) {
      std::vector<std::pair<double, double>> xy;
      for (const BoundPoint& p : bounds)
        if (p.eps == eps) xy.emplace_back(p.w, p.res.delta_eps);
      out.files.emplace_back(name + "_delta_eps" + fmt_num(eps) + ".csv",
                             csv_to_string(curve_csv("epsilon=" + fmt_num(eps), "w_ms",
                                                     "delta_eps_ms", xy)));
    }
  } else if (name == "fig5") {
    std::vector<std::pair<double, double>> xy;
    for (const BoundPoint& p : bounds) xy.emplace_back(p.w, p.res.delta_eps);
    out.files.emplace_back(name + "_delta.csv",
                           csv_to_string(curve_csv("epsilon=" + fmt_num(sc.epsilon[0]), "w_ms",
                                                   "delta_eps_ms", xy)));
  } else if (name == "fig6") {
    for (int m : sc.priority_m) {
      std::vector<std::pair<double, double>> xy;
      for (const BoundPoint& p : bounds)
        if (p.m == m) xy.emplace_back(p.w, p.res.delta_eps);
      out.files.emplace_back(name + "_delta_m" + std::to_string(m) + ".csv",
                             csv_to_string(curve_csv("m=" + std::to_string(m), "w_ms",
                                                     "delta_eps_ms", xy)));
    }
  } else if (name == "fig4") {
    std::vector<ComparePoint> sims = run_compare_sims(sc, opt, out.warnings);
    bool all_ok = false;
    Csv cmp = compare_csv(sc, bounds, sims, opt, &all_ok);
    out.dominance_ok = all_ok;
    out.files.emplace_back(name + "_compare.csv", csv_to_string(cmp));

    double eps = sc.epsilon[0];
    std::vector<std::pair<double, double>> bxy, sxy;
    for (const BoundPoint& p : bounds) bxy.emplace_back(p.w, p.res.delta_eps);
    for (const ComparePoint& c : sims) sxy.emplace_back(c.w, tail_quantile(c.sq.peaks, eps));
    out.files.emplace_back(
        name + "_delta.csv",
        csv_to_string(curve_csv("analytic, epsilon=" + fmt_num(eps), "w_ms", "delta_eps_ms",
                                bxy)));
    out.files.emplace_back(
        name + "_peak_quantile.csv",
        csv_to_string(curve_csv("simulated, epsilon=" + fmt_num(eps), "w_ms", "peak_q_ms",
                                sxy)));

    // empirical tail at the smallest w: exceedance frequency versus age
    const std::vector<double>& peaks = sims.front().sq.peaks;
    double lo = empirical_quantile(peaks, 0.5);
    double hi = empirical_quantile(peaks, 1.0 - 10.0 / double(peaks.size()));
    std::vector<std::pair<double, double>> txy;
    for (int k = 0; k < 32; ++k) {
      double thr = lo + (hi - lo) * double(k) / 31.0;
      std::size_t cnt = 0;
      for (double p : peaks) cnt += p > thr;
      txy.emplace_back(thr, double(cnt) / double(peaks.size()));
    }
    out.files.emplace_back(
        name + "_tail_w" + fmt_num(sims.front().w) + ".csv",
        csv_to_string(curve_csv("empirical exceedance, w=" + fmt_num(sims.front().w),
                                "delta_ms", "exceedance", txy)));
  }
  return out;
}

}  // namespace aoc
