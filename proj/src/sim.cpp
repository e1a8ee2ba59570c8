#include "aoc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace aoc {

namespace {

void check_horizon(double horizon) {
  if (!(horizon > 0.0)) throw std::invalid_argument("sim: horizon must be positive");
}

void check_sorted(const std::vector<double>& arrivals) {
  for (std::size_t i = 1; i < arrivals.size(); ++i)
    if (arrivals[i] < arrivals[i - 1])
      throw std::invalid_argument("sim: arrivals must be sorted");
}

void check_path(const ChannelPath& path) {
  check_horizon(path.horizon);
  if (path.segments.empty()) throw std::invalid_argument("sim: empty channel path");
  double t = 0.0;
  for (const ChannelSegment& s : path.segments) {
    if (s.t_begin != t || !(s.t_end > s.t_begin) || s.rate < 0.0)
      throw std::invalid_argument("sim: channel segments must tile the horizon");
    t = s.t_end;
  }
  if (t != path.horizon)
    throw std::invalid_argument("sim: channel segments must tile the horizon");
}

}  // namespace

std::vector<double> gen_arrivals(const PeriodicSource& src, double horizon) {
  check_horizon(horizon);
  std::vector<double> out;
  for (double t = src.phase; t < horizon; t += src.w) out.push_back(t);
  return out;
}

std::vector<double> gen_arrivals(const PoissonSource& src, double horizon, std::uint64_t seed) {
  check_horizon(horizon);
  Rng rng(seed);
  std::vector<double> out;
  for (double t = rng.exponential(src.w); t < horizon; t += rng.exponential(src.w))
    out.push_back(t);
  return out;
}

ChannelPath gen_markov_path(const MarkovOnOff& ch, double horizon, std::uint64_t seed) {
  check_horizon(horizon);
  Rng rng(seed);
  ChannelPath path;
  path.horizon = horizon;
  path.seed = seed;
  bool on = rng.bernoulli(ch.p_on());
  double t = 0.0;
  while (t < horizon) {
    double hold = rng.exponential(on ? 1.0 / ch.mu : 1.0 / ch.lambda);
    double end = std::min(t + hold, horizon);
    path.segments.push_back({t, end, on ? ch.c : 0.0});
    t = end;
    on = !on;
  }
  return path;
}

ChannelPath constant_path(double rate, double horizon) {
  check_horizon(horizon);
  if (rate < 0.0) throw std::invalid_argument("sim: negative rate");
  return {{{0.0, horizon, rate}}, horizon, 0};
}

ServeResult serve_fcfs(const std::vector<double>& arrivals, double size,
                       const ChannelPath& path) {
  std::vector<std::vector<double>> flows{arrivals};
  return serve_priority(flows, {size}, path);
}

ServeResult serve_priority(const std::vector<std::vector<double>>& flow_arrivals,
                           const std::vector<double>& flow_sizes, const ChannelPath& path) {
  check_path(path);
  if (flow_arrivals.empty() || flow_arrivals.size() != flow_sizes.size())
    throw std::invalid_argument("sim: flow arrival/size lists must match and be non-empty");
  for (const auto& arr : flow_arrivals) check_sorted(arr);
  for (double s : flow_sizes)
    if (!(s > 0.0)) throw std::invalid_argument("sim: message sizes must be positive");

  const std::size_t nf = flow_arrivals.size();
  const double horizon = path.horizon;
  std::vector<std::size_t> ia(nf, 0);  // next arrival index
  std::vector<std::size_t> ih(nf, 0);  // next message to complete
  std::vector<double> remaining(nf, 0.0);

  ServeResult res;
  std::vector<PwlBreakpoint> bps;
  double t = 0.0, served = 0.0;
  std::size_t seg = 0;

  auto active_flow = [&]() -> int {
    for (std::size_t f = 0; f < nf; ++f)
      if (ih[f] < ia[f]) return int(f);
    return -1;
  };

  bps.push_back({0.0, 0.0, 0.0});
  while (t < horizon) {
    double rate = path.segments[seg].rate;
    int af = active_flow();

    double t_arr = kInf;
    int arr_flow = -1;
    for (std::size_t f = 0; f < nf; ++f) {
      if (ia[f] < flow_arrivals[f].size()) {
        double ta = flow_arrivals[f][ia[f]];
        if (ta < t_arr) {
          t_arr = ta;
          arr_flow = int(f);
        }
      }
    }
    double t_seg = path.segments[seg].t_end;
    double t_done = (af >= 0 && rate > 0.0) ? t + remaining[af] / rate : kInf;

    double t_next = std::min({t_arr, t_seg, t_done});
    if (t_next > horizon) t_next = horizon;

    if (t_done <= std::min(t_arr, t_seg) && t_done <= horizon) {
      served += remaining[af];
      remaining[af] = 0.0;
      t = t_done;
      res.trace.push_back({int(ih[af]) + 1, af, flow_arrivals[af][ih[af]], flow_sizes[af],
                           t, false});
      ++ih[af];
      if (ih[af] < ia[af]) remaining[af] = flow_sizes[af];
    } else {
      if (af >= 0 && rate > 0.0) {
        double add = rate * (t_next - t);
        remaining[af] -= add;
        served += add;
      }
      t = t_next;
      if (t_next == t_arr && arr_flow >= 0 && t_arr < horizon) {
        if (ih[arr_flow] == ia[arr_flow]) remaining[arr_flow] = flow_sizes[arr_flow];
        ++ia[arr_flow];
      } else if (t_next == t_seg && t_seg <= horizon) {
        if (++seg >= path.segments.size()) break;
      } else {
        break;  // advanced to the horizon
      }
    }
    int naf = active_flow();
    double slope = (naf >= 0 && seg < path.segments.size() && path.segments[seg].rate > 0.0)
                       ? path.segments[seg].rate
                       : 0.0;
    bps.push_back({t, served, slope});
  }
  if (bps.back().t < horizon) bps.push_back({horizon, served, 0.0});
  bps.back().slope = 0.0;
  std::vector<PwlBreakpoint> dedup;  // same-instant events: the settled state wins
  for (const PwlBreakpoint& bp : bps) {
    if (!dedup.empty() && dedup.back().t == bp.t) dedup.back() = bp;
    else dedup.push_back(bp);
  }
  res.fluid = PwlCurve(std::move(dedup));

  double arrived = 0.0;
  for (std::size_t f = 0; f < nf; ++f) arrived += double(ia[f]) * flow_sizes[f];
  res.backlog_kb = arrived - served;

  std::stable_sort(res.trace.begin(), res.trace.end(),
                   [](const EventRecord& a, const EventRecord& b) {
                     return a.t_arrival < b.t_arrival;
                   });
  return res;
}

PwlCurve arrival_curve(const std::vector<double>& arrivals, double size) {
  check_sorted(arrivals);
  std::vector<PwlBreakpoint> bps;
  if (arrivals.empty() || arrivals.front() > 0.0) bps.push_back({0.0, 0.0, 0.0});
  double total = 0.0;
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    total += size;
    while (i + 1 < arrivals.size() && arrivals[i + 1] == arrivals[i]) {
      total += size;
      ++i;
    }
    bps.push_back({arrivals[i], total, 0.0});
  }
  return PwlCurve(std::move(bps));
}

PwlCurve packetized_departure_curve(const EventTrace& trace, int flow) {
  std::vector<PwlBreakpoint> bps{{0.0, 0.0, 0.0}};
  double total = 0.0;
  for (const EventRecord& rec : trace) {
    if (rec.flow != flow) continue;
    total += rec.size;
    if (!bps.empty() && bps.back().t == rec.t_departure) bps.back().value = total;
    else bps.push_back({rec.t_departure, total, 0.0});
  }
  return PwlCurve(std::move(bps));
}

void apply_errors(EventTrace& trace, const ErrorModel& em, Rng& rng) {
  if (em.p < 0.0 || em.p >= 1.0) throw std::invalid_argument("sim: error probability in [0,1)");
  int run = 0;
  for (EventRecord& rec : trace) {
    bool err = em.p > 0.0 && rng.bernoulli(em.p);
    if (em.run_cap > 0 && run >= em.run_cap) err = false;
    rec.error = err;
    run = err ? run + 1 : 0;
  }
}

AoiSampleSet measure_aoi(const EventTrace& trace, int flow) {
  AoiSampleSet out;
  double prev_inf_arrival = 0.0;
  bool have_prev = false;
  for (const EventRecord& rec : trace) {
    if (rec.flow != flow) continue;
    out.delays.push_back(rec.t_departure - rec.t_arrival);
    if (rec.error) continue;
    double origin = have_prev ? prev_inf_arrival : rec.t_arrival;
    out.samples.push_back({rec.t_departure, rec.t_departure - origin});
    prev_inf_arrival = rec.t_arrival;
    have_prev = true;
  }
  if (out.delays.empty()) throw std::invalid_argument("measure_aoi: no messages for flow");
  return out;
}

double oracle_aoi(const PwlCurve& A, const PwlCurve& D, double t) {
  auto causal_at = [&](double u) {
    if (D.eval(u) > A.eval(u) + 1e-9 || D.limit_right(u) > A.limit_right(u) + 1e-9)
      throw std::invalid_argument("oracle_aoi: departures exceed arrivals");
  };
  for (const PwlBreakpoint& bp : A.breakpoints()) causal_at(bp.t);
  for (const PwlBreakpoint& bp : D.breakpoints()) causal_at(bp.t);
  causal_at(t);

  double delta = t - pseudo_inverse(A, D.eval(t), Pinv::Lower);
  return std::min(std::max(delta, 0.0), t);
}

double empirical_quantile(std::vector<double> samples, double q) {
  if (samples.empty()) throw std::invalid_argument("empirical_quantile: empty sample set");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("empirical_quantile: q must be in (0,1)");
  std::size_t idx = std::size_t(std::min(double(samples.size() - 1), std::floor(q * samples.size())));
  std::nth_element(samples.begin(), samples.begin() + idx, samples.end());
  return samples[idx];
}

bool quantile_reliable(std::size_t count, double q) {
  return (1.0 - q) * double(count) >= 100.0;
}

QuantileRun run_periodic_markov_fcfs(const PeriodicSource& src, const MarkovOnOff& ch,
                                     std::uint64_t target_informative, std::uint64_t seed,
                                     const ErrorModel& errors) {
  if (target_informative == 0)
    throw std::invalid_argument("run_periodic_markov_fcfs: target must be positive");
  if (errors.p < 0.0 || errors.p >= 1.0)
    throw std::invalid_argument("run_periodic_markov_fcfs: error probability in [0,1)");

  Rng rng(seed);
  QuantileRun out;
  out.peaks.reserve(target_informative);
  out.delays.reserve(target_informative);

  bool on = rng.bernoulli(ch.p_on());
  double t = 0.0;
  double t_switch = rng.exponential(on ? 1.0 / ch.mu : 1.0 / ch.lambda);
  std::uint64_t ia = 0;
  std::deque<double> pending;  // arrival times of queued messages
  double remaining = 0.0;
  double prev_inf_arrival = 0.0;
  bool have_prev = false;
  int run = 0;

  auto advance = [&](double to) {
    if (on && !pending.empty()) remaining -= ch.c * (to - t);
    t = to;
  };
  while (out.informative < target_informative) {
    double t_arr = src.phase + double(ia) * src.w;
    double t_done = (!pending.empty() && on) ? t + remaining / ch.c : kInf;

    if (t_done <= std::min(t_arr, t_switch)) {
      t = t_done;
      double arrived = pending.front();
      pending.pop_front();
      remaining = pending.empty() ? 0.0 : src.l;
      out.delays.push_back(t - arrived);
      ++out.total;
      bool err = errors.p > 0.0 && rng.bernoulli(errors.p);
      if (errors.run_cap > 0 && run >= errors.run_cap) err = false;
      run = err ? run + 1 : 0;
      if (!err) {
        out.peaks.push_back(t - (have_prev ? prev_inf_arrival : arrived));
        prev_inf_arrival = arrived;
        have_prev = true;
        ++out.informative;
      }
    } else if (t_arr <= t_switch) {
      advance(t_arr);
      if (pending.empty()) remaining = src.l;
      pending.push_back(t_arr);
      ++ia;
      if (pending.size() > 10'000'000)
        throw std::runtime_error("run_periodic_markov_fcfs: backlog diverges (unstable system)");
    } else {
      advance(t_switch);
      on = !on;
      t_switch = t + rng.exponential(on ? 1.0 / ch.mu : 1.0 / ch.lambda);
    }
  }
  out.horizon_used = t;
  return out;
}

}  // namespace aoc
