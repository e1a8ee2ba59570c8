#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "aoc/curves.hpp"
#include "aoc/service.hpp"
#include "aoc/traffic.hpp"

namespace aoc {

// Deterministic random stream; every distribution is derived from the raw
// 64-bit generator so traces are reproducible across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() {  // [0, 1)
    return (gen_() >> 11) * 0x1.0p-53;
  }
  double exponential(double mean) { return -mean * std::log1p(-uniform()); }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 gen_;
};

struct EventRecord {
  int n = 0;     // per-flow message index, 1-based
  int flow = 0;  // 0 is the highest priority
  double t_arrival = 0.0;
  double size = 0.0;
  double t_departure = 0.0;
  bool error = false;
};
using EventTrace = std::vector<EventRecord>;

struct ChannelSegment {
  double t_begin = 0.0;
  double t_end = 0.0;
  double rate = 0.0;  // kb/ms; 0 during off intervals
};

struct ChannelPath {
  std::vector<ChannelSegment> segments;  // tile [0, horizon]
  double horizon = 0.0;
  std::uint64_t seed = 0;
};

// Periodic arrivals phase + k*w for k >= 0, strictly before the horizon.
std::vector<double> gen_arrivals(const PeriodicSource& src, double horizon);
// Poisson arrivals: iid exponential gaps with mean w, strictly before the
// horizon.
std::vector<double> gen_arrivals(const PoissonSource& src, double horizon, std::uint64_t seed);

// Stationary start (on with probability p_on), exponential holding times.
ChannelPath gen_markov_path(const MarkovOnOff& ch, double horizon, std::uint64_t seed);
ChannelPath constant_path(double rate, double horizon);

struct ServeResult {
  EventTrace trace;        // completed messages only, in arrival order
  PwlCurve fluid;          // cumulative served work D(t), continuous
  double backlog_kb = 0.0; // work left at the horizon (partial head included)
};

// Exact event-driven fluid FCFS: message n departs when its last bit is
// served. Messages still in the queue at the horizon are reported as backlog.
ServeResult serve_fcfs(const std::vector<double>& arrivals, double size,
                       const ChannelPath& path);

// Fluid preemptive-resume static priority across flows (index 0 highest),
// FCFS within each flow. Trace records are ordered by arrival time.
ServeResult serve_priority(const std::vector<std::vector<double>>& flow_arrivals,
                           const std::vector<double>& flow_sizes, const ChannelPath& path);

// Left-continuous staircase with a jump of `size` at each arrival instant.
PwlCurve arrival_curve(const std::vector<double>& arrivals, double size);
// Staircase of whole-message departures taken from a single-flow trace.
PwlCurve packetized_departure_curve(const EventTrace& trace, int flow = 0);

// iid message error flags with an optional cap on consecutive errors
// (cap 0 = uncapped).
struct ErrorModel {
  double p = 0.0;
  int run_cap = 0;
};
void apply_errors(EventTrace& trace, const ErrorModel& em, Rng& rng);

struct AoiSample {
  double t = 0.0;    // departure epoch
  double aoi = 0.0;  // peak value just before it
};

struct AoiSampleSet {
  std::vector<AoiSample> samples;  // one per informative departure
  std::vector<double> delays;      // V(n) = T_D(n) - T_A(n) for every message
  std::uint64_t seed = 0;
};

// Peak AoI just before each informative departure:
// T_D(k) - T_A(previous informative); the first informative peak equals its
// own delay. Error-flagged messages contribute delays but never reset the age.
AoiSampleSet measure_aoi(const EventTrace& trace, int flow = 0);

// Direct evaluation of sup{delta in [0,t] : D(t) - A(t - delta) <= 0}.
// Requires D <= A pointwise (causality).
double oracle_aoi(const PwlCurve& A, const PwlCurve& D, double t);

// Nearest-rank quantile with upward rounding (conservative).
double empirical_quantile(std::vector<double> samples, double q);
// Rule of thumb: at least 100 samples above the quantile.
bool quantile_reliable(std::size_t count, double q);

// Streaming high-volume run: periodic source over a Markov on-off channel,
// fluid FCFS, until `target_informative` informative departures are recorded.
// Keeps only the per-departure samples, so horizon-sized state never builds up.
struct QuantileRun {
  std::vector<double> peaks;   // informative departures only
  std::vector<double> delays;  // every departure
  std::uint64_t informative = 0;
  std::uint64_t total = 0;
  double horizon_used = 0.0;
};
QuantileRun run_periodic_markov_fcfs(const PeriodicSource& src, const MarkovOnOff& ch,
                                     std::uint64_t target_informative, std::uint64_t seed,
                                     const ErrorModel& errors = {});

}  // namespace aoc
