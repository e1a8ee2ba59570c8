#pragma once

// Min-plus curve algebra on the function space F0: non-negative,
// non-decreasing, left-continuous cumulative functions with f(t) = 0
// for t <= 0. Time is ms, data is kb throughout.

#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace aoc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// A breakpoint opens the segment (t, t_next]: f(x) = value + slope*(x - t)
// where `value` is the right limit f(t+). Jumps are encoded by value
// exceeding the left limit inherited from the previous segment.
struct PwlBreakpoint {
  double t = 0.0;
  double value = 0.0;
  double slope = 0.0;
};

class PwlCurve {
 public:
  PwlCurve() : bps_{{0.0, 0.0, 0.0}} {}
  explicit PwlCurve(std::vector<PwlBreakpoint> bps);

  static PwlCurve zero() { return PwlCurve(); }
  // 0 for t <= at, height afterwards.
  static PwlCurve step(double at, double height);
  // value + rate*t for t > 0 (token-bucket style envelope).
  static PwlCurve affine(double value, double rate);
  // 0 up to t0, +inf afterwards (pure delay element).
  static PwlCurve delay(double t0);
  static PwlCurve rate_latency(double rate, double latency);

  double eval(double t) const;         // left-continuous value
  double limit_right(double t) const;  // f(t+)
  double limit_left(double t) const;   // f(t-) == eval(t) for this class
  double next_kink_after(double t) const;
  double long_run_rate() const { return bps_.back().slope; }
  double sup_value() const;
  bool has_infinite_slope() const;

  const std::vector<PwlBreakpoint>& breakpoints() const { return bps_; }

  PwlCurve shifted(double dt, double dv) const;  // f(t - dt) + dv for t > dt
  static PwlCurve pointwise_min(const PwlCurve& a, const PwlCurve& b);

 private:
  std::vector<PwlBreakpoint> bps_;  // bps_[0].t == 0, t strictly increasing
  std::size_t segment_index(double t, bool right) const;
};

struct Staircase {
  enum class Rounding { Ceil, Floor };

  double step = 1.0;   // kb, > 0
  double width = 1.0;  // ms, > 0
  Rounding rounding = Rounding::Ceil;
  double shift = 0.0;  // kb, additive offset for t > 0

  Staircase() = default;
  Staircase(double step_kb, double width_ms, Rounding r, double shift_kb = 0.0);

  double eval(double t) const;
  double limit_right(double t) const;
  double limit_left(double t) const;
  double next_kink_after(double t) const;
  double long_run_rate() const { return step / width; }
  // Smallest value taken on t > 0; must be >= 0 for curve validity.
  double min_positive_value() const;
};

struct LatencyRate {
  double rate = 1.0;     // kb/ms, > 0
  double latency = 0.0;  // ms, >= 0

  LatencyRate() = default;
  LatencyRate(double rate_kb_ms, double latency_ms);

  double eval(double t) const;
};

using Curve = std::variant<PwlCurve, Staircase, LatencyRate>;

double eval(const Curve& c, double t);
double limit_right(const Curve& c, double t);
double limit_left(const Curve& c, double t);
double next_kink_after(const Curve& c, double t);
double long_run_rate(const Curve& c);
double sup_value(const Curve& c);
bool has_infinite_slope(const Curve& c);
// Tight affine bounds for t >= 0 at the long-run rate:
//   f(t) <= rate*t + affine_upper_offset(c)
//   f(t) >= rate*t - affine_lower_offset(c)
double affine_upper_offset(const Curve& c);
double affine_lower_offset(const Curve& c);
// Slope of the segment immediately right of t (0 for flat pieces).
double right_slope(const Curve& c, double t);

// Exact piecewise-linear snapshot of c on [0, horizon].
PwlCurve materialize(const Curve& c, double horizon);

// (f (x) g)(t) = inf_{0<=tau<=t} f(tau) + g(t - tau), exact on [0, horizon].
PwlCurve min_plus_conv(const Curve& f, const Curve& g, double horizon);

enum class Pinv { Upper, Lower };
// Upper: sup{d >= 0 : f(d) <= y}; Lower: inf{d >= 0 : f(d) >= y}.
// Returns +inf when the set is unbounded (Upper) or empty (Lower).
double pseudo_inverse(const Curve& c, double y, Pinv kind);

// sup{delta >= 0 : min(inf_{x>=0}{S(delta+x) - upper_env(x)},
//                      inf_{x in (0,delta]}{S(delta-x) + lower_env(x)})
//                 <= loss_threshold}
// +inf when the system is unstable or the lower envelope never clears the
// threshold. Exact infima; the sup located by bisection to ~1e-12 ms.
double aoi_deviation(const Curve& service, const Curve& upper_env,
                     const Curve& lower_env, double loss_threshold,
                     double horizon);
double aoi_deviation(const Curve& service, const Curve& upper_env,
                     const Curve& lower_env, double loss_threshold);

// sup_t inf{v >= 0 : service(t + v) >= upper_env(t)} over t in [0, horizon].
double horizontal_deviation(const Curve& upper_env, const Curve& service,
                            double horizon);
double horizontal_deviation(const Curve& upper_env, const Curve& service);

// Pointwise max(0, S(t) - l_max).
Curve packetize_transform(const Curve& service, double l_max);

// Search-window hint covering every candidate deviation.
double default_deviation_horizon(const Curve& service, const Curve& upper_env,
                                 const Curve& lower_env, double loss_threshold);

nlohmann::json curve_to_json(const Curve& c);
Curve curve_from_json(const nlohmann::json& j);

}  // namespace aoc
