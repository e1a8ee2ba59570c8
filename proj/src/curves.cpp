#include "aoc/curves.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace aoc {

namespace {

constexpr double kKinkSnapRel = 1e-13;

bool close(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

std::vector<PwlBreakpoint> normalize_bps(std::vector<PwlBreakpoint> bps) {
  std::sort(bps.begin(), bps.end(),
            [](const PwlBreakpoint& a, const PwlBreakpoint& b) { return a.t < b.t; });
  std::vector<PwlBreakpoint> out;
  for (const auto& bp : bps) {
    if (!out.empty() && close(out.back().t, bp.t, 1e-12)) continue;
    out.push_back(bp);
  }
  // merge collinear continuations
  std::vector<PwlBreakpoint> merged;
  for (const auto& bp : out) {
    if (!merged.empty()) {
      const auto& prev = merged.back();
      if (prev.slope == bp.slope && std::isfinite(prev.slope)) {
        double cont = prev.value + prev.slope * (bp.t - prev.t);
        if (close(cont, bp.value, 1e-12)) continue;
      }
    }
    merged.push_back(bp);
  }
  return merged;
}

}  // namespace

PwlCurve::PwlCurve(std::vector<PwlBreakpoint> bps) : bps_(std::move(bps)) {
  if (bps_.empty()) throw std::invalid_argument("pwl: needs at least one breakpoint");
  if (bps_.front().t != 0.0) throw std::invalid_argument("pwl: first breakpoint must be at t=0");
  for (std::size_t i = 0; i < bps_.size(); ++i) {
    auto& bp = bps_[i];
    if (std::isnan(bp.t) || std::isnan(bp.value) || std::isnan(bp.slope))
      throw std::invalid_argument("pwl: NaN in breakpoint");
    if (!std::isfinite(bp.value)) throw std::invalid_argument("pwl: breakpoint value must be finite");
    if (bp.slope < 0.0) throw std::invalid_argument("pwl: slopes must be non-negative");
    if (std::isinf(bp.slope) && i + 1 != bps_.size())
      throw std::invalid_argument("pwl: infinite slope allowed only on the last segment");
    if (i > 0) {
      const auto& prev = bps_[i - 1];
      if (bp.t <= prev.t) throw std::invalid_argument("pwl: breakpoint times must increase");
      double left = prev.value + prev.slope * (bp.t - prev.t);
      double tol = 1e-9 * std::max(1.0, std::abs(left));
      if (bp.value < left - tol) throw std::invalid_argument("pwl: curve must be non-decreasing");
      if (bp.value < left) bp.value = left;
    } else if (bp.value < 0.0) {
      throw std::invalid_argument("pwl: value at 0+ must be non-negative");
    }
  }
}

PwlCurve PwlCurve::step(double at, double height) {
  if (at < 0.0 || height < 0.0) throw std::invalid_argument("pwl step: negative parameter");
  if (at == 0.0) return PwlCurve({{0.0, height, 0.0}});
  return PwlCurve({{0.0, 0.0, 0.0}, {at, height, 0.0}});
}

PwlCurve PwlCurve::affine(double value, double rate) {
  return PwlCurve({{0.0, value, rate}});
}

PwlCurve PwlCurve::delay(double t0) {
  if (t0 < 0.0) throw std::invalid_argument("pwl delay: negative latency");
  if (t0 == 0.0) return PwlCurve({{0.0, 0.0, kInf}});
  return PwlCurve({{0.0, 0.0, 0.0}, {t0, 0.0, kInf}});
}

PwlCurve PwlCurve::rate_latency(double rate, double latency) {
  if (latency == 0.0) return PwlCurve({{0.0, 0.0, rate}});
  return PwlCurve({{0.0, 0.0, 0.0}, {latency, 0.0, rate}});
}

std::size_t PwlCurve::segment_index(double t, bool right) const {
  auto cmp = [](const PwlBreakpoint& bp, double x) { return bp.t < x; };
  if (right) {
    auto it = std::upper_bound(bps_.begin(), bps_.end(), t,
                               [](double x, const PwlBreakpoint& bp) { return x < bp.t; });
    return static_cast<std::size_t>(it - bps_.begin()) - 1;
  }
  auto it = std::lower_bound(bps_.begin(), bps_.end(), t, cmp);
  return static_cast<std::size_t>(it - bps_.begin()) - 1;
}

double PwlCurve::eval(double t) const {
  if (t <= 0.0) return 0.0;
  std::size_t i = segment_index(t, false);
  const auto& bp = bps_[i];
  double dt = t - bp.t;
  if (dt == 0.0 || bp.slope == 0.0) return bp.value;
  return bp.value + bp.slope * dt;
}

double PwlCurve::limit_right(double t) const {
  if (t < 0.0) return 0.0;
  std::size_t i = segment_index(t, true);
  const auto& bp = bps_[i];
  double dt = t - bp.t;
  if (dt == 0.0 || bp.slope == 0.0) return bp.value;
  return bp.value + bp.slope * dt;
}

double PwlCurve::limit_left(double t) const { return eval(t); }

double PwlCurve::next_kink_after(double t) const {
  auto it = std::upper_bound(bps_.begin(), bps_.end(), t,
                             [](double x, const PwlBreakpoint& bp) { return x < bp.t; });
  if (it == bps_.end()) return kInf;
  return it->t;
}

double PwlCurve::sup_value() const {
  const auto& last = bps_.back();
  if (last.slope > 0.0) return kInf;
  return last.value;
}

bool PwlCurve::has_infinite_slope() const {
  return std::isinf(bps_.back().slope);
}

PwlCurve PwlCurve::shifted(double dt, double dv) const {
  std::vector<PwlBreakpoint> out;
  if (dt > 0.0) out.push_back({0.0, dv, 0.0});
  for (const auto& bp : bps_) out.push_back({bp.t + dt, bp.value + dv, bp.slope});
  return PwlCurve(normalize_bps(std::move(out)));
}

PwlCurve PwlCurve::pointwise_min(const PwlCurve& a, const PwlCurve& b) {
  std::vector<double> times;
  for (const auto& bp : a.bps_) times.push_back(bp.t);
  for (const auto& bp : b.bps_) times.push_back(bp.t);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end(),
                          [](double x, double y) { return close(x, y, 1e-12); }),
              times.end());

  struct Seg { double v, s; };
  auto seg_right = [](const PwlCurve& c, double t) -> Seg {
    std::size_t i = c.segment_index(t, true);
    const auto& bp = c.bps_[i];
    double dt = t - bp.t;
    double v = (dt == 0.0 || bp.slope == 0.0) ? bp.value : bp.value + bp.slope * dt;
    return {v, bp.slope};
  };

  std::vector<double> events = times;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    double t0 = times[k], t1 = times[k + 1];
    Seg sa = seg_right(a, t0), sb = seg_right(b, t0);
    if (std::isinf(sa.s) || std::isinf(sb.s)) continue;
    double d0 = sa.v - sb.v;
    double ds = sa.s - sb.s;
    if (ds == 0.0) continue;
    double tc = t0 - d0 / ds;
    if (tc > t0 && tc < t1 && !close(tc, t0, 1e-12) && !close(tc, t1, 1e-12))
      events.push_back(tc);
  }
  std::sort(events.begin(), events.end());

  std::vector<PwlBreakpoint> out;
  for (std::size_t k = 0; k < events.size(); ++k) {
    double t = events[k];
    Seg sa = seg_right(a, t), sb = seg_right(b, t);
    double v, s;
    if (std::isinf(sa.s) && std::isinf(sb.s)) {
      if (k + 1 == events.size()) { v = std::min(sa.v, sb.v); s = kInf; }
      else throw std::runtime_error("pointwise_min: two infinite-slope segments");
    } else if (std::isinf(sa.s)) {
      v = sb.v; s = sb.s;
    } else if (std::isinf(sb.s)) {
      v = sa.v; s = sa.s;
    } else {
      // The slope must belong to whichever curve is lower on (t, t_next).
      // Both are affine and crossing-free there, so compare at the midpoint;
      // comparing at t itself misranks the curves when t is a computed
      // crossing point and rounding noise breaks the tie the wrong way.
      v = std::min(sa.v, sb.v);
      double h = (k + 1 < events.size()) ? 0.5 * (events[k + 1] - t) : 1.0;
      s = (sa.v + sa.s * h <= sb.v + sb.s * h) ? sa.s : sb.s;
    }
    out.push_back({t, v, s});
  }
  return PwlCurve(normalize_bps(std::move(out)));
}

Staircase::Staircase(double step_kb, double width_ms, Rounding r, double shift_kb)
    : step(step_kb), width(width_ms), rounding(r), shift(shift_kb) {
  if (!(step > 0.0)) throw std::invalid_argument("staircase.step must be > 0");
  if (!(width > 0.0)) throw std::invalid_argument("staircase.width must be > 0");
  if (min_positive_value() < 0.0)
    throw std::invalid_argument("staircase.shift makes the curve negative");
}

namespace {
// Quotient t/width with snapping onto positive integers so that kink
// positions computed as m*width evaluate consistently.
struct QPos {
  double k = 0.0;     // floor of the (snapped) quotient
  bool on_kink = false;
};

QPos qpos(double t, double width) {
  double q = t / width;
  double m = std::round(q);
  if (m >= 1.0 && std::abs(q - m) <= kKinkSnapRel * m) return {m, true};
  return {std::floor(q), false};
}
}  // namespace

double Staircase::eval(double t) const {
  if (t <= 0.0) return 0.0;
  QPos p = qpos(t, width);
  double n;
  if (rounding == Rounding::Ceil) n = p.on_kink ? p.k : p.k + 1.0;
  else n = p.k;
  return step * n + shift;
}

double Staircase::limit_right(double t) const {
  if (t < 0.0) return 0.0;
  if (t == 0.0) return rounding == Rounding::Ceil ? step + shift : shift;
  QPos p = qpos(t, width);
  double n;
  if (rounding == Rounding::Ceil) n = p.k + 1.0;
  else n = p.k;
  return step * n + shift;
}

double Staircase::limit_left(double t) const {
  if (t <= 0.0) return 0.0;
  QPos p = qpos(t, width);
  double n;
  if (rounding == Rounding::Ceil) n = p.on_kink ? p.k : p.k + 1.0;
  else n = p.on_kink ? p.k - 1.0 : p.k;
  return step * n + shift;
}

double Staircase::next_kink_after(double t) const {
  if (t < 0.0) return 0.0;
  if (t == 0.0) return width;
  QPos p = qpos(t, width);
  return (p.k + 1.0) * width;
}

double Staircase::min_positive_value() const {
  return rounding == Rounding::Ceil ? step + shift : shift;
}

LatencyRate::LatencyRate(double rate_kb_ms, double latency_ms)
    : rate(rate_kb_ms), latency(latency_ms) {
  if (!(rate > 0.0)) throw std::invalid_argument("latency_rate.rate must be > 0");
  if (latency < 0.0) throw std::invalid_argument("latency_rate.latency must be >= 0");
}

double LatencyRate::eval(double t) const {
  if (t <= latency) return 0.0;
  return rate * (t - latency);
}

double eval(const Curve& c, double t) {
  return std::visit([&](const auto& k) { return k.eval(t); }, c);
}

double limit_right(const Curve& c, double t) {
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, LatencyRate>) return k.eval(t);
        else return k.limit_right(t);
      },
      c);
}

double limit_left(const Curve& c, double t) {
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, LatencyRate>) return k.eval(t);
        else return k.limit_left(t);
      },
      c);
}

double next_kink_after(const Curve& c, double t) {
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, LatencyRate>)
          return t < k.latency ? k.latency : kInf;
        else
          return k.next_kink_after(t);
      },
      c);
}

double long_run_rate(const Curve& c) {
  return std::visit(
      [](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, LatencyRate>) return k.rate;
        else return k.long_run_rate();
      },
      c);
}

double sup_value(const Curve& c) {
  return std::visit(
      [](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, PwlCurve>) return k.sup_value();
        else return kInf;
      },
      c);
}

bool has_infinite_slope(const Curve& c) {
  if (const auto* p = std::get_if<PwlCurve>(&c)) return p->has_infinite_slope();
  return false;
}

double affine_upper_offset(const Curve& c) {
  return std::visit(
      [](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, LatencyRate>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, Staircase>) {
          return k.rounding == Staircase::Rounding::Ceil ? k.step + k.shift : k.shift;
        } else {
          if (k.has_infinite_slope())
            throw std::invalid_argument("affine offset undefined for infinite slope");
          double r = k.long_run_rate();
          double best = 0.0;
          const auto& bps = k.breakpoints();
          for (const auto& bp : bps) {
            best = std::max(best, k.eval(bp.t) - r * bp.t);
            best = std::max(best, bp.value - r * bp.t);
          }
          return best;
        }
      },
      c);
}

double affine_lower_offset(const Curve& c) {
  return std::visit(
      [](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, LatencyRate>) {
          return k.rate * k.latency;
        } else if constexpr (std::is_same_v<T, Staircase>) {
          return std::max(0.0, k.rounding == Staircase::Rounding::Ceil ? -k.shift
                                                                       : k.step - k.shift);
        } else {
          if (k.has_infinite_slope())
            throw std::invalid_argument("affine offset undefined for infinite slope");
          double r = k.long_run_rate();
          double best = 0.0;
          for (const auto& bp : k.breakpoints()) {
            best = std::max(best, r * bp.t - k.eval(bp.t));
            best = std::max(best, r * bp.t - bp.value);
          }
          return best;
        }
      },
      c);
}

double right_slope(const Curve& c, double t) {
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, LatencyRate>) {
          return t >= k.latency ? k.rate : 0.0;
        } else if constexpr (std::is_same_v<T, Staircase>) {
          return 0.0;
        } else {
          if (t < 0.0) return 0.0;
          const auto& bps = k.breakpoints();
          auto it = std::upper_bound(bps.begin(), bps.end(), t,
                                     [](double x, const PwlBreakpoint& bp) { return x < bp.t; });
          return (it - 1)->slope;
        }
      },
      c);
}

PwlCurve materialize(const Curve& c, double horizon) {
  if (!(horizon > 0.0)) throw std::invalid_argument("materialize: horizon must be positive");
  return std::visit(
      [&](const auto& k) -> PwlCurve {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, PwlCurve>) {
          std::vector<PwlBreakpoint> out;
          for (const auto& bp : k.breakpoints())
            if (bp.t <= horizon) out.push_back(bp);
          return PwlCurve(std::move(out));
        } else if constexpr (std::is_same_v<T, LatencyRate>) {
          return PwlCurve::rate_latency(k.rate, k.latency);
        } else {
          double steps = horizon / k.width + 2.0;
          if (steps > 2e6) throw std::runtime_error("materialize: staircase too fine for horizon");
          std::vector<PwlBreakpoint> out;
          out.push_back({0.0, k.limit_right(0.0), 0.0});
          for (double m = 1.0; m * k.width <= horizon; m += 1.0)
            out.push_back({m * k.width, k.limit_right(m * k.width), 0.0});
          return PwlCurve(std::move(out));
        }
      },
      c);
}

namespace {

bool is_pure_delay(const Curve& c, double* t0) {
  const auto* p = std::get_if<PwlCurve>(&c);
  if (!p || !p->has_infinite_slope()) return false;
  for (const auto& bp : p->breakpoints())
    if (bp.value != 0.0) return false;
  *t0 = p->breakpoints().back().t;
  return true;
}

std::vector<double> kink_times(const Curve& c, double lo, double hi) {
  std::vector<double> out;
  double t = lo;
  for (int guard = 0; guard < 4000000; ++guard) {
    t = next_kink_after(c, t);
    if (!(t < hi) || !std::isfinite(t)) return out;
    out.push_back(t);
  }
  throw std::runtime_error("kink iteration overflow");
}

}  // namespace

PwlCurve min_plus_conv(const Curve& f, const Curve& g, double horizon) {
  if (!(horizon > 0.0)) throw std::invalid_argument("min_plus_conv: horizon must be positive");
  double t0 = 0.0;
  if (is_pure_delay(f, &t0)) {
    PwlCurve mg = materialize(g, horizon);
    return t0 == 0.0 ? mg : mg.shifted(t0, 0.0);
  }
  if (is_pure_delay(g, &t0)) {
    PwlCurve mf = materialize(f, horizon);
    return t0 == 0.0 ? mf : mf.shifted(t0, 0.0);
  }
  if (has_infinite_slope(f) || has_infinite_slope(g))
    throw std::invalid_argument(
        "min_plus_conv: infinite slopes only supported as pure delay elements");

  PwlCurve mf = materialize(f, horizon);
  PwlCurve mg = materialize(g, horizon);

  std::vector<double> cf = kink_times(f, 0.0, horizon + 1e-12);
  cf.insert(cf.begin(), 0.0);
  std::vector<double> cg = kink_times(g, 0.0, horizon + 1e-12);
  cg.insert(cg.begin(), 0.0);

  std::vector<PwlCurve> copies;
  copies.reserve(cf.size() + cg.size());
  for (double c : cf) copies.push_back(mg.shifted(c, eval(f, c)));
  for (double s : cg) copies.push_back(mf.shifted(s, eval(g, s)));

  PwlCurve h = copies.front();
  for (std::size_t i = 1; i < copies.size(); ++i)
    h = PwlCurve::pointwise_min(h, copies[i]);

  std::vector<PwlBreakpoint> out;
  for (const auto& bp : h.breakpoints())
    if (bp.t <= horizon) out.push_back(bp);
  return PwlCurve(std::move(out));
}

double pseudo_inverse(const Curve& c, double y, Pinv kind) {
  if (std::isnan(y)) throw std::invalid_argument("pseudo_inverse: NaN level");
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, LatencyRate>) {
          if (kind == Pinv::Upper) {
            if (y < 0.0) return 0.0;
            return k.latency + y / k.rate;
          }
          if (y <= 0.0) return 0.0;
          return k.latency + y / k.rate;
        } else if constexpr (std::is_same_v<T, Staircase>) {
          double v = (y - k.shift) / k.step;
          if (k.rounding == Staircase::Rounding::Ceil) {
            if (kind == Pinv::Upper) {
              if (y < 0.0) return 0.0;
              double K = std::floor(v + kKinkSnapRel);
              return std::max(0.0, K) * k.width;
            }
            if (y <= 0.0) return 0.0;
            if (k.shift >= y) return 0.0;
            double K = std::ceil(v - kKinkSnapRel);
            return (K - 1.0) * k.width;
          }
          if (kind == Pinv::Upper) {
            if (y < 0.0) return 0.0;
            if (y < k.shift) return 0.0;
            double K = std::floor(v + kKinkSnapRel);
            return (K + 1.0) * k.width;
          }
          if (y <= 0.0) return 0.0;
          if (k.shift >= y) return 0.0;
          double K = std::ceil(v - kKinkSnapRel);
          return K * k.width;
        } else {
          const auto& bps = k.breakpoints();
          if (kind == Pinv::Upper) {
            if (y < 0.0) return 0.0;
            if (k.sup_value() <= y) return kInf;
            for (std::size_t i = 0; i < bps.size(); ++i) {
              double left = k.eval(bps[i].t);
              double right = bps[i].value;
              if (left <= y && y < right) return bps[i].t;
              double seg_end = (i + 1 < bps.size()) ? bps[i + 1].t : kInf;
              double end_val = (i + 1 < bps.size()) ? k.eval(seg_end) : k.sup_value();
              if (right <= y && (y < end_val || (std::isinf(seg_end) && bps[i].slope > 0.0))) {
                if (bps[i].slope == 0.0) return seg_end;  // plateau ends below y jump
                return bps[i].t + (y - right) / bps[i].slope;
              }
            }
            return kInf;
          }
          if (y <= 0.0) return 0.0;
          if (k.sup_value() < y) return kInf;
          for (std::size_t i = 0; i < bps.size(); ++i) {
            if (bps[i].value >= y) return bps[i].t;
            double seg_end = (i + 1 < bps.size()) ? bps[i + 1].t : kInf;
            if (bps[i].slope > 0.0) {
              double need = bps[i].t + (y - bps[i].value) / bps[i].slope;
              if (need <= seg_end || std::isinf(seg_end)) return need;
            }
          }
          return kInf;
        }
      },
      c);
}

namespace {

struct SteadyInfo {
  double start;   // time after which the curve is affine or exactly periodic
  double period;  // 0 when affine
};

SteadyInfo steady_info(const Curve& c) {
  return std::visit(
      [](const auto& k) -> SteadyInfo {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, LatencyRate>) return {k.latency, 0.0};
        else if constexpr (std::is_same_v<T, Staircase>) return {0.0, k.width};
        else return {k.breakpoints().back().t, 0.0};
      },
      c);
}

double common_period(double p1, double p2) {
  if (p1 == 0.0) return p2;
  if (p2 == 0.0) return p1;
  for (int k1 = 1; k1 <= 4096; ++k1) {
    double P = k1 * p1;
    double k2 = std::round(P / p2);
    if (k2 >= 1.0 && std::abs(k2 * p2 - P) <= 1e-9 * P) return P;
  }
  throw std::runtime_error("equal-rate staircase pair without a small common period");
}

// inf over x >= 0 of S(delta + x) - E(x); exact for the supported kinds.
double inf_busy_branch(const Curve& S, const Curve& E, double delta) {
  double rs = long_run_rate(S);
  double re = long_run_rate(E);
  if (re > rs) return -kInf;
  double dS = affine_lower_offset(S);
  double bE = affine_upper_offset(E);

  auto phi_point = [&](double x) { return eval(S, delta + x) - eval(E, x); };
  auto phi_right = [&](double x) { return limit_right(S, delta + x) - limit_right(E, x); };
  auto phi_left = [&](double x) { return limit_left(S, delta + x) - limit_left(E, x); };

  double best = std::min(eval(S, delta), phi_right(0.0));
  double x = 0.0;
  double steady_target = -1.0;
  for (int guard = 0; guard < 20000000; ++guard) {
    double xs = next_kink_after(S, delta + x) - delta;
    double xe = next_kink_after(E, x);
    double xn = std::min(xs, xe);
    if (!std::isfinite(xn)) break;  // affine tail, slope rs - re >= 0
    best = std::min({best, phi_left(xn), phi_point(xn), phi_right(xn)});
    x = xn;
    if (rs > re) {
      if ((rs - re) * x + rs * delta - dS - bE >= best) break;
    } else {
      if (rs * delta - dS - bE >= best) break;
      if (steady_target < 0.0) {
        SteadyInfo is = steady_info(S);
        SteadyInfo ie = steady_info(E);
        double base = std::max({x, is.start - delta, ie.start});
        steady_target = base + common_period(is.period, ie.period);
      }
      if (x >= steady_target) break;
    }
  }
  return best;
}

// inf over x in (0, delta] of S(delta - x) + E(x); exact.
double inf_idle_branch(const Curve& S, const Curve& E, double delta) {
  std::vector<double> xs{0.0, delta};
  for (double k : kink_times(E, 0.0, delta)) xs.push_back(k);
  for (double k : kink_times(S, 0.0, delta)) xs.push_back(delta - k);
  std::sort(xs.begin(), xs.end());

  double best = kInf;
  for (double x : xs) {
    if (x < 0.0) continue;
    if (x > 0.0) {
      best = std::min(best, eval(S, delta - x) + eval(E, x));
      best = std::min(best, limit_right(S, delta - x) + limit_left(E, x));
    }
    if (x < delta)
      best = std::min(best, limit_left(S, delta - x) + limit_right(E, x));
  }
  return best;
}

template <typename Pred>
double bisect_sup(Pred pred, double horizon) {
  if (!pred(0.0)) return 0.0;
  double lo = 0.0, hi = horizon;
  for (int k = 0;; ++k) {
    if (!pred(hi)) break;
    lo = hi;
    hi *= 2.0;
    if (k > 60) return kInf;
  }
  for (int i = 0; i < 200; ++i) {
    double tol = std::max(1e-12, 4e-16 * hi);
    if (hi - lo <= tol) break;
    double mid = 0.5 * (lo + hi);
    if (pred(mid)) lo = mid;
    else hi = mid;
  }
  return hi;
}

void check_deviation_inputs(const Curve& service, double horizon) {
  if (!(horizon > 0.0)) throw std::invalid_argument("deviation horizon must be positive");
  if (has_infinite_slope(service))
    throw std::invalid_argument("deviation operators need finite service slopes");
  if (!(long_run_rate(service) > 0.0))
    throw std::invalid_argument("deviation operators need positive service rate");
}

}  // namespace

double aoi_deviation(const Curve& service, const Curve& upper_env,
                     const Curve& lower_env, double loss_threshold,
                     double horizon) {
  check_deviation_inputs(service, horizon);
  if (loss_threshold < 0.0) throw std::invalid_argument("loss_threshold must be >= 0");
  const double q = loss_threshold;
  if (sup_value(lower_env) <= q) return kInf;
  if (long_run_rate(upper_env) > long_run_rate(service)) return kInf;

  auto pred_busy = [&](double d) { return inf_busy_branch(service, upper_env, d) <= q; };
  auto pred_idle = [&](double d) {
    double g = d <= 0.0 ? limit_right(lower_env, 0.0)
                        : inf_idle_branch(service, lower_env, d);
    return g <= q;
  };
  double d1 = bisect_sup(pred_busy, horizon);
  double d2 = bisect_sup(pred_idle, horizon);
  if (std::isinf(d1) || std::isinf(d2)) return kInf;
  return std::max(d1, d2);
}

double default_deviation_horizon(const Curve& service, const Curve& upper_env,
                                 const Curve& lower_env, double loss_threshold) {
  double rs = long_run_rate(service);
  double dS = affine_lower_offset(service);
  double bE = affine_upper_offset(upper_env);
  double h1 = (loss_threshold + dS + bE) / rs;
  double tq = pseudo_inverse(lower_env, loss_threshold, Pinv::Upper);
  if (!std::isfinite(tq)) tq = 0.0;
  double h2 = tq + (loss_threshold + dS) / rs;
  SteadyInfo is = steady_info(service);
  SteadyInfo iu = steady_info(upper_env);
  return 2.0 * (h1 + h2) + is.start + iu.start + 10.0 * (is.period + iu.period) + 1.0;
}

double aoi_deviation(const Curve& service, const Curve& upper_env,
                     const Curve& lower_env, double loss_threshold) {
  double h = default_deviation_horizon(service, upper_env, lower_env, loss_threshold);
  return aoi_deviation(service, upper_env, lower_env, loss_threshold, h);
}

double horizontal_deviation(const Curve& upper_env, const Curve& service,
                            double horizon) {
  check_deviation_inputs(service, horizon);
  if (long_run_rate(upper_env) > long_run_rate(service)) return kInf;

  std::vector<double> cands{0.0, horizon};
  for (double k : kink_times(upper_env, 0.0, horizon)) cands.push_back(k);
  double env_cap = limit_right(upper_env, horizon);
  double s = 0.0;
  for (int guard = 0; guard < 4000000; ++guard) {
    s = next_kink_after(service, s);
    if (!std::isfinite(s) || eval(service, s) > env_cap) break;
    for (double y : {eval(service, s), limit_right(service, s)}) {
      for (Pinv kind : {Pinv::Lower, Pinv::Upper}) {
        double t = pseudo_inverse(upper_env, y, kind);
        if (std::isfinite(t) && t <= horizon) cands.push_back(t);
      }
    }
  }

  double best = 0.0;
  for (double t : cands) {
    double vt = eval(upper_env, t);
    double vr = limit_right(upper_env, t);
    double a = pseudo_inverse(service, vt, Pinv::Lower) - t;
    double b1 = pseudo_inverse(service, vr, Pinv::Lower) - t;
    best = std::max({best, a, b1});
    if (right_slope(upper_env, t) > 0.0)
      best = std::max(best, pseudo_inverse(service, vr, Pinv::Upper) - t);
  }
  return best;
}

double horizontal_deviation(const Curve& upper_env, const Curve& service) {
  double rs = long_run_rate(service);
  double bE = affine_upper_offset(upper_env);
  double dS = affine_lower_offset(service);
  SteadyInfo is = steady_info(service);
  SteadyInfo iu = steady_info(upper_env);
  double h = 2.0 * (bE + dS) / rs + is.start + iu.start + 10.0 * (is.period + iu.period) + 1.0;
  return horizontal_deviation(upper_env, service, h);
}

Curve packetize_transform(const Curve& service, double l_max) {
  if (l_max < 0.0) throw std::invalid_argument("packetize: l_max must be >= 0");
  if (l_max == 0.0) return service;
  return std::visit(
      [&](const auto& k) -> Curve {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, LatencyRate>) {
          return LatencyRate(k.rate, k.latency + l_max / k.rate);
        } else if constexpr (std::is_same_v<T, Staircase>) {
          if (l_max > k.min_positive_value())
            throw std::invalid_argument(
                "packetize: staircase would clip below zero; not representable");
          return Staircase(k.step, k.width, k.rounding, k.shift - l_max);
        } else {
          double tc = pseudo_inverse(Curve(k), l_max, Pinv::Upper);
          if (!std::isfinite(tc)) return PwlCurve::zero();
          std::vector<PwlBreakpoint> out;
          if (tc > 0.0) out.push_back({0.0, 0.0, 0.0});
          double v0 = k.limit_right(tc) - l_max;
          out.push_back({tc, std::max(0.0, v0), right_slope(Curve(k), tc)});
          for (const auto& bp : k.breakpoints())
            if (bp.t > tc) out.push_back({bp.t, bp.value - l_max, bp.slope});
          return PwlCurve(normalize_bps(std::move(out)));
        }
      },
      service);
}

nlohmann::json curve_to_json(const Curve& c) {
  using nlohmann::json;
  return std::visit(
      [](const auto& k) -> json {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, LatencyRate>) {
          return json{{"kind", "latency_rate"},
                      {"rate_kb_per_ms", k.rate},
                      {"latency_ms", k.latency}};
        } else if constexpr (std::is_same_v<T, Staircase>) {
          return json{{"kind", "staircase"},
                      {"step_kb", k.step},
                      {"width_ms", k.width},
                      {"rounding", k.rounding == Staircase::Rounding::Ceil ? "ceil" : "floor"},
                      {"shift_kb", k.shift}};
        } else {
          json bps = json::array();
          for (const auto& bp : k.breakpoints()) {
            json e{{"t_ms", bp.t}, {"value_kb", bp.value}};
            if (std::isinf(bp.slope)) e["slope_kb_per_ms"] = "inf";
            else e["slope_kb_per_ms"] = bp.slope;
            bps.push_back(e);
          }
          return json{{"kind", "pwl"}, {"breakpoints", bps}};
        }
      },
      c);
}

namespace {
double require_number(const nlohmann::json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_number())
    throw std::invalid_argument(std::string("curve.") + field + ": missing or not a number");
  return j[field].get<double>();
}
}  // namespace

Curve curve_from_json(const nlohmann::json& j) {
  if (!j.contains("kind") || !j["kind"].is_string())
    throw std::invalid_argument("curve.kind: missing or not a string");
  std::string kind = j["kind"].get<std::string>();
  if (kind == "latency_rate")
    return LatencyRate(require_number(j, "rate_kb_per_ms"), require_number(j, "latency_ms"));
  if (kind == "staircase") {
    std::string r = j.value("rounding", "ceil");
    if (r != "ceil" && r != "floor")
      throw std::invalid_argument("curve.rounding: must be \"ceil\" or \"floor\"");
    return Staircase(require_number(j, "step_kb"), require_number(j, "width_ms"),
                     r == "ceil" ? Staircase::Rounding::Ceil : Staircase::Rounding::Floor,
                     j.value("shift_kb", 0.0));
  }
  if (kind == "pwl") {
    if (!j.contains("breakpoints") || !j["breakpoints"].is_array())
      throw std::invalid_argument("curve.breakpoints: missing or not an array");
    std::vector<PwlBreakpoint> bps;
    for (const auto& e : j["breakpoints"]) {
      double slope;
      if (e.contains("slope_kb_per_ms") && e["slope_kb_per_ms"].is_string() &&
          e["slope_kb_per_ms"].get<std::string>() == "inf")
        slope = kInf;
      else
        slope = require_number(e, "slope_kb_per_ms");
      bps.push_back({require_number(e, "t_ms"), require_number(e, "value_kb"), slope});
    }
    return PwlCurve(std::move(bps));
  }
  throw std::invalid_argument("curve.kind: unknown kind \"" + kind + "\"");
}

}  // namespace aoc
