#include "aoc/bounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace aoc {

namespace {

struct ThetaPoint {
  double theta, rho, sigma;
};

template <class F>
double golden_argmin(F&& f, double a, double b, int iters) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 <= f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - gr * (b - a); f1 = f(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + gr * (b - a); f2 = f(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

// Profile values computed from ln(eps) so that risk splits far below the
// smallest representable double stay usable.
double profile_under(double theta, double rho, double sigma, double r, double tau0,
                     double ln_eps) {
  double raw = -(std::log(theta * (rho - r) * tau0) + ln_eps) / theta + r * tau0 + sigma;
  double clamp = r * tau0 + sigma;
  double b = std::max(raw, clamp);
  return std::isfinite(b) ? b : kInf;
}

double profile_over(double theta, double rho, double sigma, double r, double tau0,
                    double ln_eps) {
  double raw = -(std::log(theta * (r - rho) * tau0) + ln_eps) / theta + r * tau0 + sigma;
  double clamp = r * tau0 + sigma;
  double b = std::max(raw, clamp);
  return std::isfinite(b) ? b : kInf;
}

// b is unimodal in ln tau0 with the minimum at min(1/(theta r), tau0 where the
// log argument reaches 1); golden section around that point.
double best_b(bool underflow, double theta, double rho, double sigma, double r, double ln_eps,
              double* tau0_out) {
  double margin = underflow ? rho - r : r - rho;
  if (!(margin > 0.0) || !(theta > 0.0) || !(r > 0.0)) {
    *tau0_out = 0.0;
    return kInf;
  }
  double ln_star = -std::log(theta * r);
  double ln_cross = -std::log(theta * margin) - ln_eps;
  double center = std::min(ln_star, ln_cross);
  auto f = [&](double lt) {
    double tau0 = std::exp(lt);
    return underflow ? profile_under(theta, rho, sigma, r, tau0, ln_eps)
                     : profile_over(theta, rho, sigma, r, tau0, ln_eps);
  };
  double lt = golden_argmin(f, center - 2.0, center + 2.0, 48);
  *tau0_out = std::exp(lt);
  return f(lt);
}

template <class F>
std::array<double, 3> nelder_mead(F&& f, std::array<double, 3> x0, double scale, int iters) {
  struct Pt {
    std::array<double, 3> x;
    double f;
  };
  std::array<Pt, 4> s;
  s[0] = {x0, f(x0)};
  for (int i = 1; i < 4; ++i) {
    auto x = x0;
    x[i - 1] += scale;
    s[i] = {x, f(x)};
  }
  auto by_value = [](const Pt& a, const Pt& b) { return a.f < b.f; };
  for (int it = 0; it < iters; ++it) {
    std::stable_sort(s.begin(), s.end(), by_value);
    std::array<double, 3> cen{};
    for (int i = 0; i < 3; ++i)
      for (int d = 0; d < 3; ++d) cen[d] += s[i].x[d] / 3.0;
    auto blend = [&](double k) {
      std::array<double, 3> x;
      for (int d = 0; d < 3; ++d) x[d] = cen[d] + k * (cen[d] - s[3].x[d]);
      return x;
    };
    auto xr = blend(1.0);
    double fr = f(xr);
    if (fr < s[0].f) {
      auto xe = blend(2.0);
      double fe = f(xe);
      s[3] = fe < fr ? Pt{xe, fe} : Pt{xr, fr};
    } else if (fr < s[2].f) {
      s[3] = {xr, fr};
    } else {
      auto xc = blend(-0.5);
      double fc = f(xc);
      if (fc < s[3].f) {
        s[3] = {xc, fc};
      } else {
        for (int i = 1; i < 4; ++i) {
          for (int d = 0; d < 3; ++d) s[i].x[d] = s[0].x[d] + 0.5 * (s[i].x[d] - s[0].x[d]);
          s[i].f = f(s[i].x);
        }
      }
    }
  }
  std::stable_sort(s.begin(), s.end(), by_value);
  return s[0].x;
}

// Largest theta whose rho stays on the feasible side of `limit`. For service
// envelopes rho is non-increasing and must stay above the limit; for arrival
// envelopes it is non-decreasing and must stay below.
double theta_boundary(const MgfEnvelope& env, double limit, bool service_side) {
  double cap = std::isfinite(env.theta_max) ? env.theta_max : 1e15;
  auto ok = [&](double th) {
    double rho = env.rho(th);
    if (!std::isfinite(rho)) return false;
    return service_side ? rho > limit : rho < limit;
  };
  double lo = 1e-9;
  if (!ok(lo)) return 0.0;
  double hi = lo;
  while (hi < cap && ok(std::min(2.0 * hi, cap))) hi = std::min(2.0 * hi, cap);
  if (hi >= cap) return cap;
  double bad = std::min(2.0 * hi, cap);
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (hi + bad);
    if (ok(mid)) hi = mid;
    else bad = mid;
  }
  return hi;
}

std::vector<ThetaPoint> theta_grid(const MgfEnvelope& env, double theta_hi) {
  std::vector<ThetaPoint> grid;
  double lo = theta_hi * 1e-8, hi = theta_hi * (1.0 - 1e-9);
  for (int i = 0; i < 64; ++i) {
    double theta = lo * std::pow(hi / lo, i / 63.0);
    double rho = env.rho(theta), sigma = env.sigma(theta);
    if (std::isfinite(rho) && std::isfinite(sigma)) grid.push_back({theta, rho, sigma});
  }
  return grid;
}

BoundResult infeasible_result() { return BoundResult{}; }

}  // namespace

RiskBudget::RiskBudget(double eps) : epsilon(eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("risk budget: eps must lie in (0, 1)");
}

RiskBudget::RiskBudget(double over, double under)
    : epsilon(over + under), eps_over(over), eps_under(under) {
  if (!(over > 0.0) || !(under > 0.0) || !(epsilon < 1.0))
    throw std::invalid_argument("risk budget: split parts must be positive with sum < 1");
}

double b_underflow(double theta, double rho, double sigma, double r, double tau0, double eps) {
  if (!(theta > 0.0) || !(tau0 > 0.0) || !(eps > 0.0 && eps < 1.0) || !(sigma >= 0.0))
    throw std::invalid_argument("b_underflow: invalid parameters");
  if (!(r > 0.0 && r < rho))
    throw std::invalid_argument("b_underflow: requires 0 < r < rho(theta)");
  return profile_under(theta, rho, sigma, r, tau0, std::log(eps));
}

double b_overflow(double theta, double rho, double sigma, double r, double tau0,
                  double eps_over) {
  if (!(theta > 0.0) || !(tau0 > 0.0) || !(eps_over > 0.0 && eps_over < 1.0) || !(sigma >= 0.0))
    throw std::invalid_argument("b_overflow: invalid parameters");
  if (!(rho > 0.0 && r > rho))
    throw std::invalid_argument("b_overflow: requires r > rho(theta) > 0");
  return profile_over(theta, rho, sigma, r, tau0, std::log(eps_over));
}

BoundResult aoi_bound_periodic_service(const PeriodicSource& src, const MgfEnvelope& service,
                                       const BoundParams& params, double eps) {
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("aoi_bound_periodic_service: eps must lie in (0, 1)");
  double theta = params.theta, r = params.r, tau0 = params.tau0;
  if (!(theta > 0.0) || theta > service.theta_max || !(tau0 > 0.0)) return infeasible_result();
  double rho = service.rho(theta), sigma = service.sigma(theta);
  if (!std::isfinite(rho) || !std::isfinite(sigma)) return infeasible_result();
  if (!(r >= src.l / src.w) || !(r < rho)) return infeasible_result();
  double b = profile_under(theta, rho, sigma, r, tau0, std::log(eps));
  if (!std::isfinite(b)) return infeasible_result();

  BoundResult res;
  res.feasible = true;
  res.params = {theta, r, tau0, b};
  res.congestion_ms = b / r;
  res.idle_ms = src.w;
  res.latency_ms = src.l / r;
  res.delta_eps = res.idle_ms + res.congestion_ms + res.latency_ms;
  res.v_eps = (b + 2.0 * src.l) / r;
  return res;
}

BoundResult aoi_bound_random_arrivals(const PoissonSource& src, double c, double t0,
                                      const RiskBudget& budget, const BoundParams& params) {
  if (!(c > 0.0) || !(t0 >= 0.0))
    throw std::invalid_argument("aoi_bound_random_arrivals: invalid server parameters");
  if (!(budget.eps_over > 0.0) || !(budget.eps_under > 0.0))
    throw std::invalid_argument("aoi_bound_random_arrivals: budget must carry a positive split");
  double theta = params.theta, r = params.r, tau0 = params.tau0;
  MgfEnvelope env = poisson_envelope(src);
  if (!(theta > 0.0) || theta > env.theta_max || !(tau0 > 0.0)) return infeasible_result();
  double rho = env.rho(theta);
  if (!std::isfinite(rho) || !(r > rho) || !(r <= c)) return infeasible_result();
  double b = profile_over(theta, rho, 0.0, r, tau0, std::log(budget.eps_over));
  if (!std::isfinite(b)) return infeasible_result();
  double u = poisson_lower_u(src, budget.eps_under);

  BoundResult res;
  res.feasible = true;
  res.params = {theta, r, tau0, b};
  res.congestion_ms = b / c;
  res.idle_ms = u;
  res.latency_ms = t0;
  res.delta_eps = std::max(res.congestion_ms, res.idle_ms) + res.latency_ms;
  res.v_eps = res.congestion_ms + res.latency_ms;
  res.eps_over = budget.eps_over;
  res.eps_under = budget.eps_under;
  return res;
}

BoundResult optimize_periodic_bound(const PeriodicSource& src, const MgfEnvelope& service,
                                    double eps) {
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("optimize_periodic_bound: eps must lie in (0, 1)");
  double rate_min = src.l / src.w;
  double ln_eps = std::log(eps);
  double theta_hi = theta_boundary(service, rate_min, true);
  if (theta_hi <= 0.0) return infeasible_result();

  double best_obj = kInf;
  BoundParams best{};
  auto consider = [&](double theta, double r, double tau0, double b) {
    double obj = (b + src.l) / r;
    if (obj < best_obj) {
      best_obj = obj;
      best = {theta, r, tau0, b};
    }
  };

  for (const ThetaPoint& tp : theta_grid(service, theta_hi)) {
    double r_hi = tp.rho * (1.0 - 1e-12);
    if (!(r_hi > rate_min)) continue;
    auto obj_r = [&](double r) {
      double tau0;
      double b = best_b(true, tp.theta, tp.rho, tp.sigma, r, ln_eps, &tau0);
      return std::isfinite(b) ? (b + src.l) / r : kInf;
    };
    double r = golden_argmin(obj_r, rate_min, r_hi, 64);
    double tau0;
    double b = best_b(true, tp.theta, tp.rho, tp.sigma, r, ln_eps, &tau0);
    if (std::isfinite(b)) consider(tp.theta, r, tau0, b);
  }
  if (!(best_obj < kInf)) return infeasible_result();

  auto nm_obj = [&](const std::array<double, 3>& x) {
    double theta = std::exp(x[0]);
    if (!(theta > 0.0) || theta > service.theta_max) return kInf;
    double rho = service.rho(theta), sigma = service.sigma(theta);
    if (!std::isfinite(rho) || !std::isfinite(sigma)) return kInf;
    double r_hi = rho * (1.0 - 1e-12);
    if (!(r_hi > rate_min)) return kInf;
    double q = 1.0 / (1.0 + std::exp(-x[1]));
    double r = rate_min + q * (r_hi - rate_min);
    double tau0 = std::exp(x[2]);
    double b = profile_under(theta, rho, sigma, r, tau0, ln_eps);
    return std::isfinite(b) ? (b + src.l) / r : kInf;
  };
  {
    double rho0 = service.rho(best.theta);
    double q0 = (best.r - rate_min) / (rho0 * (1.0 - 1e-12) - rate_min);
    q0 = std::min(1.0 - 1e-9, std::max(1e-9, q0));
    std::array<double, 3> x0{std::log(best.theta), std::log(q0 / (1.0 - q0)),
                             std::log(best.tau0)};
    auto xr = nelder_mead(nm_obj, x0, 0.25, 300);
    double fr = nm_obj(xr);
    if (fr < best_obj) {
      double theta = std::exp(xr[0]);
      double rho = service.rho(theta);
      double r_hi = rho * (1.0 - 1e-12);
      double q = 1.0 / (1.0 + std::exp(-xr[1]));
      double r = rate_min + q * (r_hi - rate_min);
      double tau0 = std::exp(xr[2]);
      best_obj = fr;
      best = {theta, r, tau0, profile_under(theta, rho, service.sigma(theta), r, tau0, ln_eps)};
    }
  }
  return aoi_bound_periodic_service(src, service, best, eps);
}

namespace {

struct SplitEval {
  double b = kInf;
  BoundParams params{};
};

SplitEval min_b_over(const MgfEnvelope& env, const std::vector<ThetaPoint>& grid, double c,
                     double ln_eps_over) {
  SplitEval out;
  for (const ThetaPoint& tp : grid) {
    double r_lo = tp.rho + (c - tp.rho) * 1e-12;
    if (!(c > tp.rho)) continue;
    auto obj_r = [&](double r) {
      double tau0;
      return best_b(false, tp.theta, tp.rho, tp.sigma, r, ln_eps_over, &tau0);
    };
    double r = golden_argmin(obj_r, r_lo, c, 64);
    double tau0;
    double b = best_b(false, tp.theta, tp.rho, tp.sigma, r, ln_eps_over, &tau0);
    if (b < out.b) out = {b, {tp.theta, r, tau0, b}};
  }
  if (!(out.b < kInf)) return out;

  // polish off the grid so the risk split balances against the same-quality
  // objective that the final answer reports
  auto nm_obj = [&](const std::array<double, 3>& x) {
    double theta = std::exp(x[0]);
    if (!(theta > 0.0) || theta > env.theta_max) return kInf;
    double rho = env.rho(theta);
    if (!std::isfinite(rho) || !(rho < c)) return kInf;
    double r_lo = rho + (c - rho) * 1e-12;
    double q = 1.0 / (1.0 + std::exp(-x[1]));
    double r = r_lo + q * (c - r_lo);
    double tau0 = std::exp(x[2]);
    return profile_over(theta, rho, 0.0, r, tau0, ln_eps_over);
  };
  double rho0 = env.rho(out.params.theta);
  double r_lo = rho0 + (c - rho0) * 1e-12;
  double q0 = (out.params.r - r_lo) / (c - r_lo);
  q0 = std::min(1.0 - 1e-9, std::max(1e-9, q0));
  std::array<double, 3> x0{std::log(out.params.theta), std::log(q0 / (1.0 - q0)),
                           std::log(out.params.tau0)};
  auto xr = nelder_mead(nm_obj, x0, 0.25, 300);
  double fr = nm_obj(xr);
  if (fr < out.b) {
    double theta = std::exp(xr[0]);
    double rho = env.rho(theta);
    double lo = rho + (c - rho) * 1e-12;
    double q = 1.0 / (1.0 + std::exp(-xr[1]));
    double r = lo + q * (c - lo);
    out = {fr, {theta, r, std::exp(xr[2]), fr}};
  }
  return out;
}

}  // namespace

BoundResult optimize_random_arrivals_bound(const PoissonSource& src, double c, double t0,
                                           double eps) {
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("optimize_random_arrivals_bound: eps must lie in (0, 1)");
  if (!(c > 0.0) || !(t0 >= 0.0))
    throw std::invalid_argument("optimize_random_arrivals_bound: invalid server parameters");
  if (!(src.l / src.w < c)) return infeasible_result();

  MgfEnvelope env = poisson_envelope(src);
  double theta_hi = theta_boundary(env, c, false);
  if (theta_hi <= 0.0) return infeasible_result();
  std::vector<ThetaPoint> grid = theta_grid(env, theta_hi);

  auto idle_u = [&](double ln_eps_over) {
    double eps_under = eps - std::exp(ln_eps_over);
    if (!(eps_under > 0.0)) return -kInf;  // degenerate; forces the split down
    return -src.w * std::log(eps_under);
  };
  // balance b/c = u: the congestion side falls and the idle side grows with
  // eps_over, so the crossing of g minimizes max(b/c, u)
  auto g = [&](double ln_eps_over) {
    return min_b_over(env, grid, c, ln_eps_over).b / c - idle_u(ln_eps_over);
  };
  double ln_hi = std::log(eps) + std::log1p(-1e-9);
  double ln_lo = std::log(eps) - 1500.0;
  double ln_split;
  if (g(ln_hi) >= 0.0) {
    ln_split = ln_hi;
  } else if (g(ln_lo) <= 0.0) {
    ln_split = ln_lo;
  } else {
    double lo = ln_lo, hi = ln_hi;
    for (int i = 0; i < 80; ++i) {
      double mid = 0.5 * (lo + hi);
      if (g(mid) > 0.0) lo = mid;
      else hi = mid;
    }
    ln_split = 0.5 * (lo + hi);
  }

  double best_delta = kInf, best_split = ln_split;
  SplitEval best_eval;
  for (double d : {-2.0, -1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 2.0}) {
    double ls = std::min(ln_hi, std::max(ln_lo, ln_split + d));
    SplitEval ev = min_b_over(env, grid, c, ls);
    if (!(ev.b < kInf)) continue;
    double delta = std::max(ev.b / c, idle_u(ls)) + t0;
    if (delta < best_delta) {
      best_delta = delta;
      best_split = ls;
      best_eval = ev;
    }
  }
  if (!(best_delta < kInf)) return infeasible_result();

  double eps_over = std::exp(best_split);
  double eps_under = eps - eps_over;
  if (!(eps_under > 0.0)) eps_under = eps * 1e-12;
  double u = -src.w * std::log(eps_under);

  BoundResult res;
  res.feasible = true;
  res.params = best_eval.params;
  res.congestion_ms = best_eval.b / c;
  res.idle_ms = u;
  res.latency_ms = t0;
  res.delta_eps = std::max(res.congestion_ms, res.idle_ms) + res.latency_ms;
  res.v_eps = res.congestion_ms + res.latency_ms;
  res.eps_over = eps_over;
  res.eps_under = eps_under;
  return res;
}

BoundResult priority_aoi_bound(const PeriodicSource& src, const MgfEnvelope& service, int m,
                               double eps) {
  MgfEnvelope left = leftover_service(service, periodic_mgf_envelope(src), m);
  return optimize_periodic_bound(src, left, eps);
}

BoundResult deterministic_periodic_bound(const PeriodicSource& src, double rate, double latency,
                                         double eta) {
  if (!(rate > 0.0) || !(latency >= 0.0) || eta < 0.0)
    throw std::invalid_argument("deterministic_periodic_bound: invalid parameters");
  if (rate < src.l / src.w) return infeasible_result();
  BoundResult res;
  res.feasible = true;
  res.params = {0.0, rate, 0.0, 0.0};
  res.congestion_ms = 0.0;
  res.idle_ms = (eta + 1.0) * src.w;
  res.latency_ms = latency + src.l / rate;
  res.delta_eps = res.idle_ms + res.congestion_ms + res.latency_ms;
  res.v_eps = latency + src.l / rate;
  return res;
}

}  // namespace aoc
