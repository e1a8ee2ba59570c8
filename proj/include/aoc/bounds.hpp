#pragma once

#include "aoc/service.hpp"
#include "aoc/traffic.hpp"

namespace aoc {

struct RiskBudget {
  double epsilon = 0.0;    // total violation probability
  double eps_over = 0.0;   // overflow share (random arrivals)
  double eps_under = 0.0;  // idle-waiting share

  explicit RiskBudget(double eps);
  RiskBudget(double over, double under);
};

struct BoundParams {
  double theta = 0.0;  // 1/kb
  double r = 0.0;      // kb/ms
  double tau0 = 0.0;   // ms
  double b = 0.0;      // kb
};

struct BoundResult {
  bool feasible = false;
  double delta_eps = kInf;  // ms
  double v_eps = kInf;      // ms
  BoundParams params;
  // breakdown: delta is idle + congestion + latency for service-limited bounds
  // and max(congestion, idle) + latency for random arrivals
  double congestion_ms = kInf;
  double idle_ms = kInf;
  double latency_ms = kInf;
  double eps_over = 0.0;   // split in effect (random arrivals only)
  double eps_under = 0.0;
};

// b = -(1/theta) ln(theta (rho - r) tau0 eps) + r tau0 + sigma, clamped from
// below to r tau0 + sigma so the discretized union-bound chain stays valid.
double b_underflow(double theta, double rho, double sigma, double r, double tau0, double eps);

// Dual profile for the statistical upper arrival envelope, requires r > rho.
double b_overflow(double theta, double rho, double sigma, double r, double tau0, double eps_over);

// Delta_eps = w + (b+l)/r with b from b_underflow, V_eps = (b+2l)/r (the
// horizontal deviation of l*ceil(t/w) against r[t-(b+l)/r]_+). Stability
// l/w <= r < rho(theta); violations yield an infeasible result.
BoundResult aoi_bound_periodic_service(const PeriodicSource& src, const MgfEnvelope& service,
                                       const BoundParams& params, double eps);

// Delta_eps = max(b/c, u) + t0 with b from b_overflow and u = -w ln(eps_under).
// Requires rho(theta) < r <= c.
BoundResult aoi_bound_random_arrivals(const PoissonSource& src, double c, double t0,
                                      const RiskBudget& budget, const BoundParams& params);

// Numerical minimization over (theta, r, tau0): 64-point log theta grid,
// nested golden-section searches for r and tau0, Nelder-Mead refinement.
BoundResult optimize_periodic_bound(const PeriodicSource& src, const MgfEnvelope& service,
                                    double eps);

// As above plus the risk split: binary search on ln(eps_over) targeting
// b/c = u, then a neighbor sweep.
BoundResult optimize_random_arrivals_bound(const PoissonSource& src, double c, double t0,
                                           double eps);

// Static priority with m iid higher-priority copies of src sharing the
// channel: optimize over the leftover service envelope.
BoundResult priority_aoi_bound(const PeriodicSource& src, const MgfEnvelope& service, int m,
                               double eps);

// Closed form for a deterministic latency-rate server (optionally with at
// most eta consecutive message losses): Delta = (eta+1) w + latency + l/rate.
BoundResult deterministic_periodic_bound(const PeriodicSource& src, double rate, double latency,
                                         double eta = 0.0);

}  // namespace aoc
