#pragma once

#include <functional>
#include <utility>

#include "aoc/curves.hpp"

namespace aoc {

// Units: data in kb, time in ms (1 Mb/s = 1 kb/ms).

struct PeriodicSource {
  double l = 1.0;      // packet length, kb
  double w = 1.0;      // update interval, ms
  double phase = 0.0;  // first-arrival offset for simulation, in [0, w)

  PeriodicSource(double l_kb, double w_ms, double phase_ms = 0.0);
};

struct PoissonSource {
  double l = 1.0;  // packet length, kb
  double w = 1.0;  // mean inter-arrival time, ms (rate 1/w)

  PoissonSource(double l_kb, double w_ms);
};

// MGF envelope (sigma(theta), rho(theta)). For arrivals:
//   E[e^{theta A(tau,t)}] <= e^{theta (rho(theta) (t-tau) + sigma(theta))},
// for service the dual bound with e^{-theta S} holds. theta_max marks where
// the parameters stop being representable in double precision.
struct MgfEnvelope {
  std::function<double(double)> sigma;
  std::function<double(double)> rho;
  double theta_max = kInf;
};

// Statistical lower arrival envelope 1_{t>u} l_min, shifted by eta*l_max when
// losses are modeled.
struct LowerEnvelopeStep {
  double u = 0.0;          // ms
  double l_min = 0.0;      // kb
  double loss_shift = 0.0;  // kb

  Curve curve() const;
};

// Deterministic envelopes l*ceil(t/w) >= A(tau,tau+t) >= l*floor(t/w).
std::pair<Staircase, Staircase> periodic_envelopes(const PeriodicSource& src);

// rho(theta) = (e^{theta l} - 1) / (theta w), sigma = 0.
double poisson_rho(const PoissonSource& src, double theta);

// ln E[e^{theta A(tau,tau+t)}] for a uniformly phased periodic source:
// theta*l*floor(t/w) + ln(1 + (t/w - floor(t/w)) (e^{theta l} - 1)).
double periodic_mgf_log(const PeriodicSource& src, double theta, double t);

// sigma_A(theta) = sup_{t in [0,w]} { periodic_mgf_log(theta,t)/theta - (l/w) t },
// computed by golden-section search seeded with a 128-point scan.
double periodic_sigma(const PeriodicSource& src, double theta);

// u with P[no arrival within u] = eps_lower, i.e. u = -w ln(eps_lower).
double poisson_lower_u(const PoissonSource& src, double eps_lower);

MgfEnvelope poisson_envelope(const PoissonSource& src);
MgfEnvelope periodic_mgf_envelope(const PeriodicSource& src);

// Aggregate of m iid flows: (m sigma(theta), m rho(theta)).
MgfEnvelope aggregate_iid(const MgfEnvelope& env, int m);

}  // namespace aoc
