#pragma once

#include "aoc/traffic.hpp"

namespace aoc {

// Two-state Markov on-off channel: rate c in on state, 0 in off state.
// lambda is the off->on rate, mu the on->off rate.
struct MarkovOnOff {
  double lambda = 1.0;  // 1/ms
  double mu = 1.0;      // 1/ms
  double c = 1.0;       // kb/ms

  MarkovOnOff(double lambda_per_ms, double mu_per_ms, double c_kb_ms);

  double p_on() const { return lambda / (lambda + mu); }
  double gamma() const { return c * p_on(); }            // mean rate
  double beta() const { return 1.0 / lambda + 1.0 / mu; }  // mean cycle length
};

// Message-loss model: at most eta consecutive erroneous messages (worst case),
// or eta_eps with exceedance probability eps.
struct LossModel {
  double eta = 0.0;
  double l_max = 0.0;
};

// Invert (p_on, gamma, beta) into transition rates and on-rate.
MarkovOnOff markov_from_stats(double p_on, double gamma, double beta);

// Effective capacity rho(theta) =
//   -(1/2 theta) (sqrt((lambda-mu-theta c)^2 + 4 lambda mu) - lambda - mu - theta c),
// evaluated in the cancellation-free conjugate form; sigma(theta) = 0.
double markov_rho(const MarkovOnOff& ch, double theta);

MgfEnvelope markov_mgf_envelope(const MarkovOnOff& ch);

// Service left over for flow m+1 under static priority with m iid
// higher-priority flows: (sigma_S + m sigma_A, rho_S - m rho_A). rho may
// become <= 0 for some theta; feasibility is per theta.
MgfEnvelope leftover_service(const MgfEnvelope& sv, const MgfEnvelope& cross, int m);

// Worst-case AoI with at most eta consecutive losses over a rate-c server:
// (eta + 1) w + l/c. Also the statistical variant with eta = eta_eps.
double loss_worstcase_aoi(double w, double l, double c, double eta);

}  // namespace aoc
