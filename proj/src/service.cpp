#include "aoc/service.hpp"

#include <cmath>
#include <stdexcept>

namespace aoc {

MarkovOnOff::MarkovOnOff(double lambda_per_ms, double mu_per_ms, double c_kb_ms)
    : lambda(lambda_per_ms), mu(mu_per_ms), c(c_kb_ms) {
  if (!(lambda > 0.0)) throw std::invalid_argument("markov: lambda must be > 0");
  if (!(mu > 0.0)) throw std::invalid_argument("markov: mu must be > 0");
  if (!(c > 0.0)) throw std::invalid_argument("markov: c must be > 0");
}

MarkovOnOff markov_from_stats(double p_on, double gamma, double beta) {
  if (!(p_on > 0.0 && p_on < 1.0))
    throw std::invalid_argument("markov_from_stats: p_on must lie in (0, 1)");
  if (!(gamma > 0.0)) throw std::invalid_argument("markov_from_stats: gamma must be > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("markov_from_stats: beta must be > 0");
  // beta = (lambda + mu) / (lambda mu) and lambda mu = p_on (1-p_on) (lambda+mu)^2
  double rate_sum = 1.0 / (beta * p_on * (1.0 - p_on));
  return MarkovOnOff(p_on * rate_sum, (1.0 - p_on) * rate_sum, gamma / p_on);
}

double markov_rho(const MarkovOnOff& ch, double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("markov_rho: theta must be > 0");
  // Conjugate form 2 lambda c / (lambda + mu + theta c + sqrt((lambda-mu-theta c)^2 + 4 lambda mu)),
  // which avoids the subtractive cancellation of the textbook expression.
  double d = ch.lambda - ch.mu - theta * ch.c;
  double root = std::hypot(d, 2.0 * std::sqrt(ch.lambda * ch.mu));
  return 2.0 * ch.lambda * ch.c / (ch.lambda + ch.mu + theta * ch.c + root);
}

MgfEnvelope markov_mgf_envelope(const MarkovOnOff& ch) {
  MgfEnvelope env;
  env.sigma = [](double) { return 0.0; };
  env.rho = [ch](double theta) { return markov_rho(ch, theta); };
  env.theta_max = kInf;
  return env;
}

MgfEnvelope leftover_service(const MgfEnvelope& sv, const MgfEnvelope& cross, int m) {
  if (m < 0) throw std::invalid_argument("leftover_service: m must be >= 0");
  if (m == 0) return sv;
  MgfEnvelope out;
  out.sigma = [s = sv.sigma, a = cross.sigma, m](double theta) {
    return s(theta) + m * a(theta);
  };
  out.rho = [s = sv.rho, a = cross.rho, m](double theta) { return s(theta) - m * a(theta); };
  out.theta_max = std::min(sv.theta_max, cross.theta_max);
  return out;
}

double loss_worstcase_aoi(double w, double l, double c, double eta) {
  if (!(w > 0.0) || !(l > 0.0) || !(c > 0.0) || eta < 0.0)
    throw std::invalid_argument("loss_worstcase_aoi: parameters must be positive, eta >= 0");
  if (c < l / w) throw std::invalid_argument("loss_worstcase_aoi: unstable, needs c >= l/w");
  return (eta + 1.0) * w + l / c;
}

}  // namespace aoc
