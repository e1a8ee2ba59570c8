#include "aoc/traffic.hpp"

#include <cmath>
#include <stdexcept>

namespace aoc {

namespace {

// Largest theta for which e^{theta l} stays finite in double precision.
double overflow_theta(double l) { return 700.0 / l; }

}  // namespace

PeriodicSource::PeriodicSource(double l_kb, double w_ms, double phase_ms)
    : l(l_kb), w(w_ms), phase(phase_ms) {
  if (!(l > 0.0)) throw std::invalid_argument("periodic source: l must be > 0");
  if (!(w > 0.0)) throw std::invalid_argument("periodic source: w must be > 0");
  if (!(phase >= 0.0 && phase < w))
    throw std::invalid_argument("periodic source: phase must lie in [0, w)");
}

PoissonSource::PoissonSource(double l_kb, double w_ms) : l(l_kb), w(w_ms) {
  if (!(l > 0.0)) throw std::invalid_argument("poisson source: l must be > 0");
  if (!(w > 0.0)) throw std::invalid_argument("poisson source: w must be > 0");
}

Curve LowerEnvelopeStep::curve() const {
  return Curve(PwlCurve::step(u, l_min + loss_shift));
}

std::pair<Staircase, Staircase> periodic_envelopes(const PeriodicSource& src) {
  return {Staircase(src.l, src.w, Staircase::Rounding::Ceil),
          Staircase(src.l, src.w, Staircase::Rounding::Floor)};
}

double poisson_rho(const PoissonSource& src, double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("poisson_rho: theta must be > 0");
  return std::expm1(theta * src.l) / (theta * src.w);
}

double periodic_mgf_log(const PeriodicSource& src, double theta, double t) {
  if (!(theta > 0.0)) throw std::invalid_argument("periodic_mgf_log: theta must be > 0");
  if (t <= 0.0) return 0.0;
  double q = t / src.w;
  double k = std::floor(q);
  double frac = q - k;
  double x = theta * src.l;
  double base = x * k;
  if (frac <= 0.0) return base;
  double em1 = std::expm1(x);
  if (std::isinf(em1)) return base + x + std::log(frac);
  return base + std::log1p(frac * em1);
}

double periodic_sigma(const PeriodicSource& src, double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("periodic_sigma: theta must be > 0");
  double rho = src.l / src.w;
  auto objective = [&](double t) { return periodic_mgf_log(src, theta, t) / theta - rho * t; };

  const int n = 128;
  double best_t = 0.0, best = 0.0;
  for (int i = 0; i <= n; ++i) {
    double t = src.w * i / n;
    double v = objective(t);
    if (v > best) { best = v; best_t = t; }
  }
  double lo = std::max(0.0, best_t - src.w / n);
  double hi = std::min(src.w, best_t + src.w / n);

  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = objective(x1), f2 = objective(x2);
  for (int it = 0; it < 200 && b - a > 1e-14 * src.w; ++it) {
    if (f1 < f2) {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + gr * (b - a); f2 = objective(x2);
    } else {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - gr * (b - a); f1 = objective(x1);
    }
  }
  best = std::max({best, f1, f2});
  return std::max(0.0, best);
}

double poisson_lower_u(const PoissonSource& src, double eps_lower) {
  if (!(eps_lower > 0.0 && eps_lower < 1.0))
    throw std::invalid_argument("poisson_lower_u: eps_lower must lie in (0, 1)");
  return -src.w * std::log(eps_lower);
}

MgfEnvelope poisson_envelope(const PoissonSource& src) {
  MgfEnvelope env;
  env.sigma = [](double) { return 0.0; };
  env.rho = [src](double theta) { return poisson_rho(src, theta); };
  env.theta_max = overflow_theta(src.l);
  return env;
}

MgfEnvelope periodic_mgf_envelope(const PeriodicSource& src) {
  MgfEnvelope env;
  env.sigma = [src](double theta) { return periodic_sigma(src, theta); };
  env.rho = [src](double) { return src.l / src.w; };
  env.theta_max = overflow_theta(src.l);
  return env;
}

MgfEnvelope aggregate_iid(const MgfEnvelope& env, int m) {
  if (m < 0) throw std::invalid_argument("aggregate_iid: m must be >= 0");
  MgfEnvelope out;
  out.sigma = [sigma = env.sigma, m](double theta) { return m * sigma(theta); };
  out.rho = [rho = env.rho, m](double theta) { return m * rho(theta); };
  out.theta_max = env.theta_max;
  return out;
}

}  // namespace aoc
