#include <cmath>
#include <random>
#include <vector>

#include "aoc/traffic.hpp"
#include "doctest.h"

using namespace aoc;

TEST_CASE("periodic envelopes are the ceil/floor staircases") {
  PeriodicSource src(1.0, 2.0);
  auto [upper, lower] = periodic_envelopes(src);
  CHECK(upper.eval(3.0) == 2.0);
  CHECK(lower.eval(3.0) == 1.0);
  CHECK(upper.eval(0.0) == 0.0);

  for (int i = 0; i <= 1000; ++i) {
    double t = 200.0 * i / 1000;
    double gap = upper.eval(t) - lower.eval(t);
    CHECK(gap >= -1e-12);
    CHECK(gap <= src.l + 1e-12);
  }
}

TEST_CASE("poisson_rho formula and limits") {
  PoissonSource src(1.0, 1.0);
  CHECK(poisson_rho(src, std::log(2.0)) == doctest::Approx(1.0 / std::log(2.0)));
  CHECK(poisson_rho(src, 1e-9) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(poisson_rho(src, 0.0), std::invalid_argument);

  PoissonSource src2(2.0, 5.0);
  double prev = 0.0;
  for (int i = 1; i <= 50; ++i) {
    double theta = 0.05 * i;
    double rho = poisson_rho(src2, theta);
    CHECK(rho > prev);
    prev = rho;
  }
}

TEST_CASE("periodic_mgf_log values and shape") {
  PeriodicSource src(1.0, 1.0);
  CHECK(periodic_mgf_log(src, 0.7, 3.0) == doctest::Approx(0.7 * 3.0));
  CHECK(periodic_mgf_log(src, 1.0, 0.5) ==
        doctest::Approx(std::log(1.0 + 0.5 * (std::exp(1.0) - 1.0))));

  PeriodicSource src2(0.5, 2.0);
  for (int j = 0; j <= 20; ++j) {
    double t = 0.25 * j;
    // second finite difference in theta (convexity of the log-MGF)
    for (double theta = 0.2; theta <= 2.0; theta += 0.2) {
      double h = 1e-3;
      double d2 = periodic_mgf_log(src2, theta + h, t) - 2.0 * periodic_mgf_log(src2, theta, t) +
                  periodic_mgf_log(src2, theta - h, t);
      CHECK(d2 >= -1e-9);
    }
    // log-MGF / theta lies between the deterministic envelopes
    for (double theta : {0.3, 1.0, 4.0}) {
      double v = periodic_mgf_log(src2, theta, t) / theta;
      CHECK(v >= src2.l * std::floor(t / src2.w) - 1e-9);
      CHECK(v <= src2.l * std::ceil(t / src2.w) + 1e-9);
    }
  }
}

TEST_CASE("periodic_sigma limits and grid oracle") {
  PeriodicSource src(1.0, 2.0);
  CHECK(periodic_sigma(src, 1e-6) == doctest::Approx(0.0).epsilon(1e-3));
  CHECK(periodic_sigma(src, 1e-6) < 1e-3);
  CHECK(periodic_sigma(src, 400.0) == doctest::Approx(src.l).epsilon(1e-2));

  double theta = 1.0;
  double rho = src.l / src.w;
  double grid_best = 0.0;
  for (int i = 0; i <= 10000; ++i) {
    double t = src.w * i / 10000;
    grid_best = std::max(grid_best, periodic_mgf_log(src, theta, t) / theta - rho * t);
  }
  CHECK(periodic_sigma(src, theta) == doctest::Approx(grid_best).epsilon(1e-6));

  double prev = -1.0;
  for (double th : {0.1, 0.3, 1.0, 3.0, 10.0, 30.0}) {
    double s = periodic_sigma(src, th);
    CHECK(s >= 0.0);
    CHECK(s <= src.l + 1e-12);
    CHECK(s >= prev - 1e-12);
    prev = s;
  }
}

TEST_CASE("poisson_lower_u closed form and Monte Carlo") {
  PoissonSource src(1.0, 1.0);
  CHECK(poisson_lower_u(src, std::exp(-10.0)) == doctest::Approx(10.0));
  CHECK(poisson_lower_u(src, 1.0 - 1e-12) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK_THROWS_AS(poisson_lower_u(src, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(poisson_lower_u(src, 1.0), std::invalid_argument);

  PoissonSource src2(1.0, 3.0);
  double eps = 1e-2;
  double u = poisson_lower_u(src2, eps);
  std::mt19937_64 rng(7);
  std::exponential_distribution<double> gap(1.0 / src2.w);
  const int n = 1000000;
  int exceed = 0;
  for (int i = 0; i < n; ++i)
    if (gap(rng) > u) ++exceed;
  double frac = static_cast<double>(exceed) / n;
  double se = std::sqrt(eps * (1.0 - eps) / n);
  CHECK(std::abs(frac - eps) <= 3.0 * se);
}

TEST_CASE("aggregate_iid scales the envelope") {
  PoissonSource src(1.0, 2.0);
  MgfEnvelope env = poisson_envelope(src);
  MgfEnvelope zero = aggregate_iid(env, 0);
  CHECK(zero.rho(0.5) == 0.0);
  CHECK(zero.sigma(0.5) == 0.0);
  MgfEnvelope one = aggregate_iid(env, 1);
  CHECK(one.rho(0.5) == env.rho(0.5));
  MgfEnvelope ten = aggregate_iid(env, 10);
  CHECK(ten.rho(0.5) == doctest::Approx(10.0 * poisson_rho(src, 0.5)));
  CHECK_THROWS_AS(aggregate_iid(env, -1), std::invalid_argument);
}

TEST_CASE("empirical MGF of uniformly phased periodic arrivals") {
  PeriodicSource src(1.0, 2.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> phase(0.0, src.w);
  const int n = 100000;
  for (double theta : {0.25, 1.0}) {
    for (double t : {0.6, 2.0, 5.0}) {
      double acc = 0.0;
      std::mt19937_64 r2(rng());
      for (int i = 0; i < n; ++i) {
        double u = phase(r2);
        double count = u <= t ? std::floor((t - u) / src.w) + 1.0 : 0.0;
        acc += std::exp(theta * src.l * count);
      }
      double empirical = std::log(acc / n);
      double analytic = periodic_mgf_log(src, theta, t);
      CHECK(std::exp(empirical - analytic) == doctest::Approx(1.0).epsilon(0.01));
    }
  }
}

TEST_CASE("poisson paths respect the statistical upper envelope") {
  PoissonSource src(1.0, 2.0);
  double theta = 0.5, r = 0.9, tau0 = 1.0, eps_over = 1e-2;
  double rho = poisson_rho(src, theta);
  REQUIRE(r > rho);
  double b = -std::log(theta * (r - rho) * tau0 * eps_over) / theta + r * tau0;

  std::mt19937_64 rng(23);
  std::exponential_distribution<double> gap(1.0 / src.w);
  const int paths = 10000;
  const double horizon = 100.0 * src.w;
  int violations = 0;
  for (int p = 0; p < paths; ++p) {
    std::vector<double> arrivals;
    double t = gap(rng);
    while (t <= horizon) {
      arrivals.push_back(t);
      t += gap(rng);
    }
    // sup_tau {A(tau, horizon) - r (horizon - tau)}: A is left-continuous, so
    // the sup over tau is attained at arrival instants (pre-jump) or tau = 0.
    double a_end = src.l * arrivals.size();
    double best = 0.0;  // tau = 0: r*0 - A(0) = 0
    for (std::size_t i = 0; i < arrivals.size(); ++i)
      best = std::max(best, r * arrivals[i] - src.l * static_cast<double>(i));
    best = std::max(best, r * horizon - a_end);
    if (a_end - r * horizon + best > b) ++violations;
  }
  double frac = static_cast<double>(violations) / paths;
  CHECK(frac <= eps_over + 3.0 * std::sqrt(eps_over * (1.0 - eps_over) / paths));
}
