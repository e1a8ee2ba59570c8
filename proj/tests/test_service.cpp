#include <cmath>
#include <random>

#include "aoc/service.hpp"
#include "doctest.h"

using namespace aoc;

TEST_CASE("markov_from_stats inversion") {
  MarkovOnOff ch = markov_from_stats(0.9, 1.0, 8.0);
  CHECK(ch.lambda == doctest::Approx(1.25));
  CHECK(ch.mu == doctest::Approx(0.138889).epsilon(1e-5));
  CHECK(ch.c == doctest::Approx(1.11111).epsilon(1e-5));

  MarkovOnOff sym = markov_from_stats(0.5, 1.0, 2.0);
  CHECK(sym.lambda == doctest::Approx(1.0));
  CHECK(sym.mu == doctest::Approx(1.0));

  for (double p : {0.1, 0.5, 0.9}) {
    for (double g : {0.5, 2.0}) {
      for (double beta : {1.0, 8.0}) {
        MarkovOnOff m = markov_from_stats(p, g, beta);
        CHECK(m.p_on() == doctest::Approx(p).epsilon(1e-12));
        CHECK(m.gamma() == doctest::Approx(g).epsilon(1e-12));
        CHECK(m.beta() == doctest::Approx(beta).epsilon(1e-12));
      }
    }
  }
  CHECK_THROWS_AS(markov_from_stats(1.0, 1.0, 8.0), std::invalid_argument);
  CHECK_THROWS_AS(markov_from_stats(0.9, -1.0, 8.0), std::invalid_argument);
}

TEST_CASE("markov_rho values and monotonicity") {
  MarkovOnOff sym(1.0, 1.0, 2.0);
  CHECK(markov_rho(sym, 1.0) == doctest::Approx(2.0 - std::sqrt(2.0)));

  MarkovOnOff ch = markov_from_stats(0.9, 1.0, 8.0);
  CHECK(markov_rho(ch, 1e-9) == doctest::Approx(ch.gamma()).epsilon(1e-4));
  CHECK_THROWS_AS(markov_rho(ch, 0.0), std::invalid_argument);

  double prev = ch.gamma();
  for (int i = 1; i <= 60; ++i) {
    double theta = std::pow(10.0, -3.0 + 6.0 * i / 60.0);
    double rho = markov_rho(ch, theta);
    CHECK(rho > 0.0);
    CHECK(rho <= ch.gamma() * (1.0 + 1e-12));
    CHECK(rho < prev);
    prev = rho;
  }
  CHECK(markov_rho(ch, 1e6) < 1e-3);
}

TEST_CASE("empirical MGF of channel service respects the envelope") {
  MarkovOnOff ch = markov_from_stats(0.9, 1.0, 8.0);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> on_hold(ch.mu);
  std::exponential_distribution<double> off_hold(ch.lambda);

  for (double t : {4.0 * ch.beta(), 8.0 * ch.beta()}) {
    const int paths = 100000;
    std::vector<double> served(paths);
    for (int p = 0; p < paths; ++p) {
      bool on = unif(rng) < ch.p_on();
      double now = 0.0, on_time = 0.0;
      while (now < t) {
        double hold = on ? on_hold(rng) : off_hold(rng);
        double seg = std::min(hold, t - now);
        if (on) on_time += seg;
        now += seg;
        on = !on;
      }
      served[p] = ch.c * on_time;
    }
    for (double theta : {0.5, 1.0}) {
      double acc = 0.0, acc2 = 0.0;
      for (double s : served) {
        double v = std::exp(-theta * s);
        acc += v;
        acc2 += v * v;
      }
      double mean = acc / paths;
      double se = std::sqrt((acc2 / paths - mean * mean) / paths);
      double bound = std::exp(-theta * markov_rho(ch, theta) * t);
      CHECK(mean <= bound + 3.0 * se);
    }
  }
}

TEST_CASE("leftover_service composition") {
  MarkovOnOff ch = markov_from_stats(0.9, 1.0, 8.0);
  MgfEnvelope sv = markov_mgf_envelope(ch);
  PeriodicSource src(1.0, 16.0);
  MgfEnvelope cross = periodic_mgf_envelope(src);

  MgfEnvelope same = leftover_service(sv, cross, 0);
  CHECK(same.rho(0.5) == sv.rho(0.5));
  CHECK(same.sigma(0.5) == sv.sigma(0.5));

  MgfEnvelope left = leftover_service(sv, cross, 10);
  double theta = 0.5;
  CHECK(left.sigma(theta) == doctest::Approx(10.0 * periodic_sigma(src, theta)));
  CHECK(left.rho(theta) == doctest::Approx(markov_rho(ch, theta) - 10.0 * src.l / src.w));

  // linear in m
  MgfEnvelope twice = leftover_service(leftover_service(sv, cross, 4), cross, 6);
  for (double th : {0.1, 0.5, 2.0}) {
    CHECK(twice.rho(th) == doctest::Approx(left.rho(th)).epsilon(1e-12));
    CHECK(twice.sigma(th) == doctest::Approx(left.sigma(th)).epsilon(1e-12));
  }

  // heavy cross traffic starves every theta
  PeriodicSource heavy(1.0, 2.0);
  MgfEnvelope starved = leftover_service(sv, periodic_mgf_envelope(heavy), 10);
  for (int i = 0; i <= 40; ++i) {
    double th = std::pow(10.0, -3.0 + 6.0 * i / 40.0);
    CHECK(starved.rho(th) <= 0.0);
  }
}

TEST_CASE("loss_worstcase_aoi") {
  CHECK(loss_worstcase_aoi(2.0, 1.0, 1.0, 0.0) == doctest::Approx(3.0));
  CHECK(loss_worstcase_aoi(2.0, 1.0, 1.0, 2.0) == doctest::Approx(7.0));
  // statistical variant: same assembly with eta_eps
  CHECK(loss_worstcase_aoi(4.0, 1.0, 2.0, 3.0) == doctest::Approx(16.5));
  CHECK_THROWS_AS(loss_worstcase_aoi(1.0, 2.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(loss_worstcase_aoi(2.0, 1.0, 1.0, -1.0), std::invalid_argument);
}
