#include "arw/harness.hpp"

#include <cmath>
#include <stdexcept>

#include "arw/lattice.hpp"
#include "arw/potential.hpp"
#include "arw/rng.hpp"
#include "doctest.h"

using namespace arw;
using harness::ExperimentSpec;
using harness::TailSide;
using lattice::Ball;
using lattice::Norm;

TEST_SUITE("harness") {

TEST_CASE("poisson initialization has the right moments") {
  const Ball ball(1, 100, Norm::sup);
  const int64_t trials = 1'000;
  double sum = 0.0, sq = 0.0;
  const int64_t n = static_cast<int64_t>(ball.size()) * trials;
  for (int64_t t = 0; t < trials; ++t) {
    const auto config =
        harness::init_poisson(ball, 1.5, 900 + static_cast<uint64_t>(t));
    for (int32_t s = 0; s < ball.size(); ++s) {
      sum += config.active[s];
      sq += static_cast<double>(config.active[s]) * config.active[s];
      CHECK(config.sleeping[s] == 0);
    }
  }
  const double mean = sum / static_cast<double>(n);
  const double var = sq / static_cast<double>(n) - mean * mean;
  CHECK(std::abs(mean - 1.5) <= 0.01);
  CHECK(std::abs(var - 1.5) <= 0.03);  // Poisson equidispersion
}

TEST_CASE("tiny mu yields an empty ball most of the time") {
  const Ball ball(1, 501, Norm::sup);  // 1001 sites
  int64_t empty = 0;
  for (uint64_t t = 0; t < 100; ++t)
    empty += harness::init_poisson(ball, 1e-6, t).total_particles() == 0;
  CHECK(empty >= 90);
  CHECK_THROWS_AS(harness::init_poisson(ball, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(harness::init_poisson(ball, -1.0, 1), std::invalid_argument);
}

TEST_CASE("event F threshold arithmetic") {
  const Ball ball(1, 10, Norm::sup);  // 19 sites
  gr::Configuration config(ball.size());
  for (int32_t s = 0; s < ball.size(); ++s) config.active[s] = 1;  // n = |B|
  const auto ev = harness::event_F(config, ball, 1.5);
  CHECK_FALSE(ev.holds);  // needs n > 1.25 |B|
  CHECK(ev.epsilon == 0.25);
  CHECK(ev.N == 24);  // ceil(1.25 * 19)

  config.active[0] += 6;  // n = 25 > 23.75
  const auto ev2 = harness::event_F(config, ball, 1.5);
  CHECK(ev2.holds);
  CHECK(ev2.N <= ev2.n);

  CHECK_THROWS_AS(harness::event_F(config, ball, 1.0), std::invalid_argument);
}

TEST_CASE("P[F] rises with M and is near one at M = 200") {
  const int64_t trials = 1'000;
  double prev_p = -1.0, prev_se = 0.0;
  for (int M : {25, 50, 100, 200}) {
    const Ball ball(1, M, Norm::sup);
    int64_t holds = 0;
    for (int64_t t = 0; t < trials; ++t) {
      const auto config = harness::init_poisson(
          ball, 1.5, harness::trial_seed(321, 1, M, Norm::sup, 1.5, 0.0, t));
      holds += harness::event_F(config, ball, 1.5).holds ? 1 : 0;
    }
    const double p = static_cast<double>(holds) / trials;
    const double se = std::sqrt(std::max(p * (1.0 - p), 1e-9) / trials);
    if (prev_p >= 0) CHECK(p >= prev_p - 3.0 * (se + prev_se));
    if (M == 200) CHECK(p > 0.99);
    prev_p = p;
    prev_se = se;
  }
}

TEST_CASE("binomial tail: exact values and edge cases") {
  const auto r = harness::binomial_tail(10, 0.5, 4.0, TailSide::lower);
  CHECK(r.exact);
  CHECK(std::abs(r.value - 0.376953125) < 1e-12);

  CHECK(harness::binomial_tail(10, 0.5, -1.0, TailSide::lower).value == 0.0);
  CHECK(harness::binomial_tail(10, 0.0, 1.0, TailSide::upper).value == 0.0);
  CHECK(harness::binomial_tail(10, 0.3, 0.0, TailSide::upper).value == 1.0);
  CHECK(harness::binomial_tail(10, 0.3, 11.0, TailSide::upper).value == 0.0);
  CHECK(harness::binomial_tail(10, 1.0, 10.0, TailSide::upper).value == 1.0);

  // Complementary tails add to one plus the shared point mass.
  const double lo = harness::binomial_tail(60, 0.37, 20.0, TailSide::lower).value;
  const double hi = harness::binomial_tail(60, 0.37, 21.0, TailSide::upper).value;
  CHECK(std::abs(lo + hi - 1.0) < 1e-12);
}

TEST_CASE("binomial tail falls back to a flagged Chernoff bound") {
  const auto r =
      harness::binomial_tail(4'000'000, 0.5, 1'900'000.0, TailSide::lower);
  CHECK_FALSE(r.exact);
  CHECK(r.value >= 0.0);
  CHECK(r.value < 1e-100);  // exp(-d^2 np / 2) with d = 0.05
  const auto u =
      harness::binomial_tail(4'000'000, 0.5, 2'100'000.0, TailSide::upper);
  CHECK_FALSE(u.exact);
  CHECK(u.value < 1e-100);
}

TEST_CASE("poisson binomial tail: reductions and hand values") {
  CHECK(harness::poisson_binomial_tail_geq({1.0, 0.5}, 2) == 0.5);
  CHECK(harness::poisson_binomial_tail_geq({0.3, 0.3}, 0) == 1.0);
  CHECK(harness::poisson_binomial_tail_geq({0.3, 0.3}, 3) == 0.0);

  const std::vector<double> flat(50, 0.3);
  for (int64_t k : {1, 10, 15, 20, 40}) {
    const double pb = harness::poisson_binomial_tail_geq(flat, k);
    const double bin =
        harness::binomial_tail(50, 0.3, static_cast<double>(k), TailSide::upper)
            .value;
    CHECK(std::abs(pb - bin) < 1e-12);
  }
  CHECK_THROWS_AS(harness::poisson_binomial_tail_geq({0.5, 1.5}, 1),
                  std::invalid_argument);
}

TEST_CASE("poisson binomial tail matches direct sampling of the h-field") {
  const Ball ball(1, 6, Norm::sup);
  const auto h = potential::solve_hitting(ball);
  double expectation = 0.0;
  for (double v : h) expectation += v;
  const int64_t k = static_cast<int64_t>(std::ceil(expectation));
  const double exact = harness::poisson_binomial_tail_geq(h, k);

  const int64_t samples = 1'000'000;
  rng::SplitMix64 gen(246810);
  int64_t tail = 0;
  for (int64_t i = 0; i < samples; ++i) {
    int64_t s = 0;
    for (double p : h) s += gen.next_unit() < p ? 1 : 0;
    tail += s >= k ? 1 : 0;
  }
  const double emp = static_cast<double>(tail) / samples;
  const double se = std::sqrt(exact * (1.0 - exact) / samples);
  CHECK(std::abs(emp - exact) <= 3.0 * se);
}

TEST_CASE("wilson interval brackets the point estimate") {
  const auto ci = harness::wilson95(75, 100);
  CHECK(ci.lo < 0.75);
  CHECK(ci.hi > 0.75);
  CHECK(harness::wilson95(0, 50).lo == 0.0);
  CHECK(harness::wilson95(50, 50).hi == 1.0);
}

TEST_CASE("estimate_Ar: the r=1 occupancy lower bound holds") {
  ExperimentSpec spec;
  spec.dims = 1;
  spec.radii = {10};
  spec.norm = Norm::sup;
  spec.mu = 1.5;
  spec.lambda = 1.0;
  spec.r = 1;
  spec.trials = 300;
  spec.seed = 5150;
  spec.threads = 4;
  const auto cells = harness::estimate_Ar(spec);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].capped == 0);
  const double bound = 1.0 - std::exp(-1.5);
  const double se = std::sqrt(bound * (1.0 - bound) / spec.trials);
  CHECK(cells[0].p_hat >= bound - 3.0 * se);

  spec.mode = harness::Mode::idla;
  CHECK_THROWS_AS(harness::estimate_Ar(spec), std::invalid_argument);
}

TEST_CASE("single-trial runs are deterministic") {
  ExperimentSpec spec;
  spec.dims = 1;
  spec.radii = {8};
  spec.norm = Norm::sup;
  spec.mu = 1.5;
  spec.lambda = 1.0;
  spec.r = 3;
  spec.trials = 1;
  spec.seed = 99;
  const auto a = harness::estimate_Ar(spec);
  const auto b = harness::estimate_Ar(spec);
  CHECK(a[0].successes == b[0].successes);
  CHECK((a[0].p_hat == 0.0 || a[0].p_hat == 1.0));
  CHECK(harness::ar_csv(a, spec.seed) == harness::ar_csv(b, spec.seed));
}

TEST_CASE("thread count does not change results") {
  ExperimentSpec spec;
  spec.dims = 1;
  spec.radii = {10};
  spec.norm = Norm::sup;
  spec.mu = 1.5;
  spec.lambda = 1.0;
  spec.r = 2;
  spec.trials = 60;
  spec.seed = 31;
  spec.threads = 1;
  const auto serial = harness::estimate_Ar(spec);
  spec.threads = 8;
  const auto parallel = harness::estimate_Ar(spec);
  CHECK(harness::ar_csv(serial, spec.seed) ==
        harness::ar_csv(parallel, spec.seed));
}

TEST_CASE("estimate_V: origin starters always count into V") {
  const Ball ball(1, 10, Norm::sup);
  for (uint64_t t = 0; t < 30; ++t) {
    const auto config = harness::init_poisson(ball, 1.5, 1234 + t);
    const auto ev = harness::event_F(config, ball, 1.5);
    if (!ev.holds) continue;
    rng::SplitMix64 gen(4321 + t);
    const auto starts = harness::select_particles(config, ev.N, gen);
    int64_t at_origin = 0;
    for (int32_t s : starts) at_origin += s == ball.origin_id() ? 1 : 0;
    const auto emb = idla::run_embedded(ball, starts, 999 + t);
    CHECK(emb.V >= at_origin);
  }
}

TEST_CASE("estimate_V summary: conditional probability is well formed") {
  ExperimentSpec spec;
  spec.dims = 1;
  spec.radii = {20};
  spec.norm = Norm::sup;
  spec.mu = 1.5;
  spec.trials = 200;
  spec.seed = 777;
  spec.threads = 4;
  spec.mode = harness::Mode::idla;
  const auto out = harness::estimate_V(spec);
  REQUIRE(out.size() == 1);
  const auto& vs = out[0];
  CHECK(vs.trials_F > 0);
  CHECK(vs.trials_F <= vs.trials_total);
  CHECK(static_cast<int64_t>(vs.v_values.size()) == vs.trials_F);
  CHECK(vs.p_cond >= 0.0);
  CHECK(vs.p_cond <= 1.0);
  CHECK(vs.N ==
        static_cast<int64_t>(std::ceil(1.25 * static_cast<double>(vs.ball_size))));
}

TEST_CASE("certificate algebra and internal consistency") {
  const auto rep = harness::certificate(1, 20, 1.5, Norm::sup, 0, 1, 1);
  CHECK(rep.epsilon == 0.25);
  CHECK_FALSE(rep.epsilon_clamped);
  CHECK(rep.ball_size == 39);
  CHECK(rep.N == 49);  // ceil(1.25 * 39)
  const double eps_prime =
      static_cast<double>(rep.N) / rep.ball_size - 1.0;
  CHECK(eps_prime >= rep.epsilon);
  CHECK(std::abs(rep.EW - (1.0 + eps_prime) * rep.sum_h) <= 1e-9 * rep.EW);
  CHECK(rep.sum_h >= 20.0 * (1.0 - 1e-9));
  CHECK(std::abs(rep.sum_h - rep.exit_time0 / rep.g00) <=
        1e-8 * (rep.exit_time0 / rep.g00));
  CHECK(rep.total_bound >= 0.0);
  CHECK(rep.total_bound <= 2.0);
  CHECK(rep.bounds_exact);
  CHECK(rep.a == (1.0 - rep.epsilon_used / 2.0) * rep.EW);

  CHECK_THROWS_AS(harness::certificate(1, 10, 0.9, Norm::sup, 0, 1, 1),
                  std::invalid_argument);
}

TEST_CASE("certificate clamps eps at the algebra's limit") {
  const auto rep = harness::certificate(1, 10, 2.4, Norm::sup, 0, 1, 1);
  CHECK(rep.epsilon == doctest::Approx(0.7));
  CHECK(rep.epsilon_clamped);
  CHECK(rep.epsilon_used == 0.49);
  CHECK(rep.total_bound >= 0.0);
}

TEST_CASE("certificate bound shrinks from M = 10 to M = 20") {
  const auto a = harness::certificate(1, 10, 1.5, Norm::sup, 0, 1, 1);
  const auto b = harness::certificate(1, 20, 1.5, Norm::sup, 0, 1, 1);
  CHECK(b.total_bound < a.total_bound);
}

TEST_CASE("scan: a single cell reproduces estimate_Ar exactly") {
  ExperimentSpec spec;
  spec.dims = 1;
  spec.radii = {12};
  spec.norm = Norm::sup;
  spec.mu = 1.3;
  spec.lambda = 0.7;
  spec.r = 2;
  spec.trials = 50;
  spec.seed = 2468;
  const auto direct = harness::estimate_Ar(spec);
  ExperimentSpec base = spec;
  base.mode = harness::Mode::scan;
  const auto grid = harness::scan(base, {1.3}, {0.7});
  REQUIRE(grid.size() == 1);
  CHECK(harness::ar_csv(grid, spec.seed) == harness::ar_csv(direct, spec.seed));
  CHECK_THROWS_AS(harness::scan(base, {}, {0.7}), std::invalid_argument);
}

TEST_CASE("scan phases: sleepy dilute cells are quiet, dense awake cells are loud") {
  ExperimentSpec base;
  base.dims = 1;
  base.radii = {20};
  base.norm = Norm::sup;
  base.r = 5;
  base.trials = 300;
  base.seed = 97;
  base.threads = 8;
  base.mode = harness::Mode::scan;
  const auto cells = harness::scan(base, {0.1, 2.0}, {10.0, 0.1});
  REQUIRE(cells.size() == 4);
  // (mu=0.1, lambda=10): subcritical and sleepy.
  CHECK(cells[0].mean_origin_visits < 1.0);
  // (mu=2, lambda=0.1): supercritical and lively.
  CHECK(cells[3].p_hat >= 0.9);
}

TEST_CASE("verification campaigns pass at unit scale") {
  const auto ab = harness::abelian_campaign(60, 1357, 8);
  CHECK(ab.instances == 60);
  CHECK(ab.failures == 0);
  CHECK(ab.inconclusive == 0);
  const auto mono = harness::monotone_campaign(60, 8642, 8);
  CHECK(mono.failures == 0);
  CHECK(mono.inconclusive == 0);
}

TEST_CASE("formatting is precise and stable") {
  for (double x : {1.0 / 3.0, 0.1, 12345.678901234567, 1e-300}) {
    const double back = std::strtod(harness::fmt17(x).c_str(), nullptr);
    CHECK(back == x);
  }
  const auto cells = std::vector<harness::ArCell>{};
  CHECK(harness::ar_csv(cells, 7) ==
        "d,M,norm,mu,lambda,r,trials,successes,capped,p_hat,ci_lo,ci_hi,"
        "mean_origin_visits,mean_steps,seed\n");
}

TEST_CASE("spec validation rejects out-of-domain parameters") {
  ExperimentSpec spec;
  spec.mu = 0.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec.mu = 1.0;
  spec.lambda = -0.1;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec.lambda = 0.0;
  spec.r = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec.r = 1;
  spec.trials = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

}  // TEST_SUITE
