#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "tdlab/errors.hpp"
#include "tdlab/rng.hpp"
#include "tdlab/schedules.hpp"

using namespace tdlab;

TEST_CASE("lr schedule: direct evaluations and range enforcement") {
  const LrSchedule unit(1.0, 1.0);
  CHECK(unit.at(0) == doctest::Approx(1.0));
  CHECK(unit.at(9) == doctest::Approx(0.1));
  const LrSchedule faster(2.0, 0.8);
  CHECK(faster.at(0) == doctest::Approx(2.0));

  CHECK_THROWS_AS(LrSchedule(0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(LrSchedule(1.0, 2.0 / 3.0), ConfigError);  // open endpoint
  CHECK_THROWS_AS(LrSchedule(1.0, 0.5), ConfigError);
  CHECK_THROWS_AS(LrSchedule(1.0, 1.01), ConfigError);
}

TEST_CASE("lr schedule is strictly decreasing") {
  const LrSchedule sched(0.7, 0.9);
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const double t1 = 1e6 * rng.next_double();
    const double t2 = t1 + 1.0 + 1e6 * rng.next_double();
    CHECK(sched.at(t2) < sched.at(t1));
  }
}

TEST_CASE("gap evaluations: ln2, constant") {
  GapFn ln2 = GapFn::ln_squared();
  CHECK(ln2(0) == 0);           // ln(1) = 0
  CHECK(ln2(10) == 5);          // floor(ln^2 11) = floor(5.749...)
  GapFn c3 = GapFn::constant(3);
  CHECK(c3(0) == 3);
  CHECK(c3(1000000) == 3);
  GapFn lg = GapFn::log_scaled(2.0);
  CHECK(lg(0) == 0);
  CHECK(lg(99) == static_cast<std::int64_t>(std::floor(2.0 * std::log(100.0))));
}

TEST_CASE("gap memory bound: ln^2 at t = 10^27 is about 4000") {
  const GapFn ln2 = GapFn::ln_squared();
  const std::int64_t f = ln2.value_at(1e27);
  CHECK(f >= 3800);
  CHECK(f <= 4200);
}

TEST_CASE("gap is nondecreasing over random ordered pairs") {
  Rng rng(3);
  GapFn kinds[] = {GapFn::ln_squared(), GapFn::log_scaled(0.7),
                   GapFn::constant(5)};
  for (auto& g : kinds) {
    for (int trial = 0; trial < 300; ++trial) {
      const double t1 = 1e8 * rng.next_double();
      const double t2 = t1 + 1e8 * rng.next_double();
      CHECK(g.value_at(t2) >= g.value_at(t1));
    }
  }
}

TEST_CASE("monotonicity guard trips on a decreasing h") {
  GapFn bad = GapFn::h_times_ln("shrinking", [](double t) { return 100.0 / (1.0 + t); },
                                false);
  CHECK_NOTHROW(bad(10.0));
  CHECK_THROWS_AS(bad(10000.0), std::logic_error);
}

TEST_CASE("gap parser") {
  CHECK(parse_gap("ln2").kind() == GapFn::Kind::LnSquared);
  CHECK(parse_gap("log:5").kind() == GapFn::Kind::LogScaled);
  CHECK(parse_gap("const:0").kind() == GapFn::Kind::Constant);
  CHECK_THROWS_AS(parse_gap("quadratic"), ConfigError);
  CHECK_THROWS_AS(parse_gap("log:abc"), ConfigError);
}

TEST_CASE("gap check: the concrete ln^2 configuration passes") {
  // nu = 1, f = floor(ln^2(t+1)), tau = 0.1, generous C_tau.
  const LrSchedule sched(1.0, 1.0);
  const auto rep = check_gap_assumption(GapFn::ln_squared(), sched, 0.1, 100.0,
                                        {0.1, 0.5, 0.9, 0.99}, 10000);
  CHECK(rep.monotone);
  CHECK(rep.growth_bound);
  CHECK(rep.analytic_applicable);
  CHECK(rep.summable_all_chi);
  CHECK(rep.pass);
}

TEST_CASE("gap check: tau outside the admissible interval is rejected") {
  const LrSchedule sched(1.0, 1.0);  // cap = (3-2)/2 = 0.5
  CHECK_THROWS_AS(check_gap_assumption(GapFn::ln_squared(), sched, 0.5, 10.0,
                                       {0.5}, 10000),
                  ConfigError);
  CHECK_THROWS_AS(check_gap_assumption(GapFn::ln_squared(), sched, -0.1, 10.0,
                                       {0.5}, 10000),
                  ConfigError);
}

TEST_CASE("gap check: constant gap fails the summability proxy") {
  const LrSchedule sched(1.0, 1.0);
  const auto rep = check_gap_assumption(GapFn::constant(0), sched, 0.1, 10.0,
                                        {0.1, 0.5, 0.9}, 10000);
  CHECK(rep.monotone);
  CHECK_FALSE(rep.analytic_applicable);
  CHECK_FALSE(rep.summable_all_chi);
  CHECK_FALSE(rep.pass);
  for (const auto& v : rep.chi_verdicts)
    CHECK(v.verdict == ChiVerdict::Kind::Fail);
}

TEST_CASE("gap check: slow log gap is flagged outside the assumption") {
  const LrSchedule sched(1.0, 1.0);
  const auto rep = check_gap_assumption(GapFn::log_scaled(0.5), sched, 0.1,
                                        100.0, {0.5, 0.99}, 10000);
  CHECK(rep.monotone);
  CHECK_FALSE(rep.analytic_applicable);
  CHECK_FALSE(rep.summable_all_chi);  // chi near 1 diverges
  CHECK_FALSE(rep.pass);
}

TEST_CASE("skeleton: T_0 matches the closed form") {
  const LrSchedule sched(1.0, 1.0);
  const auto sk = make_skeleton(sched, 0.1, 0.75, 5);
  REQUIRE(!sk.big_t.empty());
  CHECK(sk.big_t[0] == doctest::Approx(16.0 / 1.75).epsilon(1e-14));
  CHECK(sk.t_marks[0] == 0.0);
}

TEST_CASE("skeleton: first two marks agree with brute-force summation") {
  const LrSchedule sched(1.0, 1.0);
  const auto sk = make_skeleton(sched, 0.1, 0.75, 2);
  REQUIRE(sk.computed_m >= 1);

  auto brute_next = [&](double from, double target) {
    long double acc = 0.0L;
    double t = from;
    while (static_cast<double>(acc) < target) {
      acc += 1.0L / (static_cast<long double>(t) + 1.0L);
      t += 1.0;
    }
    return t;
  };
  const double t1 = brute_next(0.0, sk.big_t[0]);
  CHECK(sk.t_marks[1] == t1);
  const double t2 = brute_next(t1, sk.big_t[1]);
  CHECK(sk.t_marks[2] == t2);
}

TEST_CASE("skeleton: lemma inequalities hold for every computed interval") {
  const LrSchedule sched(1.0, 1.0);
  const auto sk = make_skeleton(sched, 0.1, 0.75, 2000);
  CHECK(sk.computed_m == 2000);
  CHECK_FALSE(sk.truncated);
  CHECK(sk.lemmas_hold());
  for (int m = 0; m <= sk.computed_m; ++m) {
    CHECK(sk.t_marks[m + 1] > sk.t_marks[m]);
    CHECK(sk.alpha_bars[m] >= sk.big_t[m] * (1.0 - 1e-12));
    CHECK(sk.alpha_bars[m] <= 2.0 * sk.big_t[m]);
    CHECK(sched.at(sk.t_marks[m]) <= sk.big_t[m] * sk.big_t[m]);
  }
}

TEST_CASE("skeleton: works for nu < 1 as well") {
  const LrSchedule sched(1.0, 0.8);
  // eta must lie in (1/(2(1-tau)), nu/(2-nu)) = (0.5556, 0.6667) for tau=0.1
  const auto sk = make_skeleton(sched, 0.1, 0.6, 500);
  CHECK(sk.computed_m == 500);
  CHECK(sk.lemmas_hold());
}

TEST_CASE("skeleton: parameter validation") {
  const LrSchedule sched(1.0, 1.0);
  CHECK_THROWS_AS(make_skeleton(sched, 0.1, 0.5, 10), ConfigError);   // eta low
  CHECK_THROWS_AS(make_skeleton(sched, 0.1, 1.0, 10), ConfigError);   // eta high
  CHECK_THROWS_AS(make_skeleton(sched, 0.1, 0.75, 20000), ConfigError);
  const LrSchedule slow(1.0, 0.7);
  // 1/(2(1-0.45)) = 0.909 > 0.7/1.3 = 0.538: empty interval
  CHECK_THROWS_AS(make_skeleton(slow, 0.45, 0.7, 10), ConfigError);
}
