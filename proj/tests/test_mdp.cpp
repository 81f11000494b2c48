#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <vector>

#include "tdlab/errors.hpp"
#include "tdlab/mdp.hpp"
#include "tdlab/rng.hpp"

using namespace tdlab;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Mdp two_state_two_action() {
  // action 0: go to state 0; action 1: go to state 1, from anywhere
  MatrixXd k0(2, 2), k1(2, 2);
  k0 << 1, 0, 1, 0;
  k1 << 0, 1, 0, 1;
  MatrixXd r(2, 2);
  r << 1.0, 2.0, 3.0, 4.0;
  return Mdp({k0, k1}, r, 0.9);
}

}  // namespace

TEST_CASE("mdp constructor validates probability rows and discount") {
  MatrixXd good(1, 1), r(1, 1);
  good << 1.0;
  r << 0.0;
  CHECK_NOTHROW(Mdp({good}, r, 0.0));
  CHECK_THROWS_AS(Mdp({good}, r, 1.0), ConfigError);
  CHECK_THROWS_AS(Mdp({good}, r, -0.1), ConfigError);

  MatrixXd bad_sum(1, 1);
  bad_sum << 0.5;
  CHECK_THROWS_AS(Mdp({bad_sum}, r, 0.5), ConfigError);

  MatrixXd negative(2, 2);
  negative << 1.5, -0.5, 0.5, 0.5;
  MatrixXd r2 = MatrixXd::Zero(2, 1);
  CHECK_THROWS_AS(Mdp({negative}, r2, 0.5), ConfigError);
}

TEST_CASE("policy rows must be distributions") {
  MatrixXd p(2, 2);
  p << 0.3, 0.7, 1.0, 0.0;
  CHECK_NOTHROW(Policy{p});
  p(1, 1) = 0.1;
  CHECK_THROWS_AS(Policy{p}, ConfigError);
}

TEST_CASE("feature map rejects duplicated columns") {
  MatrixXd x(3, 2);
  x << 1, 1, 2, 2, 3, 3;
  CHECK_THROWS_AS(FeatureMap{x}, AssumptionError);
  x(2, 1) = 4.0;
  CHECK_NOTHROW(FeatureMap{x});
}

TEST_CASE("induced dynamics: single state forces a self-loop") {
  MatrixXd k(1, 1), r(1, 1), probs(1, 2);
  k << 1.0;
  r << 2.5;
  MatrixXd r2(1, 2);
  r2 << 2.5, -1.0;
  Mdp mdp({k, k}, r2, 0.5);
  probs << 0.25, 0.75;
  const auto dyn = induced_dynamics(mdp, Policy(probs));
  CHECK(dyn.p(0, 0) == doctest::Approx(1.0));
  CHECK(dyn.r(0) == doctest::Approx(0.25 * 2.5 + 0.75 * -1.0));
}

TEST_CASE("induced dynamics: deterministic stay policy gives the identity") {
  const Mdp mdp = two_state_two_action();
  MatrixXd probs(2, 2);
  probs << 1, 0, 0, 1;  // state 0 picks action 0 (stay), state 1 picks 1 (stay)
  const auto dyn = induced_dynamics(mdp, Policy(probs));
  CHECK(dyn.p.isApprox(MatrixXd::Identity(2, 2)));
}

TEST_CASE("induced dynamics: uniform policy mixes the two kernels") {
  const Mdp mdp = two_state_two_action();
  MatrixXd probs = MatrixXd::Constant(2, 2, 0.5);
  const auto dyn = induced_dynamics(mdp, Policy(probs));
  MatrixXd expect = MatrixXd::Constant(2, 2, 0.5);
  CHECK(dyn.p.isApprox(expect, 1e-15));
  CHECK((dyn.p.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("stationary distribution: symmetric two-state chain") {
  MatrixXd p(2, 2);
  p << 0.9, 0.1, 0.1, 0.9;
  const VectorXd d = stationary_distribution(p);
  CHECK(d(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d(1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("stationary distribution: hand-solved asymmetric chain") {
  MatrixXd p(2, 2);
  p << 0.5, 0.5, 0.2, 0.8;
  const VectorXd d = stationary_distribution(p);
  CHECK(d(0) == doctest::Approx(2.0 / 7.0).epsilon(1e-12));
  CHECK(d(1) == doctest::Approx(5.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("stationary distribution: reducible chain is rejected") {
  CHECK_THROWS_AS(stationary_distribution(MatrixXd::Identity(2, 2)),
                  AssumptionError);
}

TEST_CASE("stationary distribution: periodic chain is rejected") {
  MatrixXd p(2, 2);
  p << 0, 1, 1, 0;
  CHECK(is_irreducible(p));
  CHECK(chain_period(p) == 2);
  CHECK_THROWS_AS(stationary_distribution(p), AssumptionError);
}

TEST_CASE("stationary distribution is left-fixed on random ergodic chains") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 9);
    MatrixXd p(n, n);
    for (int i = 0; i < n; ++i) {
      double sum = 0.0;
      for (int j = 0; j < n; ++j) {
        p(i, j) = 0.05 + rng.next_double();
        sum += p(i, j);
      }
      p.row(i) /= sum;
    }
    const VectorXd d = stationary_distribution(p);
    CHECK(d.minCoeff() >= 0.0);
    CHECK(d.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((d.transpose() * p - d.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("importance ratio") {
  MatrixXd pi_t(1, 3), mu_t(1, 3);
  pi_t << 0.3, 0.5, 0.2;
  mu_t << 0.3, 0.25, 0.45;
  const Policy pi(pi_t), mu(mu_t);
  CHECK(importance_ratio(pi, mu, 0, 0) == doctest::Approx(1.0));
  CHECK(importance_ratio(pi, mu, 0, 1) == doctest::Approx(2.0));

  MatrixXd mu_bad(1, 3);
  mu_bad << 0.8, 0.0, 0.2;
  CHECK_THROWS_AS(importance_ratio(pi, Policy(mu_bad), 0, 1), AssumptionError);
}

TEST_CASE("sample_step: degenerate distributions give a unique transition") {
  MatrixXd k(2, 2);
  k << 0, 1, 1, 0;
  MatrixXd r(2, 1);
  r << 5.0, -5.0;
  Mdp mdp({k}, r, 0.5);
  MatrixXd ones = MatrixXd::Ones(2, 1);
  const Policy mu(ones), pi(ones);
  for (std::uint64_t seed : {0ull, 1ull, 42ull}) {
    Rng rng(seed);
    const Transition tr = sample_step(mdp, mu, pi, 0, rng);
    CHECK(tr.a == 0);
    CHECK(tr.s_next == 1);
    CHECK(tr.r == doctest::Approx(5.0));
    CHECK(tr.rho == doctest::Approx(1.0));
  }
}

TEST_CASE("sample_step: identical seed reproduces the trajectory bit for bit") {
  const Mdp mdp = two_state_two_action();
  MatrixXd mu_t = MatrixXd::Constant(2, 2, 0.5);
  MatrixXd pi_t(2, 2);
  pi_t << 0.9, 0.1, 0.4, 0.6;
  const Policy mu(mu_t), pi(pi_t);

  auto roll = [&](std::uint64_t seed) {
    Rng rng = Rng::from_stream(seed, "traj");
    std::vector<Transition> out;
    int s = 0;
    for (int i = 0; i < 200; ++i) {
      out.push_back(sample_step(mdp, mu, pi, s, rng));
      s = out.back().s_next;
    }
    return out;
  };
  const auto a = roll(3), b = roll(3), c = roll(4);
  bool same = true, differs = false;
  for (int i = 0; i < 200; ++i) {
    same = same && a[i].s == b[i].s && a[i].a == b[i].a &&
           a[i].s_next == b[i].s_next && a[i].r == b[i].r &&
           a[i].rho == b[i].rho;
    differs = differs || a[i].a != c[i].a || a[i].s_next != c[i].s_next;
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("empirical visitation matches the stationary distribution") {
  MatrixXd p(2, 2);
  p << 0.5, 0.5, 0.2, 0.8;
  MatrixXd r = MatrixXd::Zero(2, 1);
  Mdp mdp({p}, r, 0.5);
  MatrixXd ones = MatrixXd::Ones(2, 1);
  const Policy mu(ones), pi(ones);
  const VectorXd d = stationary_distribution(p);

  Rng rng(123);
  VectorXd counts = VectorXd::Zero(2);
  int s = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Transition tr = sample_step(mdp, mu, pi, s, rng);
    s = tr.s_next;
    counts(s) += 1.0;
  }
  counts /= n;
  CHECK((counts - d).cwiseAbs().maxCoeff() <= 0.01);
}
