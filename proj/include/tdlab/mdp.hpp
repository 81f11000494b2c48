#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tdlab/rng.hpp"

namespace tdlab {

/// Finite MDP: transition tensor p(s'|s,a), reward table r(s,a), discount.
/// Probability rows are validated to machine precision at construction and
/// the object is immutable afterwards, so instances can be shared freely
/// across threads.
class Mdp {
 public:
  /// `kernels[a](s, s')` is p(s'|s,a); `reward(s, a)` is r(s,a).
  Mdp(std::vector<Eigen::MatrixXd> kernels, Eigen::MatrixXd reward,
      double discount);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  double discount() const { return discount_; }
  const Eigen::MatrixXd& kernel(int a) const { return kernels_[a]; }
  double prob(int s, int a, int s_next) const { return kernels_[a](s, s_next); }
  double reward(int s, int a) const { return reward_(s, a); }
  const Eigen::MatrixXd& reward_table() const { return reward_; }

 private:
  int n_states_;
  int n_actions_;
  std::vector<Eigen::MatrixXd> kernels_;
  Eigen::MatrixXd reward_;
  double discount_;
};

/// Row-stochastic action distribution table pi(a|s).
class Policy {
 public:
  explicit Policy(Eigen::MatrixXd probs);

  int n_states() const { return static_cast<int>(probs_.rows()); }
  int n_actions() const { return static_cast<int>(probs_.cols()); }
  double prob(int s, int a) const { return probs_(s, a); }
  const Eigen::MatrixXd& table() const { return probs_; }

 private:
  Eigen::MatrixXd probs_;
};

/// State-feature matrix X (n_states x K), one row per state.
///
/// Construction verifies that X has no numerically dependent directions:
/// the smallest of the min(n_states, K) singular values must exceed 1e-10
/// relative to the largest. When K > n_states (overparameterized features,
/// e.g. Baird's counterexample) this is a full-row-rank check, the strongest
/// statement possible for such shapes.
class FeatureMap {
 public:
  explicit FeatureMap(Eigen::MatrixXd x);

  int n_states() const { return static_cast<int>(x_.rows()); }
  int dim() const { return static_cast<int>(x_.cols()); }
  Eigen::VectorXd row(int s) const { return x_.row(s).transpose(); }
  const Eigen::MatrixXd& matrix() const { return x_; }

 private:
  Eigen::MatrixXd x_;
};

/// One sampled step of the data stream: (S_t, A_t, R_{t+1}, S_{t+1}, rho_t).
struct Transition {
  int s = 0;
  int a = 0;
  double r = 0.0;
  int s_next = 0;
  double rho = 1.0;
};

struct InducedDynamics {
  Eigen::MatrixXd p;  // P_pi(s, s') = sum_a pi(a|s) p(s'|s,a)
  Eigen::VectorXd r;  // r_pi(s)     = sum_a pi(a|s) r(s,a)
};

/// Transition matrix and reward vector of the chain induced by `pi`.
InducedDynamics induced_dynamics(const Mdp& mdp, const Policy& pi);

/// True iff the support graph of P is strongly connected.
bool is_irreducible(const Eigen::MatrixXd& p);

/// Period of the support graph (gcd of cycle lengths). Requires an
/// irreducible chain; aperiodic iff the result is 1.
int chain_period(const Eigen::MatrixXd& p);

/// Stationary distribution d of a row-stochastic P, via a direct linear
/// solve of (P^T - I) d = 0 with the normalization row appended.
/// The chain is checked structurally for irreducibility and aperiodicity
/// first; violations raise AssumptionError.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& p);

/// pi(a|s) / mu(a|s). Raises AssumptionError if mu(a|s) = 0 while
/// pi(a|s) > 0 (coverage violation).
double importance_ratio(const Policy& pi, const Policy& mu, int s, int a);

/// Draw A_t ~ mu(.|s), S_{t+1} ~ p(.|s, A_t); fills reward and rho.
Transition sample_step(const Mdp& mdp, const Policy& mu, const Policy& pi,
                       int s, Rng& rng);

}  // namespace tdlab
