#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "tdlab/mdp.hpp"
#include "tdlab/rng.hpp"

namespace tdlab {

/// Closed-form ground truth for a (mdp, pi, mu, X) problem instance.
///
/// A = X^T D_mu (gamma P_pi - I) X, b = X^T D_mu r_pi, C = X^T D_mu X,
/// w* solves A w + b = 0 (minimum-norm when A is singular but the system is
/// consistent), beta = lambda_min(A^T A), v_pi = (I - gamma P_pi)^{-1} r_pi.
struct OracleQuantities {
  Eigen::VectorXd d_mu;
  Eigen::MatrixXd p_pi;
  Eigen::VectorXd r_pi;
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::MatrixXd c;
  Eigen::VectorXd w_star;
  double beta = 0.0;
  Eigen::VectorXd v_pi;
  bool a_nonsingular = false;
  /// Pseudo-inverse of C; equals C^{-1} when C is positive definite.
  /// Kept so the per-step RMSPBE evaluation is a pair of mat-vecs.
  Eigen::MatrixXd c_pinv;
};

/// Assumption checker output. Failures are carried, never thrown.
struct AssumptionReport {
  bool irreducible = false;
  bool aperiodic = false;
  bool coverage = false;
  bool feature_rank = false;
  bool a_nonsingular = false;
  /// A w + b = 0 admits a solution within residual 1e-10 (true whenever A is
  /// nonsingular, and also for consistent singular systems such as Baird's
  /// overparameterized features with zero rewards).
  bool fixed_point_solvable = false;
  double beta = 0.0;

  bool chain_ok() const { return irreducible && aperiodic && coverage; }
};

/// Empirical shadow of the geometric-mixing bound: residuals
/// || avg_t[ Ahat_{t+k}^T Ahat_t ] - A^T A || per lag k, with a log-linear
/// fit  residual ~= c_hat * chi_hat^k.
struct MixingReport {
  double chi_hat = 0.0;
  double c_hat = 0.0;
  std::vector<std::pair<int, double>> residuals;
};

/// Compute all oracle quantities. Chain, coverage and feature checks run
/// first; an unsolvable fixed-point system raises AssumptionError naming
/// Assumption 2.
OracleQuantities compute_oracle(const Mdp& mdp, const Policy& pi,
                                const Policy& mu, const FeatureMap& x);

/// Norm of the expected TD update, ||A w + b||^2.
double neu(const Eigen::VectorXd& w, const OracleQuantities& oq);

/// sqrt( (Aw+b)^T C^+ (Aw+b) ). Raises AssumptionError when the quadratic
/// form is ill-posed (Aw+b outside the range of C).
double rmspbe(const Eigen::VectorXd& w, const OracleQuantities& oq);

AssumptionReport check_assumptions(const Mdp& mdp, const Policy& pi,
                                   const Policy& mu, const FeatureMap& x);

/// Raw-matrix variant so rank failures can be reported for feature tables
/// that the FeatureMap constructor would reject outright.
AssumptionReport check_assumptions(const Mdp& mdp, const Policy& pi,
                                   const Policy& mu,
                                   const Eigen::MatrixXd& x);

/// Monte Carlo check of the lagged-moment factorization along one long
/// trajectory under mu. Residuals use the spectral norm; chi_hat is fitted by
/// ordinary least squares on log residuals over the requested lags.
MixingReport mixing_check(const Mdp& mdp, const Policy& pi, const Policy& mu,
                          const FeatureMap& x, const std::vector<int>& lags,
                          long n_samples, Rng& rng);

}  // namespace tdlab
