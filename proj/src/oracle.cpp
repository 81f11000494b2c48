#include "tdlab/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "tdlab/errors.hpp"

namespace tdlab {

namespace {

bool coverage_holds(const Policy& pi, const Policy& mu) {
  for (int s = 0; s < pi.n_states(); ++s)
    for (int a = 0; a < pi.n_actions(); ++a)
      if (pi.prob(s, a) > 0.0 && mu.prob(s, a) == 0.0) return false;
  return true;
}

bool feature_rank_ok(const Eigen::MatrixXd& x) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x);
  const auto& sv = svd.singularValues();
  return sv(0) > 0.0 && sv(sv.size() - 1) > 1e-10 * sv(0);
}

double spectral_norm(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

}  // namespace

OracleQuantities compute_oracle(const Mdp& mdp, const Policy& pi,
                                const Policy& mu, const FeatureMap& x) {
  if (x.n_states() != mdp.n_states())
    throw ConfigError("compute_oracle: feature rows != n_states");
  const AssumptionReport rep = check_assumptions(mdp, pi, mu, x);
  if (!rep.chain_ok())
    throw AssumptionError(
        "compute_oracle: behavior chain must be irreducible, aperiodic and "
        "cover the target policy (Assumption 1)");

  OracleQuantities oq;
  const auto mu_dyn = induced_dynamics(mdp, mu);
  const auto pi_dyn = induced_dynamics(mdp, pi);
  oq.d_mu = stationary_distribution(mu_dyn.p);
  oq.p_pi = pi_dyn.p;
  oq.r_pi = pi_dyn.r;

  const int n = mdp.n_states();
  const double gamma = mdp.discount();
  const Eigen::MatrixXd xd = x.matrix().transpose() * oq.d_mu.asDiagonal();
  oq.a = xd * (gamma * oq.p_pi - Eigen::MatrixXd::Identity(n, n)) * x.matrix();
  oq.b = xd * oq.r_pi;
  oq.c = xd * x.matrix();

  // Minimum-norm solve of A w = -b; exact inverse when A is regular.
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(oq.a);
  oq.w_star = cod.solve(-oq.b);
  const double resid = (oq.a * oq.w_star + oq.b).norm();
  if (resid > 1e-10 * std::max(1.0, oq.b.norm()))
    throw AssumptionError(
        "compute_oracle: A w + b = 0 has no solution; A is singular and the "
        "system is inconsistent (Assumption 2)");

  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(oq.a);
    const auto& sv = svd.singularValues();
    oq.a_nonsingular = sv(0) > 0.0 && sv(sv.size() - 1) > 1e-12 * sv(0);
    const double smin = sv(sv.size() - 1);
    oq.beta = smin * smin;  // lambda_min(A^T A) = sigma_min(A)^2
  }

  {
    // Spectral pseudo-inverse of the symmetric PSD matrix C.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(oq.c);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double lmax = ev(ev.size() - 1);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev(i) > 1e-12 * std::max(lmax, 0.0)) inv(i) = 1.0 / ev(i);
    oq.c_pinv =
        es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  }

  oq.v_pi = (Eigen::MatrixXd::Identity(n, n) - gamma * oq.p_pi)
                .partialPivLu()
                .solve(oq.r_pi);
  return oq;
}

double neu(const Eigen::VectorXd& w, const OracleQuantities& oq) {
  if (w.size() != oq.a.cols()) throw ConfigError("neu: dimension mismatch");
  return (oq.a * w + oq.b).squaredNorm();
}

double rmspbe(const Eigen::VectorXd& w, const OracleQuantities& oq) {
  if (w.size() != oq.a.cols()) throw ConfigError("rmspbe: dimension mismatch");
  const Eigen::VectorXd v = oq.a * w + oq.b;
  const Eigen::VectorXd y = oq.c_pinv * v;
  // The form is only meaningful when v lies in the range of C.
  if ((oq.c * y - v).norm() > 1e-8 * std::max(1.0, v.norm()))
    throw AssumptionError(
        "rmspbe: C is singular in a direction of the expected update "
        "(Assumption 2)");
  return std::sqrt(std::max(0.0, v.dot(y)));
}

AssumptionReport check_assumptions(const Mdp& mdp, const Policy& pi,
                                   const Policy& mu, const FeatureMap& x) {
  return check_assumptions(mdp, pi, mu, x.matrix());
}

AssumptionReport check_assumptions(const Mdp& mdp, const Policy& pi,
                                   const Policy& mu,
                                   const Eigen::MatrixXd& x) {
  AssumptionReport rep;
  const auto mu_dyn = induced_dynamics(mdp, mu);
  rep.irreducible = is_irreducible(mu_dyn.p);
  rep.aperiodic = rep.irreducible && chain_period(mu_dyn.p) == 1;
  rep.coverage = coverage_holds(pi, mu);
  rep.feature_rank = feature_rank_ok(x);
  if (!rep.chain_ok() || !rep.feature_rank) return rep;

  const Eigen::VectorXd d = stationary_distribution(mu_dyn.p);
  const auto pi_dyn = induced_dynamics(mdp, pi);
  const int n = mdp.n_states();
  const Eigen::MatrixXd a =
      x.transpose() * d.asDiagonal() *
      (mdp.discount() * pi_dyn.p - Eigen::MatrixXd::Identity(n, n)) * x;
  const Eigen::VectorXd b = x.transpose() * d.asDiagonal() * pi_dyn.r;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& sv = svd.singularValues();
  rep.a_nonsingular = sv(0) > 0.0 && sv(sv.size() - 1) > 1e-12 * sv(0);
  const double smin = sv(sv.size() - 1);
  rep.beta = smin * smin;

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  const Eigen::VectorXd w = cod.solve(-b);
  rep.fixed_point_solvable =
      (a * w + b).norm() <= 1e-10 * std::max(1.0, b.norm());
  return rep;
}

MixingReport mixing_check(const Mdp& mdp, const Policy& pi, const Policy& mu,
                          const FeatureMap& x, const std::vector<int>& lags,
                          long n_samples, Rng& rng) {
  if (lags.empty()) throw ConfigError("mixing_check: no lags");
  if (n_samples < 1) throw ConfigError("mixing_check: n_samples < 1");
  const OracleQuantities oq = compute_oracle(mdp, pi, mu, x);
  const Eigen::MatrixXd target = oq.a.transpose() * oq.a;
  const int k_dim = x.dim();
  const int max_lag = *std::max_element(lags.begin(), lags.end());

  // One long trajectory; Ahat_t = rho_t x_t (gamma x_{t+1} - x_t)^T. Only a
  // ring of the last max_lag+1 matrices is kept.
  const long burn_in = std::min<long>(1000, n_samples / 10);
  const long total = burn_in + n_samples + max_lag;
  const long ring_len = max_lag + 1;
  std::vector<Eigen::MatrixXd> ring(
      ring_len, Eigen::MatrixXd::Zero(k_dim, k_dim));
  std::vector<Eigen::MatrixXd> acc(
      lags.size(), Eigen::MatrixXd::Zero(k_dim, k_dim));

  int s = 0;
  const double gamma = mdp.discount();
  for (long u = 0; u < total; ++u) {
    const Transition tr = sample_step(mdp, mu, pi, s, rng);
    const Eigen::VectorXd xt = x.row(tr.s);
    const Eigen::VectorXd xn = x.row(tr.s_next);
    ring[u % ring_len] = tr.rho * xt * (gamma * xn - xt).transpose();
    s = tr.s_next;
    for (std::size_t i = 0; i < lags.size(); ++i) {
      const long t = u - lags[i];  // pair (Ahat_u, Ahat_t), lag u - t
      if (t >= burn_in && t < burn_in + n_samples)
        acc[i] += ring[u % ring_len].transpose() * ring[t % ring_len];
    }
  }

  MixingReport rep;
  for (std::size_t i = 0; i < lags.size(); ++i) {
    acc[i] /= static_cast<double>(n_samples);
    rep.residuals.emplace_back(lags[i], spectral_norm(acc[i] - target));
  }

  // Log-linear fit over lags whose residual is numerically nonzero.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& [k, r] : rep.residuals) {
    if (r <= 1e-14) continue;
    const double y = std::log(r);
    sx += k;
    sy += y;
    sxx += static_cast<double>(k) * k;
    sxy += k * y;
    ++m;
  }
  if (m >= 2 && sxx * m - sx * sx > 0) {
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / m;
    rep.chi_hat = std::exp(slope);
    rep.c_hat = std::exp(intercept);
  } else {
    // Degenerate chain (all residuals at the noise floor): no decay to fit.
    rep.chi_hat = 0.0;
    double worst = 0.0;
    for (const auto& [k, r] : rep.residuals) worst = std::max(worst, r);
    rep.c_hat = std::max(worst, 1e-300);
  }
  return rep;
}

}  // namespace tdlab
