#include "tdlab/mdp.hpp"

#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

#include "tdlab/errors.hpp"

namespace tdlab {

namespace {

constexpr double kRowSumTol = 1e-12;

void check_stochastic_rows(const Eigen::MatrixXd& rows, const char* what) {
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      const double v = rows(i, j);
      if (v < 0.0) {
        std::ostringstream msg;
        msg << what << ": negative entry " << v << " in row " << i;
        throw ConfigError(msg.str());
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTol) {
      std::ostringstream msg;
      msg << what << ": row " << i << " sums to " << sum << ", expected 1";
      throw ConfigError(msg.str());
    }
  }
}

}  // namespace

Mdp::Mdp(std::vector<Eigen::MatrixXd> kernels, Eigen::MatrixXd reward,
         double discount)
    : kernels_(std::move(kernels)), reward_(std::move(reward)),
      discount_(discount) {
  if (kernels_.empty()) throw ConfigError("Mdp: no actions");
  n_actions_ = static_cast<int>(kernels_.size());
  n_states_ = static_cast<int>(kernels_[0].rows());
  if (n_states_ <= 0) throw ConfigError("Mdp: no states");
  for (const auto& k : kernels_) {
    if (k.rows() != n_states_ || k.cols() != n_states_)
      throw ConfigError("Mdp: transition kernel shape mismatch");
    check_stochastic_rows(k, "Mdp transition");
  }
  if (reward_.rows() != n_states_ || reward_.cols() != n_actions_)
    throw ConfigError("Mdp: reward table shape mismatch");
  if (!(discount_ >= 0.0 && discount_ < 1.0))
    throw ConfigError("Mdp: discount must lie in [0, 1)");
}

Policy::Policy(Eigen::MatrixXd probs) : probs_(std::move(probs)) {
  if (probs_.rows() == 0 || probs_.cols() == 0)
    throw ConfigError("Policy: empty table");
  check_stochastic_rows(probs_, "Policy");
}

FeatureMap::FeatureMap(Eigen::MatrixXd x) : x_(std::move(x)) {
  if (x_.rows() == 0 || x_.cols() == 0)
    throw ConfigError("FeatureMap: empty matrix");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x_);
  const auto& sv = svd.singularValues();
  const double smallest = sv(sv.size() - 1);
  const double largest = sv(0);
  if (largest <= 0.0 || smallest <= 1e-10 * largest)
    throw AssumptionError(
        "FeatureMap: feature matrix is numerically rank deficient "
        "(Assumption 2)");
}

InducedDynamics induced_dynamics(const Mdp& mdp, const Policy& pi) {
  if (pi.n_states() != mdp.n_states() || pi.n_actions() != mdp.n_actions())
    throw ConfigError("induced_dynamics: policy shape mismatch");
  const int n = mdp.n_states();
  InducedDynamics out;
  out.p = Eigen::MatrixXd::Zero(n, n);
  out.r = Eigen::VectorXd::Zero(n);
  for (int a = 0; a < mdp.n_actions(); ++a) {
    for (int s = 0; s < n; ++s) {
      const double w = pi.prob(s, a);
      if (w == 0.0) continue;
      out.p.row(s) += w * mdp.kernel(a).row(s);
      out.r(s) += w * mdp.reward(s, a);
    }
  }
  return out;
}

namespace {

// Reachability over the support graph, forward or along reversed edges.
std::vector<bool> reachable(const Eigen::MatrixXd& p, bool reversed) {
  const int n = static_cast<int>(p.rows());
  std::vector<bool> seen(n, false);
  std::queue<int> frontier;
  seen[0] = true;
  frontier.push(0);
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v = 0; v < n; ++v) {
      const double edge = reversed ? p(v, u) : p(u, v);
      if (edge > 0.0 && !seen[v]) {
        seen[v] = true;
        frontier.push(v);
      }
    }
  }
  return seen;
}

}  // namespace

bool is_irreducible(const Eigen::MatrixXd& p) {
  const auto fwd = reachable(p, false);
  const auto bwd = reachable(p, true);
  for (std::size_t i = 0; i < fwd.size(); ++i)
    if (!fwd[i] || !bwd[i]) return false;
  return true;
}

int chain_period(const Eigen::MatrixXd& p) {
  // BFS levels from state 0; the period is the gcd of (level(u)+1-level(v))
  // over all support edges u->v.
  const int n = static_cast<int>(p.rows());
  std::vector<int> level(n, -1);
  std::queue<int> frontier;
  level[0] = 0;
  frontier.push(0);
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v = 0; v < n; ++v) {
      if (p(u, v) > 0.0 && level[v] < 0) {
        level[v] = level[u] + 1;
        frontier.push(v);
      }
    }
  }
  int g = 0;
  for (int u = 0; u < n; ++u) {
    if (level[u] < 0) continue;
    for (int v = 0; v < n; ++v) {
      if (p(u, v) > 0.0 && level[v] >= 0)
        g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
    }
  }
  return g == 0 ? 1 : g;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& p) {
  const int n = static_cast<int>(p.rows());
  if (p.cols() != n) throw ConfigError("stationary_distribution: P not square");
  check_stochastic_rows(p, "stationary_distribution");
  if (!is_irreducible(p))
    throw AssumptionError(
        "stationary_distribution: chain is reducible (Assumption 1)");
  if (n <= 64 && chain_period(p) != 1)
    throw AssumptionError(
        "stationary_distribution: chain is periodic (Assumption 1)");

  // (P^T - I) d = 0 plus a normalization row; overdetermined, solved by QR.
  Eigen::MatrixXd m(n + 1, n);
  m.topRows(n) = p.transpose() - Eigen::MatrixXd::Identity(n, n);
  m.bottomRows(1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  rhs(n) = 1.0;
  Eigen::VectorXd d = m.colPivHouseholderQr().solve(rhs);

  for (int i = 0; i < n; ++i) {
    if (d(i) < -1e-10)
      throw AssumptionError(
          "stationary_distribution: negative mass, solve failed");
    d(i) = std::max(d(i), 0.0);
  }
  d /= d.sum();
  const double residual = (d.transpose() * p - d.transpose())
                              .cwiseAbs()
                              .maxCoeff();
  if (residual > 1e-10)
    throw AssumptionError(
        "stationary_distribution: solution not stationary, chain likely "
        "violates Assumption 1");
  return d;
}

double importance_ratio(const Policy& pi, const Policy& mu, int s, int a) {
  const double num = pi.prob(s, a);
  const double den = mu.prob(s, a);
  if (den == 0.0) {
    if (num == 0.0) return 0.0;
    std::ostringstream msg;
    msg << "importance_ratio: mu(a=" << a << "|s=" << s
        << ") = 0 but pi > 0 (coverage violation, Assumption 1)";
    throw AssumptionError(msg.str());
  }
  return num / den;
}

Transition sample_step(const Mdp& mdp, const Policy& mu, const Policy& pi,
                       int s, Rng& rng) {
  if (s < 0 || s >= mdp.n_states())
    throw ConfigError("sample_step: state out of range");
  Transition tr;
  tr.s = s;
  tr.a = rng.categorical(mu.table().row(s), mdp.n_actions());
  tr.r = mdp.reward(s, tr.a);
  tr.s_next = rng.categorical(mdp.kernel(tr.a).row(s), mdp.n_states());
  tr.rho = importance_ratio(pi, mu, s, tr.a);
  return tr;
}

}  // namespace tdlab
