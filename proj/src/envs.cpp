#include "tdlab/envs.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "tdlab/errors.hpp"
#include "tdlab/oracle.hpp"
#include "tdlab/rng.hpp"

namespace tdlab {

namespace {

void verify_instance(const ProblemInstance& inst, bool require_nonsingular) {
  const AssumptionReport rep =
      check_assumptions(inst.mdp, inst.pi, inst.mu, inst.features);
  const bool ok = rep.chain_ok() && rep.feature_rank &&
                  rep.fixed_point_solvable &&
                  (!require_nonsingular || (rep.a_nonsingular && rep.beta > 0));
  if (!ok)
    throw AssumptionError("instance '" + inst.name +
                          "' fails the assumption checks");
}

}  // namespace

ProblemInstance make_boyan() {
  constexpr int n = 13;       // states 0..12, 12 is the start of a sweep
  constexpr double gamma = 0.95;

  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  for (int s = 2; s < n; ++s) {
    p(s, s - 1) = 0.5;
    p(s, s - 2) = 0.5;
    r(s) = -3.0;
  }
  p(1, 0) = 1.0;
  r(1) = -2.0;
  p(0, 12) = 1.0;  // restart; makes the chain continuing
  r(0) = 0.0;

  // Two-action wrapper with identical effects so the instance fits the
  // uniform MDP shape; the chain itself is action-free.
  std::vector<Eigen::MatrixXd> kernels{p, p};
  Eigen::MatrixXd reward(n, 2);
  reward.col(0) = r;
  reward.col(1) = r;
  Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(n, 2, 0.5);

  // Interpolating hat features anchored at states 12, 8, 4, 0.
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, 4);
  for (int s = 0; s < n; ++s)
    for (int j = 0; j < 4; ++j) {
      const double anchor = 12.0 - 4.0 * j;
      x(s, j) = std::max(0.0, 1.0 - std::abs(s - anchor) / 4.0);
    }

  ProblemInstance inst{Mdp(std::move(kernels), std::move(reward), gamma),
                       Policy(uniform),
                       Policy(uniform),
                       FeatureMap(std::move(x)),
                       "boyan",
                       Eigen::VectorXd::Zero(4),
                       gamma};
  verify_instance(inst, /*require_nonsingular=*/true);
  return inst;
}

ProblemInstance make_baird() {
  constexpr int n = 7;  // state 6 is the focal (solid-action) state
  constexpr double gamma = 0.99;

  Eigen::MatrixXd dashed = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd solid = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < n; ++s) {
    for (int j = 0; j < 6; ++j) dashed(s, j) = 1.0 / 6.0;
    solid(s, 6) = 1.0;
  }
  std::vector<Eigen::MatrixXd> kernels{dashed, solid};
  Eigen::MatrixXd reward = Eigen::MatrixXd::Zero(n, 2);

  Eigen::MatrixXd mu(n, 2);
  mu.col(0).setConstant(6.0 / 7.0);
  mu.col(1).setConstant(1.0 / 7.0);
  Eigen::MatrixXd pi(n, 2);
  pi.col(0).setZero();
  pi.col(1).setOnes();

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, 8);
  for (int s = 0; s < 6; ++s) {
    x(s, s) = 2.0;
    x(s, 7) = 1.0;
  }
  x(6, 6) = 1.0;
  x(6, 7) = 2.0;

  Eigen::VectorXd w_init = Eigen::VectorXd::Ones(8);
  w_init(6) = 10.0;

  ProblemInstance inst{Mdp(std::move(kernels), std::move(reward), gamma),
                       Policy(std::move(pi)),
                       Policy(std::move(mu)),
                       FeatureMap(std::move(x)),
                       "baird",
                       std::move(w_init),
                       gamma};
  // The overparameterized features make A singular by construction; the
  // fixed point is still unique in the feature span (b = 0, w* = 0).
  verify_instance(inst, /*require_nonsingular=*/false);
  return inst;
}

namespace {

Eigen::VectorXd dirichlet_row(int n, Rng& rng) {
  Eigen::VectorXd row(n);
  for (int i = 0; i < n; ++i)
    row(i) = -std::log(1.0 - rng.next_double());
  return row / row.sum();
}

double normal_draw(Rng& rng) {
  // Box-Muller; keeps the generator fully pinned across toolchains.
  const double u1 = 1.0 - rng.next_double();
  const double u2 = rng.next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

ProblemInstance make_random(std::uint64_t seed, int n_states, int n_actions,
                            int k, double gamma) {
  if (n_states < 1 || n_actions < 1)
    throw ConfigError("make_random: need at least one state and action");
  if (k < 1 || k > n_states)
    throw ConfigError("make_random: feature dim must lie in [1, n_states]");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw ConfigError("make_random: gamma must lie in [0, 1)");

  Rng rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    Rng draw = rng.split("attempt:" + std::to_string(attempt));

    std::vector<Eigen::MatrixXd> kernels;
    for (int a = 0; a < n_actions; ++a) {
      Eigen::MatrixXd kern(n_states, n_states);
      for (int s = 0; s < n_states; ++s)
        kern.row(s) = dirichlet_row(n_states, draw).transpose();
      kernels.push_back(std::move(kern));
    }
    Eigen::MatrixXd reward(n_states, n_actions);
    for (int s = 0; s < n_states; ++s)
      for (int a = 0; a < n_actions; ++a)
        reward(s, a) = 2.0 * draw.next_double() - 1.0;

    // Epsilon-mix toward uniform so mu covers pi everywhere.
    auto mixed_policy = [&](double eps) {
      Eigen::MatrixXd probs(n_states, n_actions);
      for (int s = 0; s < n_states; ++s)
        probs.row(s) =
            ((1.0 - eps) * dirichlet_row(n_actions, draw) +
             eps * Eigen::VectorXd::Constant(n_actions, 1.0 / n_actions))
                .transpose();
      return Policy(probs);
    };
    Policy pi = mixed_policy(0.1);
    Policy mu = mixed_policy(0.1);

    Eigen::MatrixXd x(n_states, k);
    for (int s = 0; s < n_states; ++s)
      for (int j = 0; j < k; ++j) x(s, j) = normal_draw(draw);

    try {
      std::ostringstream name;
      name << "random:" << seed << ":" << n_states << ":" << n_actions << ":"
           << k << ":" << gamma;
      ProblemInstance inst{Mdp(std::move(kernels), std::move(reward), gamma),
                           std::move(pi),
                           std::move(mu),
                           FeatureMap(std::move(x)),
                           name.str(),
                           Eigen::VectorXd::Zero(k),
                           gamma};
      verify_instance(inst, /*require_nonsingular=*/true);
      return inst;
    } catch (const AssumptionError&) {
      continue;  // resample
    }
  }
  throw AssumptionError(
      "make_random: no admissible instance after 100 attempts");
}

ProblemInstance make_instance(const std::string& env_spec) {
  if (env_spec == "boyan") return make_boyan();
  if (env_spec == "baird") return make_baird();
  if (env_spec.rfind("random:", 0) == 0) {
    std::istringstream in(env_spec.substr(7));
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(in, part, ':')) parts.push_back(part);
    if (parts.size() != 5)
      throw ConfigError("make_instance: expected random:<seed>:<nS>:<nA>:<K>:<gamma>");
    try {
      return make_random(std::stoull(parts[0]), std::stoi(parts[1]),
                         std::stoi(parts[2]), std::stoi(parts[3]),
                         std::stod(parts[4]));
    } catch (const std::logic_error&) {
      throw ConfigError("make_instance: bad numeric field in '" + env_spec +
                        "'");
    }
  }
  throw ConfigError("make_instance: unknown environment '" + env_spec + "'");
}

}  // namespace tdlab
