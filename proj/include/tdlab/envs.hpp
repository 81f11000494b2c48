#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "tdlab/mdp.hpp"

namespace tdlab {

/// A named benchmark: MDP, target/behavior policies, features, and the
/// canonical initial weights. Construction is pure; instances are immutable
/// and shareable.
struct ProblemInstance {
  Mdp mdp;
  Policy pi;
  Policy mu;
  FeatureMap features;
  std::string name;
  Eigen::VectorXd w_init;
  double canonical_gamma;
};

/// Boyan's 13-state chain with 4-dimensional interpolating features,
/// wrapped as a continuing two-action MDP with identical action effects
/// and pi = mu (on-policy).
ProblemInstance make_boyan();

/// Baird's 7-state star counterexample: behavior takes the broadcast action
/// w.p. 6/7 and the focal action w.p. 1/7, the target always takes the focal
/// action, rewards are zero, gamma = 0.99, 8-dimensional overparameterized
/// features, and the canonical non-zero initial weights.
ProblemInstance make_baird();

/// Seeded random instance: Dirichlet transition rows, random full-rank
/// features, epsilon-mixed policies guaranteeing coverage. Resamples until
/// the assumption checks pass (at most 100 attempts).
ProblemInstance make_random(std::uint64_t seed, int n_states, int n_actions,
                            int k, double gamma);

/// "boyan" | "baird" | "random:<seed>:<nS>:<nA>:<K>:<gamma>"
ProblemInstance make_instance(const std::string& env_spec);

}  // namespace tdlab
