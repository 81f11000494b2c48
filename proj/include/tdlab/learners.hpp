#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>

#include "tdlab/mdp.hpp"

namespace tdlab {

enum class AlgoKind { Td, Gtd, Gtd2, Tdc, Attd, AttdProjected, Htd, Vtrace, Tdrc };

AlgoKind parse_algo(const std::string& name);
std::string algo_name(AlgoKind kind);
bool algo_needs_window(AlgoKind kind);
bool algo_has_aux(AlgoKind kind);

/// Weights plus bookkeeping for one run. `nu_aux` is the secondary weight of
/// the gradient-TD family; `diverged` latches once ||w|| crosses the guard
/// and freezes the weights so the run can keep recording.
struct LearnerState {
  Eigen::VectorXd w;
  std::optional<Eigen::VectorXd> nu_aux;
  std::int64_t t = 0;
  bool diverged = false;
  double gamma = 0.0;
  double divergence_guard = 1e8;
};

LearnerState make_state(AlgoKind algo, const Eigen::VectorXd& w_init,
                        double gamma, double divergence_guard = 1e8);

/// Sliding memory of (feature, rho) pairs bridging an update at time t to the
/// sample at time t + f(t) + 1. Entries are pushed in time order; the driver
/// evicts everything older than the pending update. Requests outside the
/// stored range are driver bugs and raise std::logic_error.
class TransitionWindow {
 public:
  struct Entry {
    Eigen::VectorXd x;
    double rho;
  };

  void push(Eigen::VectorXd x, double rho);
  void evict_before(std::int64_t t);

  std::int64_t begin_time() const { return begin_; }
  /// One past the newest stored time.
  std::int64_t end_time() const {
    return begin_ + static_cast<std::int64_t>(entries_.size());
  }
  std::size_t size() const { return entries_.size(); }

  const Entry& at(std::int64_t time) const;
  const Eigen::VectorXd& feature_at(std::int64_t time) const {
    return at(time).x;
  }
  double rho_at(std::int64_t time) const { return at(time).rho; }

 private:
  std::deque<Entry> entries_;
  std::int64_t begin_ = 0;
};

/// Euclidean projection onto the ball of radius b (b = +inf is the identity).
Eigen::VectorXd project_ball(const Eigen::VectorXd& v, double b);

// --- per-step update rules ------------------------------------------------
//
// All rules consume one Transition (plus, for the gap-based rule, the window
// and the look-ahead sample), one step size, and the feature map. They
// advance state.t and trip the divergence guard; a tripped state is frozen.

/// w += alpha rho (R + gamma x'^T w - x^T w) x
void step_offpolicy_td(LearnerState& state, const Transition& tr, double alpha,
                       const FeatureMap& x);

/// nu += alpha (rho delta x - nu); w += alpha rho (x - gamma x') x^T nu,
/// with the pre-update nu in the w step.
void step_gtd(LearnerState& state, const Transition& tr, double alpha,
              const FeatureMap& x);

void step_gtd2(LearnerState& state, const Transition& tr, double alpha,
               const FeatureMap& x);

void step_tdc(LearnerState& state, const Transition& tr, double alpha,
              const FeatureMap& x);

/// Hybrid rule: the TD step plus a gradient correction scaled by (1 - rho),
/// so on-policy data reproduces the TD step exactly.
void step_htd(LearnerState& state, const Transition& tr, double alpha,
              const FeatureMap& x);

/// TD with the importance ratio clipped at `clip` (default 1).
void step_vtrace(LearnerState& state, const Transition& tr, double alpha,
                 const FeatureMap& x, double clip = 1.0);

/// TDC with an L2-regularized secondary weight; reg = 1 is the published
/// default, reg = 0 recovers TDC exactly.
void step_tdrc(LearnerState& state, const Transition& tr, double alpha,
               const FeatureMap& x, double reg = 1.0);

/// Gap-separated single-sample rule:
///   delta_t = R_{t+1} + gamma x_{t+1}^T w - x_t^T w
///   w += alpha rho_{t+f} (x_{t+f} - gamma x_{t+f+1}) x_{t+f}^T rho_t delta_t x_t
/// evaluated right-to-left so the cost stays O(K). The window must hold
/// times [state.t, state.t + f + 1]; tr_now supplies R_{t+1}, tr_ahead is the
/// freshly collected sample at t + f.
void step_attd(LearnerState& state, const TransitionWindow& window,
               const Transition& tr_now, const Transition& tr_ahead,
               double alpha, const FeatureMap& x);

/// step_attd followed by projection onto the radius-b ball.
void step_projected_attd(LearnerState& state, const TransitionWindow& window,
                         const Transition& tr_now, const Transition& tr_ahead,
                         double alpha, const FeatureMap& x, double b);

// --- cost accounting --------------------------------------------------------

/// Multiply-accumulate count of the gap-based rule on this thread. The
/// counter is incremented alongside every vector operation step_attd
/// performs, so a super-linear implementation would show up directly.
std::uint64_t attd_mac_count();
void reset_attd_mac_count();

}  // namespace tdlab
