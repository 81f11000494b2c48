#include "tdlab/learners.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tdlab/errors.hpp"

namespace tdlab {

AlgoKind parse_algo(const std::string& name) {
  if (name == "td") return AlgoKind::Td;
  if (name == "gtd") return AlgoKind::Gtd;
  if (name == "gtd2") return AlgoKind::Gtd2;
  if (name == "tdc") return AlgoKind::Tdc;
  if (name == "attd") return AlgoKind::Attd;
  if (name == "attd_proj") return AlgoKind::AttdProjected;
  if (name == "htd") return AlgoKind::Htd;
  if (name == "vtrace") return AlgoKind::Vtrace;
  if (name == "tdrc") return AlgoKind::Tdrc;
  throw ConfigError("unknown algorithm '" + name + "'");
}

std::string algo_name(AlgoKind k) {
  switch (k) {
    case AlgoKind::Td: return "td";
    case AlgoKind::Gtd: return "gtd";
    case AlgoKind::Gtd2: return "gtd2";
    case AlgoKind::Tdc: return "tdc";
    case AlgoKind::Attd: return "attd";
    case AlgoKind::AttdProjected: return "attd_proj";
    case AlgoKind::Htd: return "htd";
    case AlgoKind::Vtrace: return "vtrace";
    case AlgoKind::Tdrc: return "tdrc";
  }
  throw std::logic_error("algo_name: bad kind");
}

bool algo_needs_window(AlgoKind k) {
  return k == AlgoKind::Attd || k == AlgoKind::AttdProjected;
}

bool algo_has_aux(AlgoKind k) {
  switch (k) {
    case AlgoKind::Gtd:
    case AlgoKind::Gtd2:
    case AlgoKind::Tdc:
    case AlgoKind::Htd:
    case AlgoKind::Tdrc:
      return true;
    default:
      return false;
  }
}

LearnerState make_state(AlgoKind algo, const Eigen::VectorXd& w_init,
                        double gamma, double divergence_guard) {
  LearnerState st;
  st.w = w_init;
  if (algo_has_aux(algo)) st.nu_aux = Eigen::VectorXd::Zero(w_init.size());
  st.gamma = gamma;
  st.divergence_guard = divergence_guard;
  return st;
}

void TransitionWindow::push(Eigen::VectorXd x, double rho) {
  entries_.push_back(Entry{std::move(x), rho});
}

void TransitionWindow::evict_before(std::int64_t t) {
  while (!entries_.empty() && begin_ < t) {
    entries_.pop_front();
    ++begin_;
  }
}

const TransitionWindow::Entry& TransitionWindow::at(std::int64_t time) const {
  if (time < begin_ || time >= end_time())
    throw std::logic_error("TransitionWindow: time " + std::to_string(time) +
                           " outside stored range [" + std::to_string(begin_) +
                           ", " + std::to_string(end_time()) + ")");
  return entries_[static_cast<std::size_t>(time - begin_)];
}

Eigen::VectorXd project_ball(const Eigen::VectorXd& v, double b) {
  if (!(b > 0.0)) throw ConfigError("project_ball: radius must be positive");
  const double n = v.norm();
  if (n <= b) return v;
  return v * (b / n);
}

namespace {

thread_local std::uint64_t g_attd_macs = 0;

void finish_step(LearnerState& state) {
  ++state.t;
  if (!(state.w.norm() <= state.divergence_guard)) state.diverged = true;
}

Eigen::VectorXd& require_aux(LearnerState& state, const char* who) {
  if (!state.nu_aux)
    throw std::logic_error(std::string(who) + ": secondary weight missing");
  return *state.nu_aux;
}

// delta = R + gamma x'^T w - x^T w, then w += (alpha rho_eff delta) x.
// Shared by TD and by the variants that must match TD bit for bit when
// their extra terms vanish. Returns delta.
double apply_td_core(LearnerState& state, const Transition& tr,
                     double alpha, double rho_eff, const FeatureMap& x) {
  const auto& xm = x.matrix();
  const double delta = tr.r + state.gamma * xm.row(tr.s_next).dot(state.w) -
                       xm.row(tr.s).dot(state.w);
  state.w += (alpha * rho_eff * delta) * xm.row(tr.s).transpose();
  return delta;
}

}  // namespace

void step_offpolicy_td(LearnerState& state, const Transition& tr, double alpha,
                       const FeatureMap& x) {
  if (state.diverged) return;
  apply_td_core(state, tr, alpha, tr.rho, x);
  finish_step(state);
}

void step_vtrace(LearnerState& state, const Transition& tr, double alpha,
                 const FeatureMap& x, double clip) {
  if (state.diverged) return;
  apply_td_core(state, tr, alpha, std::min(tr.rho, clip), x);
  finish_step(state);
}

void step_gtd(LearnerState& state, const Transition& tr, double alpha,
              const FeatureMap& x) {
  if (state.diverged) return;
  Eigen::VectorXd& nu = require_aux(state, "step_gtd");
  const auto& xm = x.matrix();
  const Eigen::VectorXd xt = xm.row(tr.s).transpose();
  const Eigen::VectorXd xn = xm.row(tr.s_next).transpose();
  const double delta =
      tr.r + state.gamma * xn.dot(state.w) - xt.dot(state.w);
  // w uses the pre-update nu (simultaneous-update reading).
  const double coef = alpha * tr.rho * xt.dot(nu);
  nu += alpha * (tr.rho * delta * xt - nu);
  state.w += coef * xt - (coef * state.gamma) * xn;
  finish_step(state);
}

void step_gtd2(LearnerState& state, const Transition& tr, double alpha,
               const FeatureMap& x) {
  if (state.diverged) return;
  Eigen::VectorXd& nu = require_aux(state, "step_gtd2");
  const auto& xm = x.matrix();
  const Eigen::VectorXd xt = xm.row(tr.s).transpose();
  const Eigen::VectorXd xn = xm.row(tr.s_next).transpose();
  const double delta =
      tr.r + state.gamma * xn.dot(state.w) - xt.dot(state.w);
  const double xtnu = xt.dot(nu);
  const double coef = alpha * tr.rho * xtnu;
  nu += alpha * (tr.rho * delta - xtnu) * xt;
  state.w += coef * xt - (coef * state.gamma) * xn;
  finish_step(state);
}

void step_tdc(LearnerState& state, const Transition& tr, double alpha,
              const FeatureMap& x) {
  if (state.diverged) return;
  Eigen::VectorXd& nu = require_aux(state, "step_tdc");
  const auto& xm = x.matrix();
  const Eigen::VectorXd xt = xm.row(tr.s).transpose();
  const Eigen::VectorXd xn = xm.row(tr.s_next).transpose();
  const double delta =
      tr.r + state.gamma * xn.dot(state.w) - xt.dot(state.w);
  const double xtnu = xt.dot(nu);
  nu += alpha * (tr.rho * delta - xtnu) * xt;
  state.w += (alpha * tr.rho * delta) * xt -
             (alpha * state.gamma * tr.rho * xtnu) * xn;
  finish_step(state);
}

void step_tdrc(LearnerState& state, const Transition& tr, double alpha,
               const FeatureMap& x, double reg) {
  if (state.diverged) return;
  Eigen::VectorXd& nu = require_aux(state, "step_tdrc");
  const auto& xm = x.matrix();
  const Eigen::VectorXd xt = xm.row(tr.s).transpose();
  const Eigen::VectorXd xn = xm.row(tr.s_next).transpose();
  const double delta =
      tr.r + state.gamma * xn.dot(state.w) - xt.dot(state.w);
  const double xtnu = xt.dot(nu);
  nu += alpha * (tr.rho * delta - xtnu) * xt - (alpha * reg) * nu;
  state.w += (alpha * tr.rho * delta) * xt -
             (alpha * state.gamma * tr.rho * xtnu) * xn;
  finish_step(state);
}

void step_htd(LearnerState& state, const Transition& tr, double alpha,
              const FeatureMap& x) {
  if (state.diverged) return;
  Eigen::VectorXd& nu = require_aux(state, "step_htd");
  const auto& xm = x.matrix();
  const double delta = apply_td_core(state, tr, alpha, tr.rho, x);
  const Eigen::VectorXd xt = xm.row(tr.s).transpose();
  const Eigen::VectorXd xn = xm.row(tr.s_next).transpose();
  const double xtnu = xt.dot(nu);
  // Correction vanishes on-policy, where the core above is exactly TD.
  const double corr = alpha * (1.0 - tr.rho) * xtnu;
  state.w += corr * xt - (corr * state.gamma) * xn;
  nu += alpha * (tr.rho * delta - xtnu) * xt;
  finish_step(state);
}

void step_attd(LearnerState& state, const TransitionWindow& window,
               const Transition& tr_now, const Transition& tr_ahead,
               double alpha, const FeatureMap& x) {
  (void)tr_ahead;  // redundant with the window tail; kept for the driver api
  if (state.diverged) return;
  const std::int64_t t = state.t;
  if (window.begin_time() > t || window.end_time() < t + 2)
    throw std::logic_error("step_attd: window does not cover the update time");
  const std::int64_t ahead = window.end_time() - 2;

  const Eigen::VectorXd& x_t = window.feature_at(t);
  const Eigen::VectorXd& x_t1 = window.feature_at(t + 1);
  const double rho_t = window.rho_at(t);
  const Eigen::VectorXd& x_a = window.feature_at(ahead);
  const Eigen::VectorXd& x_a1 = window.feature_at(ahead + 1);
  const double rho_a = window.rho_at(ahead);

  const auto k = static_cast<std::uint64_t>(x.dim());
  const double delta =
      tr_now.r + state.gamma * x_t1.dot(state.w) - x_t.dot(state.w);
  g_attd_macs += 2 * k;
  // Right-to-left: scalar x_a^T (rho_t delta x_t) first, then two axpys.
  const double inner = x_a.dot(x_t);
  g_attd_macs += k;
  const double coef = alpha * rho_a * rho_t * delta * inner;
  g_attd_macs += 4;
  state.w += coef * x_a;
  state.w -= (coef * state.gamma) * x_a1;
  g_attd_macs += 2 * k + 1;

  ++state.t;
  const double norm = state.w.norm();
  g_attd_macs += k;
  if (!(norm <= state.divergence_guard)) state.diverged = true;
}

void step_projected_attd(LearnerState& state, const TransitionWindow& window,
                         const Transition& tr_now, const Transition& tr_ahead,
                         double alpha, const FeatureMap& x, double b) {
  if (!(b > 0.0))
    throw ConfigError("step_projected_attd: radius must be positive");
  if (state.diverged) return;
  step_attd(state, window, tr_now, tr_ahead, alpha, x);
  const double n = state.w.norm();
  if (n > b) state.w *= b / n;
}

std::uint64_t attd_mac_count() { return g_attd_macs; }
void reset_attd_mac_count() { g_attd_macs = 0; }

}  // namespace tdlab
