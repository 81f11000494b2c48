#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace tdlab {

/// Polynomially decaying learning rate alpha_t = c_alpha / (t+1)^nu,
/// nu in (2/3, 1]. The range is enforced at construction.
class LrSchedule {
 public:
  LrSchedule(double c_alpha, double nu);

  double at(double t) const;
  double operator()(double t) const { return at(t); }
  double c_alpha() const { return c_alpha_; }
  double nu() const { return nu_; }

 private:
  double c_alpha_;
  double nu_;
};

/// Integer gap schedule f(t) separating the two samples of each update.
///
/// Kinds: constant(c), log(c) = floor(c ln(t+1)), ln2 = floor(ln^2(t+1)),
/// and floor(h(t) ln(t+1)) for a named nondecreasing h. Guarded evaluation
/// memoizes the last (t, f) pair and rejects any observed decrease; the memo
/// makes a GapFn single-threaded per run.
class GapFn {
 public:
  enum class Kind { Constant, LogScaled, LnSquared, HTimesLn };

  static GapFn constant(std::int64_t c);
  static GapFn log_scaled(double c);
  static GapFn ln_squared();
  /// `h_diverges`: caller asserts h is nondecreasing with h(t) -> infinity,
  /// which makes the summability condition provable rather than sampled.
  static GapFn h_times_ln(std::string name, std::function<double(double)> h,
                          bool h_diverges);

  /// Guarded evaluation (updates the monotonicity memo).
  std::int64_t operator()(double t);

  /// Pure evaluation, no memo. Used by checkers that probe out of order.
  std::int64_t value_at(double t) const;

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  bool analytic_summability() const;

 private:
  GapFn(Kind kind, std::string name, double c,
        std::function<double(double)> h, bool h_diverges);

  Kind kind_;
  std::string name_;
  double c_ = 0.0;
  std::function<double(double)> h_;
  bool h_diverges_ = false;
  double memo_t_ = -1.0;
  std::int64_t memo_f_ = -1;
};

/// Parse "const:<c>" | "log:<c>" | "ln2" into a GapFn.
GapFn parse_gap(const std::string& spec);

/// Verdict for one chi of the summability condition sum_t chi^f(t) < inf.
struct ChiVerdict {
  double chi = 0.0;
  double partial_sum = 0.0;
  double tail_increment = 0.0;  // sum over the last decade [horizon/10, horizon]
  enum class Kind { AnalyticPass, TailPass, Slow, Fail } verdict = Kind::Fail;

  bool pass() const {
    return verdict == Kind::AnalyticPass || verdict == Kind::TailPass;
  }
};

/// Gap-function admissibility report. The per-chi tail heuristic is a
/// finite-horizon proxy for an infinite-sum property and is labeled as such;
/// only the analytic route constitutes a proof.
struct GapCheckReport {
  bool monotone = false;
  bool growth_bound = false;     // f(t) <= c_tau * alpha_t^{-tau} on the grid
  double first_growth_violation = -1.0;
  bool analytic_applicable = false;
  std::vector<ChiVerdict> chi_verdicts;
  bool summable_all_chi = false;
  bool pass = false;
};

/// Check Assumption 4 style conditions for `gap` against `sched` on
/// [0, horizon]. tau must lie in (0, (3 nu - 2) / (2 nu)); horizon >= 10^4.
GapCheckReport check_gap_assumption(const GapFn& gap, const LrSchedule& sched,
                                    double tau, double c_tau,
                                    const std::vector<double>& chi_grid,
                                    std::int64_t horizon);

/// Interval skeleton {T_m}, {t_m}, {alpha_bar_m} with per-interval
/// verification of the two step-size lemmas.
///
/// T_m = 16 max(c_alpha, 1) / ((eta+1)(m+1)^eta); t_0 = 0 and t_{m+1} is the
/// smallest k with sum_{t=t_m}^{k-1} alpha_t >= T_m. Marks grow roughly like
/// exp(sum T_m), so they are stored as doubles and partial sums switch to an
/// Euler-Maclaurin evaluation once ranges leave the exact-summation window.
struct SkeletonSchedule {
  double eta = 0.0;
  std::vector<double> big_t;       // T_m, m = 0..computed_m
  std::vector<double> t_marks;     // t_m, m = 0..computed_m+1 (t_0 = 0)
  std::vector<double> alpha_bars;  // alpha_bar_m, m = 0..computed_m
  int computed_m = -1;             // last fully computed interval
  bool truncated = false;          // stopped early: t_m would overflow doubles
  std::vector<int> lemma1_violations;  // m with alpha_{t_m} > T_m^2
  std::vector<int> lemma2_violations;  // m with alpha_bar_m > 2 T_m

  bool lemmas_hold() const {
    return lemma1_violations.empty() && lemma2_violations.empty();
  }
};

/// Build and verify the skeleton for m = 0..m_max (m_max <= 10^4).
/// eta must lie in (1/(2(1-tau)), nu/(2-nu)); an empty interval for the
/// given (nu, tau) raises ConfigError.
SkeletonSchedule make_skeleton(const LrSchedule& sched, double tau, double eta,
                               int m_max);

}  // namespace tdlab
