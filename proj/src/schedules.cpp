#include "tdlab/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "tdlab/errors.hpp"

namespace tdlab {

LrSchedule::LrSchedule(double c_alpha, double nu) : c_alpha_(c_alpha), nu_(nu) {
  if (!(c_alpha > 0.0))
    throw ConfigError("LrSchedule: c_alpha must be positive (Assumption 3)");
  if (!(nu > 2.0 / 3.0 && nu <= 1.0))
    throw ConfigError("LrSchedule: nu must lie in (2/3, 1] (Assumption 3)");
}

double LrSchedule::at(double t) const {
  if (t < 0.0) throw ConfigError("LrSchedule: negative t");
  return c_alpha_ * std::pow(t + 1.0, -nu_);
}

GapFn::GapFn(Kind kind, std::string name, double c,
             std::function<double(double)> h, bool h_diverges)
    : kind_(kind), name_(std::move(name)), c_(c), h_(std::move(h)),
      h_diverges_(h_diverges) {}

GapFn GapFn::constant(std::int64_t c) {
  if (c < 0) throw ConfigError("GapFn: constant gap must be >= 0");
  std::ostringstream name;
  name << "const:" << c;
  return GapFn(Kind::Constant, name.str(), static_cast<double>(c), {}, false);
}

GapFn GapFn::log_scaled(double c) {
  if (!(c >= 0.0)) throw ConfigError("GapFn: log gap scale must be >= 0");
  std::ostringstream name;
  name << "log:" << c;
  return GapFn(Kind::LogScaled, name.str(), c, {}, false);
}

GapFn GapFn::ln_squared() { return GapFn(Kind::LnSquared, "ln2", 0.0, {}, false); }

GapFn GapFn::h_times_ln(std::string name, std::function<double(double)> h,
                        bool h_diverges) {
  if (!h) throw ConfigError("GapFn: missing h");
  return GapFn(Kind::HTimesLn, std::move(name), 0.0, std::move(h), h_diverges);
}

std::int64_t GapFn::value_at(double t) const {
  if (t < 0.0) throw ConfigError("GapFn: negative t");
  const long double lt = logl(static_cast<long double>(t) + 1.0L);
  long double v = 0.0L;
  switch (kind_) {
    case Kind::Constant:
      v = static_cast<long double>(c_);
      break;
    case Kind::LogScaled:
      v = static_cast<long double>(c_) * lt;
      break;
    case Kind::LnSquared:
      v = lt * lt;
      break;
    case Kind::HTimesLn:
      v = static_cast<long double>(h_(t)) * lt;
      break;
  }
  if (v < 0.0L) throw std::logic_error("GapFn: negative gap value");
  return static_cast<std::int64_t>(floorl(v));
}

std::int64_t GapFn::operator()(double t) {
  const std::int64_t f = value_at(t);
  if (memo_t_ >= 0.0) {
    const bool order_ok =
        (t >= memo_t_) ? (f >= memo_f_) : (f <= memo_f_);
    if (!order_ok)
      throw std::logic_error("GapFn: gap function decreased between " +
                             std::to_string(memo_t_) + " and " +
                             std::to_string(t));
  }
  memo_t_ = t;
  memo_f_ = f;
  return f;
}

bool GapFn::analytic_summability() const {
  // Appendix sufficient condition: f = floor(h(t) ln(t+1)) with h
  // nondecreasing and diverging. ln2 is the h(t) = ln(t+1) special case.
  return kind_ == Kind::LnSquared || (kind_ == Kind::HTimesLn && h_diverges_);
}

GapFn parse_gap(const std::string& spec) {
  if (spec == "ln2") return GapFn::ln_squared();
  const auto colon = spec.find(':');
  if (colon != std::string::npos) {
    const std::string head = spec.substr(0, colon);
    const std::string tail = spec.substr(colon + 1);
    try {
      if (head == "const") return GapFn::constant(std::stoll(tail));
      if (head == "log") return GapFn::log_scaled(std::stod(tail));
    } catch (const std::logic_error&) {
      throw ConfigError("parse_gap: bad numeric parameter in '" + spec + "'");
    }
  }
  throw ConfigError("parse_gap: unknown gap spec '" + spec +
                    "' (expected ln2 | log:<c> | const:<c>)");
}

GapCheckReport check_gap_assumption(const GapFn& gap, const LrSchedule& sched,
                                    double tau, double c_tau,
                                    const std::vector<double>& chi_grid,
                                    std::int64_t horizon) {
  const double tau_cap = (3.0 * sched.nu() - 2.0) / (2.0 * sched.nu());
  if (!(tau > 0.0 && tau < tau_cap)) {
    std::ostringstream msg;
    msg << "check_gap_assumption: tau = " << tau
        << " outside (0, " << tau_cap << ") required by Assumption 4";
    throw ConfigError(msg.str());
  }
  if (horizon < 10000)
    throw ConfigError("check_gap_assumption: horizon must be >= 10^4");
  if (horizon > 100000000)
    throw ConfigError("check_gap_assumption: horizon too large (> 1e8)");

  GapCheckReport rep;
  rep.analytic_applicable = gap.analytic_summability();

  rep.monotone = true;
  rep.growth_bound = true;
  std::vector<double> tail_sums(chi_grid.size(), 0.0);
  std::vector<double> full_sums(chi_grid.size(), 0.0);
  const std::int64_t tail_start = horizon / 10;

  std::int64_t prev_f = -1;
  for (std::int64_t t = 0; t <= horizon; ++t) {
    const std::int64_t f = gap.value_at(static_cast<double>(t));
    if (f < prev_f) rep.monotone = false;
    prev_f = f;
    if (rep.growth_bound &&
        static_cast<double>(f) >
            c_tau * std::pow(sched.at(static_cast<double>(t)), -tau)) {
      rep.growth_bound = false;
      rep.first_growth_violation = static_cast<double>(t);
    }
    for (std::size_t i = 0; i < chi_grid.size(); ++i) {
      const double term =
          f == 0 ? 1.0 : std::exp(static_cast<double>(f) * std::log(chi_grid[i]));
      full_sums[i] += term;
      if (t >= tail_start) tail_sums[i] += term;
    }
  }

  rep.summable_all_chi = true;
  for (std::size_t i = 0; i < chi_grid.size(); ++i) {
    ChiVerdict v;
    v.chi = chi_grid[i];
    v.partial_sum = full_sums[i];
    v.tail_increment = tail_sums[i];
    if (rep.analytic_applicable)
      v.verdict = ChiVerdict::Kind::AnalyticPass;
    else if (v.tail_increment < 1e-6)
      v.verdict = ChiVerdict::Kind::TailPass;
    else if (v.tail_increment < 1e-2)
      v.verdict = ChiVerdict::Kind::Slow;
    else
      v.verdict = ChiVerdict::Kind::Fail;
    rep.summable_all_chi = rep.summable_all_chi && v.pass();
    rep.chi_verdicts.push_back(v);
  }

  rep.pass = rep.monotone && rep.growth_bound && rep.summable_all_chi;
  return rep;
}

namespace {

// Partial sums of alpha_t over integer ranges whose endpoints can exceed
// 2^53. Exact summation below kExactLimit, Euler-Maclaurin beyond it.
class AlphaPartialSums {
 public:
  explicit AlphaPartialSums(const LrSchedule& sched) : sched_(sched) {
    prefix_.resize(kExactLimit + 1, 0.0);
    long double acc = 0.0L;
    for (std::int64_t u = 1; u <= kExactLimit; ++u) {
      acc += static_cast<long double>(sched_.c_alpha()) *
             powl(static_cast<long double>(u), -static_cast<long double>(sched_.nu()));
      prefix_[static_cast<std::size_t>(u)] = static_cast<double>(acc);
    }
  }

  // sum_{t=a}^{b-1} alpha_t, i.e. c_alpha * sum_{u=a+1}^{b} u^{-nu}.
  double between(double a, double b) const {
    if (b <= a) return 0.0;
    if (b <= static_cast<double>(kExactLimit))
      return prefix_[static_cast<std::size_t>(b)] -
             prefix_[static_cast<std::size_t>(a)];
    if (a < static_cast<double>(kExactLimit))
      return prefix_[kExactLimit] - prefix_[static_cast<std::size_t>(a)] +
             euler_maclaurin(static_cast<double>(kExactLimit) + 1.0, b);
    return euler_maclaurin(a + 1.0, b);
  }

 private:
  static constexpr std::int64_t kExactLimit = 100000;

  // sum_{u=p}^{q} u^{-nu} for large p, with two correction terms.
  double euler_maclaurin(double p, double q) const {
    const double nu = sched_.nu();
    double integral;
    if (nu == 1.0)
      integral = std::log(q) - std::log(p);
    else
      integral = (std::pow(q, 1.0 - nu) - std::pow(p, 1.0 - nu)) / (1.0 - nu);
    const double boundary = 0.5 * (std::pow(p, -nu) + std::pow(q, -nu));
    const double deriv = (-nu) * (std::pow(q, -nu - 1.0) - std::pow(p, -nu - 1.0)) / 12.0;
    return sched_.c_alpha() * (integral + boundary + deriv);
  }

  const LrSchedule& sched_;
  std::vector<double> prefix_;
};

}  // namespace

SkeletonSchedule make_skeleton(const LrSchedule& sched, double tau, double eta,
                               int m_max) {
  const double nu = sched.nu();
  if (!(tau > 0.0 && tau < 1.0))
    throw ConfigError("make_skeleton: tau must lie in (0, 1)");
  const double eta_lo = 1.0 / (2.0 * (1.0 - tau));
  const double eta_hi = nu / (2.0 - nu);
  if (!(eta_lo < eta_hi)) {
    std::ostringstream msg;
    msg << "make_skeleton: empty eta interval (" << eta_lo << ", " << eta_hi
        << ") for nu = " << nu << ", tau = " << tau;
    throw ConfigError(msg.str());
  }
  if (!(eta > eta_lo && eta < eta_hi)) {
    std::ostringstream msg;
    msg << "make_skeleton: eta = " << eta << " outside (" << eta_lo << ", "
        << eta_hi << ")";
    throw ConfigError(msg.str());
  }
  if (m_max < 0 || m_max > 10000)
    throw ConfigError("make_skeleton: m_max must lie in [0, 10^4]");

  const AlphaPartialSums sums(sched);
  SkeletonSchedule sk;
  sk.eta = eta;
  sk.t_marks.push_back(0.0);

  const double scale = 16.0 * std::max(sched.c_alpha(), 1.0) / (eta + 1.0);
  constexpr double kMarkLimit = 1e290;

  for (int m = 0; m <= m_max; ++m) {
    const double t_m = sk.t_marks.back();
    const double big_t = scale * std::pow(static_cast<double>(m) + 1.0, -eta);
    sk.big_t.push_back(big_t);

    // Smallest integer k with sum_{t=t_m}^{k-1} alpha_t >= T_m. Exact for
    // marks below 2^53; beyond that doubles cannot separate adjacent
    // integers and the bisection stops at resolution.
    double hi = std::max(t_m * 2.0, t_m + 1.0);
    while (sums.between(t_m, hi) < big_t) {
      hi *= 2.0;
      if (hi > kMarkLimit) break;
    }
    if (hi > kMarkLimit) {
      sk.truncated = true;
      sk.big_t.pop_back();
      break;
    }
    double lo = t_m;  // invariant: between(t_m, lo) < big_t <= between(t_m, hi)
    while (hi - lo > 1.0) {
      const double mid = std::floor(lo + (hi - lo) / 2.0);
      if (mid <= lo || mid >= hi) break;
      if (sums.between(t_m, mid) >= big_t)
        hi = mid;
      else
        lo = mid;
    }
    const double t_next = hi;
    const double bar = sums.between(t_m, t_next);
    sk.t_marks.push_back(t_next);
    sk.alpha_bars.push_back(bar);
    sk.computed_m = m;

    // Lemma checks, with a hair of slack for the large-range evaluation.
    if (sched.at(t_m) > big_t * big_t * (1.0 + 1e-9))
      sk.lemma1_violations.push_back(m);
    if (bar > 2.0 * big_t * (1.0 + 1e-9)) sk.lemma2_violations.push_back(m);
  }
  return sk;
}

}  // namespace tdlab
