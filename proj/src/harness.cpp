#include "tdlab/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "tdlab/errors.hpp"
#include "tdlab/rng.hpp"

namespace tdlab {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& key) {
  if (s == "inf" || s == "+inf")
    return std::numeric_limits<double>::infinity();
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("config: bad numeric value '" + s + "' for " + key);
  }
}

long long parse_int(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("config: bad integer value '" + s + "' for " + key);
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += fmt_double(v[i]);
  }
  return out;
}

void for_each_parallel(std::size_t n, bool serial,
                       const std::function<void(std::size_t)>& fn) {
  unsigned workers = serial ? 1 : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (!failed.load(std::memory_order_relaxed)) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig cfg;
  for (int e = -20; e <= -1; ++e) cfg.lr_grid.push_back(std::ldexp(1.0, e));
  cfg.lr_grid.push_back(1.0);
  return cfg;
}

ExperimentConfig ExperimentConfig::from_string(const std::string& text) {
  ExperimentConfig cfg = defaults();
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));

    if (key == "env") cfg.env = val;
    else if (key == "algo") cfg.algo = val;
    else if (key == "lr_grid") {
      cfg.lr_grid.clear();
      for (const auto& item : split(val, ','))
        cfg.lr_grid.push_back(parse_double(trim(item), key));
    } else if (key == "n_steps") cfg.n_steps = static_cast<int>(parse_int(val, key));
    else if (key == "n_seeds") cfg.n_seeds = static_cast<int>(parse_int(val, key));
    else if (key == "gap") cfg.gap = val;
    else if (key == "nu") cfg.nu = parse_double(val, key);
    else if (key == "tau") cfg.tau = parse_double(val, key);
    else if (key == "c_tau") cfg.c_tau = parse_double(val, key);
    else if (key == "eta") cfg.eta = parse_double(val, key);
    else if (key == "chi_grid") {
      cfg.chi_grid.clear();
      for (const auto& item : split(val, ','))
        cfg.chi_grid.push_back(parse_double(trim(item), key));
    } else if (key == "horizon") cfg.horizon = parse_int(val, key);
    else if (key == "m_max") cfg.m_max = static_cast<int>(parse_int(val, key));
    else if (key == "projection_b") cfg.projection_b = parse_double(val, key);
    else if (key == "divergence_guard") cfg.divergence_guard = parse_double(val, key);
    else if (key == "master_seed") cfg.master_seed =
        static_cast<std::uint64_t>(parse_int(val, key));
    else if (key == "out_dir") cfg.out_dir = val;
    else if (key == "serial") cfg.serial = parse_int(val, key) != 0;
    else throw ConfigError("config line " + std::to_string(line_no) +
                           ": unknown key '" + key + "'");
  }

  if (cfg.lr_grid.empty()) throw ConfigError("config: lr_grid is empty");
  if (cfg.chi_grid.empty()) throw ConfigError("config: chi_grid is empty");
  if (cfg.n_steps < 1) throw ConfigError("config: n_steps must be >= 1");
  if (cfg.n_seeds < 1) throw ConfigError("config: n_seeds must be >= 1");
  if (!(cfg.projection_b > 0.0))
    throw ConfigError("config: projection_b must be positive");
  if (!(cfg.divergence_guard > 0.0))
    throw ConfigError("config: divergence_guard must be positive");
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str());
}

std::string ExperimentConfig::echo() const {
  std::ostringstream out;
  out << "env = " << env << "\n"
      << "algo = " << algo << "\n"
      << "lr_grid = " << join_doubles(lr_grid) << "\n"
      << "n_steps = " << n_steps << "\n"
      << "n_seeds = " << n_seeds << "\n"
      << "gap = " << gap << "\n"
      << "nu = " << fmt_double(nu) << "\n"
      << "tau = " << fmt_double(tau) << "\n"
      << "c_tau = " << fmt_double(c_tau) << "\n"
      << "eta = " << fmt_double(eta) << "\n"
      << "chi_grid = " << join_doubles(chi_grid) << "\n"
      << "horizon = " << horizon << "\n"
      << "m_max = " << m_max << "\n"
      << "projection_b = " << fmt_double(projection_b) << "\n"
      << "divergence_guard = " << fmt_double(divergence_guard) << "\n"
      << "master_seed = " << master_seed << "\n"
      << "out_dir = " << out_dir << "\n"
      << "serial = " << (serial ? 1 : 0) << "\n";
  return out.str();
}

std::string cell_stream_label(const std::string& env, const std::string& algo,
                              double lr, int seed) {
  return "env=" + env + "|algo=" + algo + "|lr=" + fmt_double(lr) +
         "|seed=" + std::to_string(seed);
}

RunRecord run_cell(const ExperimentConfig& cfg, const ProblemInstance& inst,
                   const OracleQuantities& oq, AlgoKind algo, double lr,
                   int seed) {
  RunRecord rec;
  rec.env = inst.name;
  rec.algo = algo_name(algo);
  rec.lr = lr;
  rec.seed = seed;
  rec.rmspbe.reserve(cfg.n_steps);
  rec.w_norm.reserve(cfg.n_steps);

  Rng rng = Rng::from_stream(cfg.master_seed,
                             cell_stream_label(inst.name, rec.algo, lr, seed));

  LearnerState st = make_state(algo, inst.w_init, inst.mdp.discount(),
                               cfg.divergence_guard);
  const bool windowed = algo_needs_window(algo);
  GapFn gap_fn = parse_gap(cfg.gap);
  // Decaying rate per Assumption 3 for the gap-based rule; the single-rate
  // baselines use the grid value as a constant step size.
  LrSchedule decay(lr, cfg.nu);

  TransitionWindow window;
  std::deque<Transition> pending;
  std::int64_t pending_base = 0;

  const FeatureMap& x = inst.features;
  int s = 0;
  constexpr double kRmspbeClamp = 1e6;

  for (int e = 0; e < cfg.n_steps; ++e) {
    rec.rmspbe.push_back(std::min(rmspbe(st.w, oq), kRmspbeClamp));
    rec.w_norm.push_back(st.w.norm());

    const Transition tr = sample_step(inst.mdp, inst.mu, inst.pi, s, rng);
    s = tr.s_next;

    if (windowed) {
      window.push(x.row(tr.s), tr.rho);
      pending.push_back(tr);
      while (!st.diverged) {
        const std::int64_t t = st.t;
        const std::int64_t f = gap_fn(static_cast<double>(t));
        if (t + f + 1 > window.end_time() - 1) break;  // not warm yet
        const Transition& tr_now =
            pending[static_cast<std::size_t>(t - pending_base)];
        const Transition& tr_ahead =
            pending[static_cast<std::size_t>(t + f - pending_base)];
        const double alpha = decay.at(static_cast<double>(t));
        if (algo == AlgoKind::AttdProjected)
          step_projected_attd(st, window, tr_now, tr_ahead, alpha, x,
                              cfg.projection_b);
        else
          step_attd(st, window, tr_now, tr_ahead, alpha, x);
        window.evict_before(st.t);
        while (pending_base < st.t) {
          pending.pop_front();
          ++pending_base;
        }
      }
    } else {
      // The gradient family shares the decaying schedule the gap-based rule
      // uses; the TD family runs on the constant grid rate.
      const double alpha = decay.at(static_cast<double>(st.t));
      switch (algo) {
        case AlgoKind::Td: step_offpolicy_td(st, tr, lr, x); break;
        case AlgoKind::Gtd: step_gtd(st, tr, alpha, x); break;
        case AlgoKind::Gtd2: step_gtd2(st, tr, alpha, x); break;
        case AlgoKind::Tdc: step_tdc(st, tr, alpha, x); break;
        case AlgoKind::Htd: step_htd(st, tr, lr, x); break;
        case AlgoKind::Vtrace: step_vtrace(st, tr, lr, x); break;
        case AlgoKind::Tdrc: step_tdrc(st, tr, alpha, x); break;
        default: throw std::logic_error("run_cell: unhandled algorithm");
      }
    }
  }

  rec.diverged = st.diverged;
  rec.final_w = st.w;
  return rec;
}

std::vector<RunRecord> run_all_cells(const ExperimentConfig& cfg) {
  const ProblemInstance inst = make_instance(cfg.env);
  const OracleQuantities oq =
      compute_oracle(inst.mdp, inst.pi, inst.mu, inst.features);
  const AlgoKind algo = parse_algo(cfg.algo);

  if (algo == AlgoKind::AttdProjected &&
      cfg.projection_b < oq.w_star.norm()) {
    std::cerr << "warning: projection radius " << cfg.projection_b
              << " is smaller than ||w*|| = " << oq.w_star.norm()
              << "; finite-sample guarantees do not apply\n";
  }

  const std::size_t n_cells = cfg.lr_grid.size() * cfg.n_seeds;
  std::vector<RunRecord> records(n_cells);
  for_each_parallel(n_cells, cfg.serial, [&](std::size_t i) {
    const std::size_t lr_idx = i / cfg.n_seeds;
    const int seed = static_cast<int>(i % cfg.n_seeds);
    records[i] = run_cell(cfg, inst, oq, algo, cfg.lr_grid[lr_idx], seed);
  });
  return records;
}

Summary summarize(const ExperimentConfig& cfg,
                  const std::vector<RunRecord>& records) {
  if (records.size() != cfg.lr_grid.size() * cfg.n_seeds)
    throw ConfigError("summarize: record count does not match the grid");
  Summary sum;
  sum.env = cfg.env;
  sum.algo = cfg.algo;
  sum.lr_grid = cfg.lr_grid;

  const AlgoKind algo = parse_algo(cfg.algo);
  if (algo_needs_window(algo)) {
    sum.gap = cfg.gap;
    const GapCheckReport rep =
        check_gap_assumption(parse_gap(cfg.gap), LrSchedule(1.0, cfg.nu),
                             cfg.tau, cfg.c_tau, cfg.chi_grid,
                             std::max<std::int64_t>(cfg.horizon, 10000));
    sum.gap_admissible = rep.monotone && rep.summable_all_chi;
  }

  sum.divergent = true;
  for (const auto& rec : records) sum.divergent = sum.divergent && rec.diverged;

  const std::size_t n_lr = cfg.lr_grid.size();
  std::size_t best_idx = 0;
  for (std::size_t li = 0; li < n_lr; ++li) {
    double mean_final = 0.0;
    for (int sd = 0; sd < cfg.n_seeds; ++sd)
      mean_final += records[li * cfg.n_seeds + sd].rmspbe.back();
    mean_final /= cfg.n_seeds;
    sum.final_mean_rmspbe.push_back(mean_final);
    if (mean_final < sum.final_mean_rmspbe[best_idx]) best_idx = li;
  }
  // Ties resolve toward the smaller rate: the grid is scanned ascending and
  // only strict improvement moves the pick.
  sum.best_lr = cfg.lr_grid[best_idx];

  sum.mean_rmspbe.resize(cfg.n_steps, 0.0);
  sum.stderr_rmspbe.resize(cfg.n_steps, 0.0);
  for (int step = 0; step < cfg.n_steps; ++step) {
    double mean = 0.0;
    for (int sd = 0; sd < cfg.n_seeds; ++sd)
      mean += records[best_idx * cfg.n_seeds + sd].rmspbe[step];
    mean /= cfg.n_seeds;
    double ss = 0.0;
    for (int sd = 0; sd < cfg.n_seeds; ++sd) {
      const double d =
          records[best_idx * cfg.n_seeds + sd].rmspbe[step] - mean;
      ss += d * d;
    }
    sum.mean_rmspbe[step] = mean;
    sum.stderr_rmspbe[step] =
        cfg.n_seeds > 1 ? std::sqrt(ss / (cfg.n_seeds - 1) / cfg.n_seeds) : 0.0;
  }
  return sum;
}

Summary sweep(const ExperimentConfig& cfg) {
  return summarize(cfg, run_all_cells(cfg));
}

std::vector<Summary> gap_study(const ExperimentConfig& cfg,
                               const std::vector<std::string>& gap_kinds) {
  if (gap_kinds.empty()) throw ConfigError("gap_study: no gap kinds");
  for (const auto& kind : gap_kinds) parse_gap(kind);  // validate all upfront
  std::vector<Summary> out;
  for (const auto& kind : gap_kinds) {
    ExperimentConfig variant = cfg;
    variant.gap = kind;
    out.push_back(sweep(variant));
  }
  return out;
}

std::string trace_csv(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out << "env,algo,lr,seed,step,rmspbe,w_norm,diverged\n";
  for (const auto& rec : records) {
    for (std::size_t step = 0; step < rec.rmspbe.size(); ++step) {
      out << rec.env << ',' << rec.algo << ',' << fmt_double(rec.lr) << ','
          << rec.seed << ',' << step << ',' << fmt_double(rec.rmspbe[step])
          << ',' << fmt_double(rec.w_norm[step]) << ','
          << (rec.diverged ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

std::vector<RunRecord> parse_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line != "env,algo,lr,seed,step,rmspbe,w_norm,diverged")
    throw ConfigError("parse_trace_csv: bad header");
  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 8)
      throw ConfigError("parse_trace_csv: expected 8 fields");
    const double lr = parse_double(fields[2], "lr");
    const int seed = static_cast<int>(parse_int(fields[3], "seed"));
    if (out.empty() || out.back().env != fields[0] ||
        out.back().algo != fields[1] || out.back().lr != lr ||
        out.back().seed != seed) {
      RunRecord rec;
      rec.env = fields[0];
      rec.algo = fields[1];
      rec.lr = lr;
      rec.seed = seed;
      out.push_back(std::move(rec));
    }
    out.back().rmspbe.push_back(parse_double(fields[5], "rmspbe"));
    out.back().w_norm.push_back(parse_double(fields[6], "w_norm"));
    out.back().diverged = fields[7] == "1";
  }
  return out;
}

std::string summary_csv(const std::vector<Summary>& summaries) {
  std::ostringstream out;
  out << "env,algo,gap,best_lr,step,mean_rmspbe,stderr_rmspbe\n";
  for (const auto& sum : summaries) {
    for (std::size_t step = 0; step < sum.mean_rmspbe.size(); ++step) {
      out << sum.env << ',' << sum.algo << ',' << sum.gap << ','
          << fmt_double(sum.best_lr) << ',' << step << ','
          << fmt_double(sum.mean_rmspbe[step]) << ','
          << fmt_double(sum.stderr_rmspbe[step]) << '\n';
    }
  }
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << content;
  out.flush();
  if (!out.good()) throw IoError("write failed: " + path);
}

}  // namespace tdlab
