#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tdlab/errors.hpp"
#include "tdlab/harness.hpp"
#include "tdlab/oracle.hpp"
#include "tdlab/schedules.hpp"

namespace {

using nlohmann::json;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool serial = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config file")
      ->required();
  cmd->add_option("--seed", opts.seed, "override master_seed");
  cmd->add_option("--out", opts.out, "override out_dir");
  cmd->add_flag("--serial", opts.serial, "disable cell parallelism");
}

tdlab::ExperimentConfig load_config(const CommonOpts& opts) {
  auto cfg = tdlab::ExperimentConfig::from_file(opts.config_path);
  if (opts.seed) cfg.master_seed = *opts.seed;
  if (opts.out) cfg.out_dir = *opts.out;
  if (opts.serial) cfg.serial = true;
  return cfg;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

int cmd_run(const CommonOpts& opts) {
  const auto cfg = load_config(opts);
  const auto records = tdlab::run_all_cells(cfg);
  const std::string path = cfg.out_dir + "/trace.csv";
  tdlab::write_file(path, tdlab::trace_csv(records));
  std::cout << "wrote " << path << " (" << records.size() << " cells x "
            << cfg.n_steps << " steps)\n";
  return 0;
}

int cmd_sweep(const CommonOpts& opts) {
  const auto cfg = load_config(opts);
  const auto summary = tdlab::sweep(cfg);
  const std::string path = cfg.out_dir + "/summary.csv";
  tdlab::write_file(path, tdlab::summary_csv({summary}));
  std::cout << "env=" << summary.env << " algo=" << summary.algo
            << " best_lr=" << summary.best_lr
            << " final=" << summary.mean_rmspbe.back()
            << (summary.divergent ? " [divergent]" : "") << "\n"
            << "wrote " << path << "\n";
  return 0;
}

int cmd_gaps(const CommonOpts& opts, const std::string& kinds_arg) {
  const auto cfg = load_config(opts);
  std::vector<std::string> kinds;
  std::string item;
  std::istringstream in(kinds_arg);
  while (std::getline(in, item, ',')) kinds.push_back(item);
  const auto summaries = tdlab::gap_study(cfg, kinds);
  const std::string path = cfg.out_dir + "/summary.csv";
  tdlab::write_file(path, tdlab::summary_csv(summaries));
  for (const auto& sum : summaries)
    std::cout << "gap=" << sum.gap << " best_lr=" << sum.best_lr
              << " final=" << sum.mean_rmspbe.back()
              << (sum.gap_admissible ? "" : " [outside gap assumption]")
              << (sum.divergent ? " [divergent]" : "") << "\n";
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_oracle(const CommonOpts& opts, const std::string& format) {
  const auto cfg = load_config(opts);
  const auto inst = tdlab::make_instance(cfg.env);
  const auto rep =
      tdlab::check_assumptions(inst.mdp, inst.pi, inst.mu, inst.features);
  const auto oq =
      tdlab::compute_oracle(inst.mdp, inst.pi, inst.mu, inst.features);

  if (format == "csv") {
    std::cout << "quantity,index,value\n";
    std::cout << "beta,," << oq.beta << "\n";
    std::cout << "a_nonsingular,," << (rep.a_nonsingular ? 1 : 0) << "\n";
    std::cout << "irreducible,," << (rep.irreducible ? 1 : 0) << "\n";
    std::cout << "aperiodic,," << (rep.aperiodic ? 1 : 0) << "\n";
    std::cout << "coverage,," << (rep.coverage ? 1 : 0) << "\n";
    std::cout << "feature_rank,," << (rep.feature_rank ? 1 : 0) << "\n";
    std::cout << "fixed_point_solvable,," << (rep.fixed_point_solvable ? 1 : 0)
              << "\n";
    char buf[40];
    for (Eigen::Index i = 0; i < oq.w_star.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", oq.w_star(i));
      std::cout << "w_star," << i << ',' << buf << "\n";
    }
    for (Eigen::Index i = 0; i < oq.d_mu.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", oq.d_mu(i));
      std::cout << "d_mu," << i << ',' << buf << "\n";
    }
    return 0;
  }

  json out;
  out["env"] = inst.name;
  out["n_states"] = inst.mdp.n_states();
  out["feature_dim"] = inst.features.dim();
  out["gamma"] = inst.mdp.discount();
  out["report"] = {{"irreducible", rep.irreducible},
                   {"aperiodic", rep.aperiodic},
                   {"coverage", rep.coverage},
                   {"feature_rank", rep.feature_rank},
                   {"a_nonsingular", rep.a_nonsingular},
                   {"fixed_point_solvable", rep.fixed_point_solvable},
                   {"beta", rep.beta}};
  out["d_mu"] = vector_to_json(oq.d_mu);
  out["A"] = matrix_to_json(oq.a);
  out["b"] = vector_to_json(oq.b);
  out["C"] = matrix_to_json(oq.c);
  out["w_star"] = vector_to_json(oq.w_star);
  out["v_pi"] = vector_to_json(oq.v_pi);
  out["fixed_point_residual"] = (oq.a * oq.w_star + oq.b).norm();
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_check(const CommonOpts& opts) {
  const auto cfg = load_config(opts);
  const tdlab::LrSchedule sched(1.0, cfg.nu);
  const tdlab::GapFn gap = tdlab::parse_gap(cfg.gap);
  const auto gap_rep = tdlab::check_gap_assumption(
      gap, sched, cfg.tau, cfg.c_tau, cfg.chi_grid, cfg.horizon);
  const auto sk = tdlab::make_skeleton(sched, cfg.tau, cfg.eta, cfg.m_max);

  json out;
  out["lr"] = {{"c_alpha", sched.c_alpha()}, {"nu", sched.nu()}};
  json chis = json::array();
  for (const auto& v : gap_rep.chi_verdicts) {
    const char* verdict = v.verdict == tdlab::ChiVerdict::Kind::AnalyticPass
                              ? "pass(analytic)"
                          : v.verdict == tdlab::ChiVerdict::Kind::TailPass
                              ? "pass(tail-heuristic)"
                          : v.verdict == tdlab::ChiVerdict::Kind::Slow
                              ? "slow(tail-heuristic)"
                              : "fail";
    chis.push_back({{"chi", v.chi},
                    {"partial_sum", v.partial_sum},
                    {"tail_increment", v.tail_increment},
                    {"verdict", verdict}});
  }
  out["gap_check"] = {
      {"gap", gap.name()},
      {"tau", cfg.tau},
      {"c_tau", cfg.c_tau},
      {"horizon", cfg.horizon},
      {"monotone", gap_rep.monotone},
      {"growth_bound", gap_rep.growth_bound},
      {"first_growth_violation", gap_rep.first_growth_violation},
      {"analytic_applicable", gap_rep.analytic_applicable},
      {"summable_all_chi", gap_rep.summable_all_chi},
      {"chi_grid", chis},
      {"pass", gap_rep.pass},
      {"note", "tail verdicts are finite-horizon heuristics, not proofs"}};
  out["skeleton"] = {{"eta", sk.eta},
                     {"computed_m", sk.computed_m},
                     {"truncated", sk.truncated},
                     {"t_1", sk.t_marks.size() > 1 ? sk.t_marks[1] : -1.0},
                     {"T_0", sk.big_t.empty() ? -1.0 : sk.big_t[0]},
                     {"lemma1_violations", sk.lemma1_violations},
                     {"lemma2_violations", sk.lemma2_violations},
                     {"lemmas_hold", sk.lemmas_hold()}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"off-policy TD prediction lab"};
  app.require_subcommand(1);

  CommonOpts run_opts, sweep_opts, gaps_opts, oracle_opts, check_opts;
  std::string kinds = "ln2,log:5";
  std::string oracle_format = "json";

  auto* run = app.add_subcommand("run", "run all cells, emit per-step traces");
  add_common(run, run_opts);
  auto* sw = app.add_subcommand("sweep", "learning-rate sweep, emit summary");
  add_common(sw, sweep_opts);
  auto* gaps = app.add_subcommand("gaps", "sweep once per gap kind");
  add_common(gaps, gaps_opts);
  gaps->add_option("--kinds", kinds, "comma list, e.g. ln2,log:5,const:0");
  auto* oracle = app.add_subcommand("oracle", "print oracle report and w*");
  add_common(oracle, oracle_opts);
  oracle->add_option("--format", oracle_format, "json|csv");
  auto* check = app.add_subcommand("check", "assumption and skeleton reports");
  add_common(check, check_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_opts);
    if (sw->parsed()) return cmd_sweep(sweep_opts);
    if (gaps->parsed()) return cmd_gaps(gaps_opts, kinds);
    if (oracle->parsed()) return cmd_oracle(oracle_opts, oracle_format);
    if (check->parsed()) return cmd_check(check_opts);
  } catch (const tdlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const tdlab::AssumptionError& e) {
    std::cerr << "assumption check failed: " << e.what() << "\n";
    return 3;
  } catch (const tdlab::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
