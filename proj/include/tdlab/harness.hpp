#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tdlab/envs.hpp"
#include "tdlab/learners.hpp"
#include "tdlab/oracle.hpp"
#include "tdlab/schedules.hpp"

namespace tdlab {

/// Flat key=value experiment description. Unknown keys are rejected so typos
/// surface before any cell runs; `echo()` serializes back losslessly.
struct ExperimentConfig {
  std::string env = "boyan";
  std::string algo = "attd";
  std::vector<double> lr_grid;  // defaults to {2^-20 .. 2^-1, 1}
  int n_steps = 20000;
  int n_seeds = 10;
  std::string gap = "ln2";
  double nu = 1.0;
  double tau = 0.1;
  double c_tau = 10.0;
  double eta = 0.75;
  std::vector<double> chi_grid = {0.1, 0.5, 0.9, 0.99};
  std::int64_t horizon = 10000;
  int m_max = 2000;
  double projection_b = std::numeric_limits<double>::infinity();
  double divergence_guard = 1e8;
  std::uint64_t master_seed = 0;
  std::string out_dir = ".";
  bool serial = false;

  static ExperimentConfig defaults();
  static ExperimentConfig from_string(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
  std::string echo() const;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Per-step trace of one (env, algo, lr, seed) cell. RMSPBE entries are
/// clamped at 1e6 so divergent traces stay plottable; the flag carries the
/// truth. Both traces use the pre-update convention, so entry 0 is the value
/// at the initial weights.
struct RunRecord {
  std::string env;
  std::string algo;
  double lr = 0.0;
  int seed = 0;
  std::vector<double> rmspbe;
  std::vector<double> w_norm;
  bool diverged = false;
  Eigen::VectorXd final_w;
};

/// Sweep result for one (env, algo): best learning rate by mean final-step
/// RMSPBE (ties toward the smaller rate) and the seed-aggregated trace at
/// that rate.
struct Summary {
  std::string env;
  std::string algo;
  std::string gap = "na";
  bool gap_admissible = true;
  double best_lr = 0.0;
  bool divergent = false;  // every cell of the grid tripped the guard
  std::vector<double> lr_grid;
  std::vector<double> final_mean_rmspbe;  // per grid entry
  std::vector<double> mean_rmspbe;        // per step, best lr
  std::vector<double> stderr_rmspbe;      // per step, best lr
};

/// RNG stream label of one cell. Excludes the gap kind by contract: a gap
/// study must see identical environment trajectories for identical seeds.
std::string cell_stream_label(const std::string& env, const std::string& algo,
                              double lr, int seed);

/// Run one cell against a prebuilt instance and oracle. Deterministic in
/// (cfg.master_seed, env, algo, lr, seed).
RunRecord run_cell(const ExperimentConfig& cfg, const ProblemInstance& inst,
                   const OracleQuantities& oq, AlgoKind algo, double lr,
                   int seed);

/// All cells of the configured grid, in deterministic (lr-major, seed-minor)
/// order. Parallel across cells unless cfg.serial.
std::vector<RunRecord> run_all_cells(const ExperimentConfig& cfg);

Summary summarize(const ExperimentConfig& cfg,
                  const std::vector<RunRecord>& records);

Summary sweep(const ExperimentConfig& cfg);

/// One sweep per gap kind, same seeds and environment streams throughout.
std::vector<Summary> gap_study(const ExperimentConfig& cfg,
                               const std::vector<std::string>& gap_kinds);

// CSV codecs. Fixed schemas, LF line endings, round-trip-exact floats.
std::string trace_csv(const std::vector<RunRecord>& records);
std::vector<RunRecord> parse_trace_csv(const std::string& text);
std::string summary_csv(const std::vector<Summary>& summaries);
void write_file(const std::string& path, const std::string& content);

}  // namespace tdlab
