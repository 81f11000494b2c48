#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tdlab/errors.hpp"
#include "tdlab/harness.hpp"

using namespace tdlab;

namespace {

ExperimentConfig tiny_config(const std::string& env, const std::string& algo) {
  ExperimentConfig cfg = ExperimentConfig::defaults();
  cfg.env = env;
  cfg.algo = algo;
  cfg.lr_grid = {0.01, 0.05};
  cfg.n_steps = 300;
  cfg.n_seeds = 2;
  cfg.serial = true;
  return cfg;
}

}  // namespace

TEST_CASE("config: defaults carry the canonical sweep grid") {
  const auto cfg = ExperimentConfig::defaults();
  REQUIRE(cfg.lr_grid.size() == 21);
  CHECK(cfg.lr_grid.front() == std::ldexp(1.0, -20));
  CHECK(cfg.lr_grid[19] == 0.5);
  CHECK(cfg.lr_grid.back() == 1.0);
  CHECK(cfg.n_seeds == 10);
  CHECK(cfg.n_steps == 20000);
}

TEST_CASE("config: parse, echo, and reparse losslessly") {
  const std::string text =
      "# comment line\n"
      "env = baird\n"
      "algo = attd\n"
      "lr_grid = 0.25, 0.125\n"
      "n_steps = 500\n"
      "gap = log:2.5\n"
      "nu = 0.875\n"
      "projection_b = inf\n"
      "master_seed = 99\n";
  const auto cfg = ExperimentConfig::from_string(text);
  CHECK(cfg.env == "baird");
  CHECK(cfg.algo == "attd");
  CHECK(cfg.lr_grid == std::vector<double>{0.25, 0.125});
  CHECK(cfg.n_steps == 500);
  CHECK(cfg.gap == "log:2.5");
  CHECK(cfg.nu == 0.875);
  CHECK(std::isinf(cfg.projection_b));
  CHECK(cfg.master_seed == 99);

  const auto again = ExperimentConfig::from_string(cfg.echo());
  CHECK(again == cfg);
}

TEST_CASE("config: invalid inputs are rejected at parse") {
  CHECK_THROWS_AS(ExperimentConfig::from_string("n_steps = 0\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_string("lr_grid =\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_string("stepsize = 1\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_string("nu 0.9\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_string("nu = zebra\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_string("projection_b = -1\n"),
                  ConfigError);
}

TEST_CASE("run_cell: identical cell runs produce identical bytes") {
  const auto cfg = tiny_config("boyan", "gtd2");
  const auto inst = make_instance(cfg.env);
  const auto oq = compute_oracle(inst.mdp, inst.pi, inst.mu, inst.features);
  const auto a = run_cell(cfg, inst, oq, AlgoKind::Gtd2, 0.05, 1);
  const auto b = run_cell(cfg, inst, oq, AlgoKind::Gtd2, 0.05, 1);
  CHECK(trace_csv({a}) == trace_csv({b}));
  CHECK(a.final_w == b.final_w);

  const auto c = run_cell(cfg, inst, oq, AlgoKind::Gtd2, 0.05, 2);
  CHECK(trace_csv({a}) != trace_csv({c}));
}

TEST_CASE("stream labels exclude the gap kind") {
  const std::string label = cell_stream_label("baird", "attd", 0.01, 3);
  CHECK(label.find("gap") == std::string::npos);
  CHECK(label.find("ln2") == std::string::npos);
  CHECK(label == "env=baird|algo=attd|lr=0.01|seed=3");
}

TEST_CASE("gap kinds share the environment trajectory for equal seeds") {
  // The environment stream is a pure function of the cell label, which does
  // not mention the gap; replaying the label must reproduce the trajectory.
  const auto inst = make_instance("baird");
  auto roll = [&](std::uint64_t master) {
    Rng rng = Rng::from_stream(master,
                               cell_stream_label("baird", "attd", 0.01, 0));
    std::vector<int> states;
    int s = 0;
    for (int i = 0; i < 400; ++i) {
      const Transition tr = sample_step(inst.mdp, inst.mu, inst.pi, s, rng);
      s = tr.s_next;
      states.push_back(s);
    }
    return states;
  };
  CHECK(roll(7) == roll(7));
  CHECK(roll(7) != roll(8));
}

TEST_CASE("gap study runs one summary per kind over shared seeds") {
  auto cfg = tiny_config("baird", "attd");
  cfg.n_steps = 400;
  const auto summaries = gap_study(cfg, {"ln2", "const:0"});
  REQUIRE(summaries.size() == 2);
  CHECK(summaries[0].gap == "ln2");
  CHECK(summaries[0].gap_admissible);
  CHECK(summaries[1].gap == "const:0");
  CHECK_FALSE(summaries[1].gap_admissible);  // labeled, still run
  CHECK(summaries[1].mean_rmspbe.size() == 400);

  CHECK_THROWS_AS(gap_study(cfg, {"ln2", "nope"}), ConfigError);
}

TEST_CASE("summarize: best lr minimizes the mean final rmspbe, ties go low") {
  ExperimentConfig cfg = tiny_config("boyan", "td");
  cfg.lr_grid = {0.1, 0.2, 0.4};
  cfg.n_seeds = 1;
  cfg.n_steps = 3;
  std::vector<RunRecord> records(3);
  for (int i = 0; i < 3; ++i) {
    records[i].env = "boyan";
    records[i].algo = "td";
    records[i].lr = cfg.lr_grid[i];
    records[i].seed = 0;
    records[i].w_norm = {0, 0, 0};
  }
  records[0].rmspbe = {9, 9, 5};
  records[1].rmspbe = {9, 9, 5};  // tie with the smaller rate
  records[2].rmspbe = {9, 9, 7};
  const auto sum = summarize(cfg, records);
  CHECK(sum.best_lr == 0.1);
  CHECK(sum.final_mean_rmspbe == std::vector<double>{5, 5, 7});
}

TEST_CASE("aggregation matches an independent recomputation") {
  const auto cfg = tiny_config("boyan", "td");
  const auto records = run_all_cells(cfg);
  const auto sum = summarize(cfg, records);

  // locate records at the best lr and recompute mean/stderr directly
  std::vector<const RunRecord*> best;
  for (const auto& rec : records)
    if (rec.lr == sum.best_lr) best.push_back(&rec);
  REQUIRE(static_cast<int>(best.size()) == cfg.n_seeds);
  for (int step = 0; step < cfg.n_steps; step += 37) {
    double mean = 0.0;
    for (const auto* rec : best) mean += rec->rmspbe[step];
    mean /= best.size();
    double ss = 0.0;
    for (const auto* rec : best) {
      const double d = rec->rmspbe[step] - mean;
      ss += d * d;
    }
    const double se = std::sqrt(ss / (best.size() - 1) / best.size());
    CHECK(std::abs(sum.mean_rmspbe[step] - mean) <= 1e-12);
    CHECK(std::abs(sum.stderr_rmspbe[step] - se) <= 1e-12);
  }
}

TEST_CASE("csv: empty records give a header-only file") {
  CHECK(trace_csv({}) == "env,algo,lr,seed,step,rmspbe,w_norm,diverged\n");
  CHECK(summary_csv({}) ==
        "env,algo,gap,best_lr,step,mean_rmspbe,stderr_rmspbe\n");
}

TEST_CASE("csv: trace round-trips through the codec") {
  const auto cfg = tiny_config("baird", "td");
  const auto inst = make_instance(cfg.env);
  const auto oq = compute_oracle(inst.mdp, inst.pi, inst.mu, inst.features);
  std::vector<RunRecord> records;
  records.push_back(run_cell(cfg, inst, oq, AlgoKind::Td, 0.25, 0));
  records.push_back(run_cell(cfg, inst, oq, AlgoKind::Td, 0.01, 1));

  const std::string text = trace_csv(records);
  const auto parsed = parse_trace_csv(text);
  REQUIRE(parsed.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(parsed[i].env == records[i].env);
    CHECK(parsed[i].algo == records[i].algo);
    CHECK(parsed[i].lr == records[i].lr);
    CHECK(parsed[i].seed == records[i].seed);
    CHECK(parsed[i].diverged == records[i].diverged);
    CHECK(parsed[i].rmspbe == records[i].rmspbe);
    CHECK(parsed[i].w_norm == records[i].w_norm);
  }
  CHECK(trace_csv(parsed) == text);  // re-emission is stable

  CHECK_THROWS_AS(parse_trace_csv("bad header\n"), ConfigError);
}

TEST_CASE("summary csv has one row per step per summary") {
  auto cfg = tiny_config("boyan", "td");
  cfg.n_steps = 50;
  const auto sum = sweep(cfg);
  const std::string text = summary_csv({sum});
  const auto rows = std::count(text.begin(), text.end(), '\n');
  CHECK(rows == 1 + 50);
}

TEST_CASE("serial and parallel execution produce identical csv bytes") {
  auto cfg = tiny_config("boyan", "tdc");
  cfg.n_steps = 200;
  cfg.lr_grid = {0.01, 0.05, 0.2};
  cfg.n_seeds = 3;

  cfg.serial = true;
  const auto serial_records = run_all_cells(cfg);
  const auto serial_summary = summarize(cfg, serial_records);
  cfg.serial = false;
  const auto parallel_records = run_all_cells(cfg);
  const auto parallel_summary = summarize(cfg, parallel_records);

  CHECK(trace_csv(serial_records) == trace_csv(parallel_records));
  CHECK(summary_csv({serial_summary}) == summary_csv({parallel_summary}));
}

TEST_CASE("divergent sweeps are marked") {
  auto cfg = tiny_config("baird", "td");
  cfg.lr_grid = {0.1, 0.5};
  cfg.n_steps = 5000;
  cfg.n_seeds = 2;
  const auto sum = sweep(cfg);
  CHECK(sum.divergent);
  for (const double final : sum.final_mean_rmspbe) CHECK(final == 1e6);
}
