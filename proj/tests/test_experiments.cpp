#include "doctest.h"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "aggbfgs/experiments.hpp"

using namespace aggbfgs;

namespace {

std::vector<double> values(const ExperimentOutput& out, const std::string& metric, long k_min = 0) {
  std::vector<double> v;
  for (const auto& r : out.records) {
    if (r.metric == metric && r.k >= k_min) v.push_back(r.value);
  }
  return v;
}

}  // namespace

TEST_CASE("run_instances merges in index order and records failures") {
  const auto task = [](std::size_t i) -> std::vector<ExperimentRecord> {
    if (i == 3) throw std::runtime_error("boom");
    return {{"t", 0, 1, 1, static_cast<long>(i), "v", static_cast<double>(i)}};
  };
  const auto fail = [](std::size_t i) {
    return ExperimentRecord{"t", 0, 1, 1, static_cast<long>(i), "failure", 1.0};
  };
  const ExperimentOutput serial = run_instances(8, 1, task, fail);
  const ExperimentOutput parallel = run_instances(8, 4, task, fail);
  CHECK(serial.failures == 1);
  CHECK(serial.records == parallel.records);
  REQUIRE(serial.records.size() == 8);
  CHECK(serial.records[3].metric == "failure");
  for (std::size_t i = 0; i < 8; ++i) CHECK(serial.records[i].k == static_cast<long>(i));
}

TEST_CASE("square grid") {
  const auto grid = square_grid({4, 8});
  REQUIRE(grid.size() == 3);
  CHECK(grid[0] == std::make_pair(Index{4}, Index{4}));
  CHECK(std::find(grid.begin(), grid.end(), std::make_pair(Index{4}, Index{8})) == grid.end());
}

TEST_CASE("equivalence runs are accurate and independent of the job count") {
  RunOptions opts;
  opts.seed = 9;
  const ExperimentOutput one = run_equivalence({{4, 4}, {4, 1}, {8, 3}}, 30, opts);
  opts.jobs = 3;
  const ExperimentOutput three = run_equivalence({{4, 4}, {4, 1}, {8, 3}}, 30, opts);
  CHECK(one.failures == 0);
  CHECK(one.records == three.records);
  for (const auto& r : one.records) {
    if (r.metric != "relative_error") continue;
    CHECK(r.value <= (r.m == 1 ? 1e-12 : 1e-8));
  }
  std::ostringstream a, b;
  write_csv(a, one.records);
  write_csv(b, three.records);
  CHECK(a.str() == b.str());
}

TEST_CASE("accumulation at n = m = 8") {
  RunOptions opts;
  opts.seed = 4;
  const ExperimentOutput out = run_accumulation({8}, 8, 10, opts);
  CHECK(out.failures == 0);
  std::vector<double> terminal;
  for (const auto& r : out.records) {
    if (r.metric != "relative_error") continue;
    if (r.k == 8) CHECK(r.value <= 1e-12);
    if (r.k == 16) terminal.push_back(r.value);
  }
  REQUIRE(terminal.size() == 10);
  std::sort(terminal.begin(), terminal.end());
  CHECK(terminal[terminal.size() / 2] <= 1e-6);
  for (double agg : values(out, "aggregations")) CHECK(agg > 0.0);
}

TEST_CASE("lag study") {
  RunOptions opts;
  const ExperimentOutput out = run_lag_study("rosenbrock", {0, 1}, 30, opts);
  bool lingering = false;
  for (const auto& r : out.records) {
    if (r.m == 0) CHECK(r.value == 0.0);
    if (r.m == 1 && r.k > 2 && r.value > 0.0) lingering = true;
    CHECK(r.k > r.m);
  }
  CHECK(lingering);
  const ExperimentOutput none = run_lag_study("rosenbrock", {5}, 5, opts);
  CHECK(none.records.empty());
  CHECK_THROWS_AS(run_lag_study("rosenbrock", {-1}, 5, opts), Error);
}

TEST_CASE("tracking stays close to full-history BFGS") {
  RunOptions opts;
  const ExperimentOutput out = run_tracking("rosenbrock", 200, opts);
  const auto agg = values(out, "agg_vs_bfgs");
  REQUIRE(agg.size() > 10);
  CHECK(*std::max_element(agg.begin(), agg.end()) <= 1e-8);
  const auto aggregated = values(out, "aggregated");
  CHECK(aggregated.back() > 0.0);
}

TEST_CASE("benchmark on the half squared norm") {
  SolverConfig base;
  base.memory = 5;
  RunOptions opts;
  const BenchmarkOutput bench =
      run_benchmark({"sphere:5", "rosenbrock"}, {SolverMode::AggBFGS, SolverMode::LBFGS}, base, opts);
  REQUIRE(bench.rows.size() == 2);
  for (const auto& report : bench.rows[0].reports) {
    CHECK(report.iters == 1);
    CHECK(report.aggs == 0);
  }
  std::stringstream table;
  write_benchmark_table(table, bench);
  CHECK(table.str().rfind("name,agg_iters,agg_funcs,agg_aggs,lbfgs_iters,lbfgs_funcs,lbfgs_aggs\n", 0) == 0);
  const ProfileInput input = read_measure_table(table, "agg_iters", "lbfgs_iters");
  CHECK(input.problems.size() == 2);
  CHECK(*input.measure_a[0] == 1.0);
}
