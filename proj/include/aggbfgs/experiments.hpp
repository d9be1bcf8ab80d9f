#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "aggbfgs/profiles.hpp"
#include "aggbfgs/records.hpp"
#include "aggbfgs/solver.hpp"

namespace aggbfgs {

struct RunOptions {
  std::uint64_t seed = 1;
  /// Worker threads; results never depend on this.
  unsigned jobs = 1;
};

struct ExperimentOutput {
  std::vector<ExperimentRecord> records;
  /// Instances that threw; each also appears as a "failure" record.
  std::size_t failures = 0;
};

/// Runs task(i) for i in [0, count) on up to `jobs` threads and concatenates
/// the returned records in index order. An exception in task(i) becomes a
/// single record {experiment, seed, n, m, i, "failure", 1} built by
/// `on_failure`.
ExperimentOutput run_instances(
    std::size_t count, unsigned jobs,
    const std::function<std::vector<ExperimentRecord>(std::size_t)>& task,
    const std::function<ExperimentRecord(std::size_t)>& on_failure);

/// Every (n, m) with n, m from `sizes` and m <= n.
std::vector<std::pair<Index, Index>> square_grid(const std::vector<Index>& sizes);

/// One planted-dependence aggregation per instance. Records per instance
/// (k = instance index): relative_error and the residuals triangular, b,
/// quadratic and curvature. Per cell (k = -1): min, q1, median, q3, max of
/// relative_error.
ExperimentOutput run_equivalence(const std::vector<std::pair<Index, Index>>& grid,
                                 int instances, const RunOptions& options);

/// Exact-policy aggregation along a mock stream of n + extra_steps pairs with
/// m = n. Records relative_error against full-memory BFGS for every k >= n
/// and the number of aggregations at the last step.
ExperimentOutput run_accumulation(const std::vector<Index>& sizes, int extra_steps,
                                  int instances, const RunOptions& options);

/// Runs FullBFGS on `problem` and records, for each lag j and iteration
/// k > j, the relative error between BFGS of all pairs and BFGS of pairs
/// j + 1, ..., k. m holds the lag.
ExperimentOutput run_lag_study(const std::string& problem, const std::vector<int>& lags,
                               int iterations, const RunOptions& options);

/// Runs AggBFGS with the exact policy and memory n on `problem` and records
/// per iteration the relative error of the aggregated model and of the
/// L-BFGS(n) model against full-history BFGS.
ExperimentOutput run_tracking(const std::string& problem, int iterations,
                              const RunOptions& options);

struct BenchmarkRow {
  std::string problem;
  Index n = 0;
  std::vector<SolverReport> reports;  ///< one per mode
  std::vector<bool> failed;
};

struct BenchmarkOutput {
  std::vector<SolverMode> modes;
  std::vector<BenchmarkRow> rows;
  ExperimentOutput output;
};

/// Runs every mode on every suite problem from its standard starting point.
/// Records (experiment "benchmark:<problem>", metric "<mode>.<field>"):
/// iters, funcs, aggs, fallbacks, converged, f, grad_inf. Runs that end
/// without converging count as failures.
BenchmarkOutput run_benchmark(const std::vector<std::string>& suite,
                              const std::vector<SolverMode>& modes, const SolverConfig& base,
                              const RunOptions& options);

/// Table with columns name,<mode>_iters,<mode>_funcs,<mode>_aggs for every
/// mode; a failed run is written as "---".
void write_benchmark_table(std::ostream& out, const BenchmarkOutput& bench);

/// Reads a table in the write_benchmark_table layout (also the transcribed
/// reference table) and picks two measure columns; "---" is a failure.
ProfileInput read_measure_table(std::istream& in, const std::string& column_a,
                                const std::string& column_b);

}  // namespace aggbfgs
