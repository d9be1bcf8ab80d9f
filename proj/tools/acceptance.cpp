#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "aggbfgs/aggregation.hpp"
#include "aggbfgs/experiments.hpp"
#include "aggbfgs/problems.hpp"
#include "aggbfgs/profiles.hpp"
#include "aggbfgs/solver.hpp"

using namespace aggbfgs;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buffer[256];
  std::snprintf(buffer, sizeof(buffer), format, a, b, c);
  return buffer;
}

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

Matrix two_loop_dense(const InitialMatrix& w, PairView pairs) {
  const Index n = w.dim();
  Matrix out(n, n);
  for (Index c = 0; c < n; ++c) out.col(c) = two_loop_apply(w, pairs, Vector::Unit(n, c));
  return out;
}

Outcome criterion1() {
  const auto start = Clock::now();
  Rng rng(derive_seed(2024, stream_id("acceptance:forms"), 0));
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    std::uniform_int_distribution<Index> pick_n(2, 32);
    const Index n = pick_n(rng);
    std::uniform_int_distribution<Index> pick_m(1, n);
    PairStreamSpec spec;
    spec.seed = rng();
    spec.n = n;
    spec.m = pick_m(rng);
    spec.target_cond = 1e2;
    const PairStream data = mock_pair_sequence(spec, false);
    Vector diag(n);
    std::uniform_real_distribution<double> unit(0.5, 2.0);
    for (Index i = 0; i < n; ++i) diag(i) = unit(rng);
    const InitialMatrix w = t % 2 == 0 ? InitialMatrix::scaled_identity(n, unit(rng))
                                       : InitialMatrix::diagonal(diag);
    const Matrix a1 = bfgs_iterative(w, data.pairs);
    const Matrix a2 = bfgs_compact(w, data.pairs);
    const Matrix tl = two_loop_dense(w, data.pairs);
    worst = std::max({worst, relative_error(a1, a2), relative_error(a1, tl), relative_error(a2, tl)});
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-12 && elapsed < 10.0,
          fmt("max pairwise error %.2e over 200 inputs, %.2fs", worst, elapsed)};
}

Outcome criterion2() {
  const auto start = Clock::now();
  Rng rng(derive_seed(2024, stream_id("acceptance:skip"), 0));
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::uniform_int_distribution<Index> pick_n(2, 16);
    const Index n = pick_n(rng);
    std::uniform_int_distribution<Index> pick_m(2, n);
    PairStreamSpec spec;
    spec.seed = rng();
    spec.n = n;
    spec.m = pick_m(rng);
    PairStream data = mock_pair_sequence(spec, false);
    std::uniform_int_distribution<std::size_t> pick_j(0, data.pairs.size() - 2);
    const std::size_t j = pick_j(rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    double tau = normal(rng);
    if (tau == 0.0) tau = 1.0;
    const Vector s = tau * data.pairs[j + 1].s;
    data.pairs[j] = make_pair(s, data.hessian * s);
    const InitialMatrix w = InitialMatrix::scaled_identity(n);
    const PairList reduced = skip_parallel(data.pairs, j, tau);
    worst = std::max(worst, relative_error(bfgs_iterative(w, reduced), bfgs_iterative(w, data.pairs)));
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-12 && elapsed < 5.0,
          fmt("max error %.2e over 100 instances, %.2fs", worst, elapsed)};
}

struct GridResult {
  ExperimentOutput output;
  double seconds = 0.0;
};

GridResult equivalence_grid() {
  const auto start = Clock::now();
  RunOptions options;
  options.seed = 7;
  options.jobs = worker_count();
  GridResult out;
  out.output = run_equivalence(square_grid({4, 8, 16, 32, 64, 128}), 100, options);
  out.seconds = seconds_since(start);
  return out;
}

Outcome criterion3(const GridResult& grid) {
  double small = 0.0;
  double large = 0.0;
  std::size_t count = 0;
  for (const auto& r : grid.output.records) {
    if (r.metric != "relative_error") continue;
    ++count;
    (r.n <= 32 ? small : large) = std::max(r.n <= 32 ? small : large, r.value);
  }
  const bool pass = grid.output.failures == 0 && small <= 1e-8 && large <= 1e-6 &&
                    grid.seconds < 300.0;
  return {pass, fmt("max error %.2e (n <= 32), %.2e (n >= 64), ", small, large) +
                    std::to_string(count) + " instances, " +
                    std::to_string(grid.output.failures) + " failures, " +
                    fmt("%.1fs", grid.seconds)};
}

Outcome criterion4(const GridResult& grid) {
  std::map<std::string, double> worst;
  for (const auto& r : grid.output.records) {
    if (r.metric.rfind("residual_", 0) == 0) worst[r.metric] = std::max(worst[r.metric], r.value);
  }
  const bool pass = grid.output.failures == 0 && worst["residual_triangular"] <= 1e-8 &&
                    worst["residual_b"] <= 1e-8 && worst["residual_quadratic"] <= 1e-8 &&
                    worst["residual_curvature"] <= 1e-12;
  return {pass, fmt("triangular %.2e, b %.2e, quadratic %.2e", worst["residual_triangular"],
                    worst["residual_b"], worst["residual_quadratic"]) +
                    fmt(", curvature %.2e", worst["residual_curvature"])};
}

Outcome criterion5() {
  const auto start = Clock::now();
  RunOptions options;
  options.seed = 11;
  options.jobs = worker_count();
  const ExperimentOutput out = run_accumulation({8}, 8, 100, options);
  std::vector<double> terminal;
  for (const auto& r : out.records) {
    if (r.metric == "relative_error" && r.k == 16) terminal.push_back(r.value);
  }
  std::sort(terminal.begin(), terminal.end());
  const double elapsed = seconds_since(start);
  if (terminal.size() != 100) return {false, "missing terminal records"};
  const double median = 0.5 * (terminal[49] + terminal[50]);
  const double max = terminal.back();
  return {out.failures == 0 && median <= 1e-6 && max <= 1e-3 && elapsed < 120.0,
          fmt("terminal median %.2e, max %.2e, %.2fs", median, max, elapsed)};
}

Outcome criterion6() {
  RunOptions options;
  const ExperimentOutput out = run_tracking("rosenbrock", 1000, options);
  double worst = 0.0;
  long iterations = 0;
  long aggregations = 0;
  for (const auto& r : out.records) {
    if (r.metric == "agg_vs_bfgs") {
      worst = std::max(worst, r.value);
      iterations = std::max(iterations, r.k);
    }
    if (r.metric == "aggregated") aggregations += r.value > 0.0 ? 1 : 0;
  }
  SolverConfig config;
  config.mode = SolverMode::AggBFGS;
  config.memory = 2;
  config.policy = StoragePolicy::Exact;
  config.max_iters = 1000;
  config.grad_tol = 1e-12;
  const Problem problem = make_problem("rosenbrock");
  const SolverReport report = minimize(problem, problem.x0, config);
  const bool converged = report.status == SolverStatus::Converged &&
                         (report.x - Vector::Ones(2)).norm() <= 1e-6;
  return {converged && worst <= 1e-8 && aggregations > 0,
          fmt("max error %.2e over %.0f iterations, %.0f aggregations", worst,
              static_cast<double>(iterations), static_cast<double>(aggregations))};
}

Outcome criterion7() {
  Rng rng(derive_seed(2024, stream_id("acceptance:termination"), 0));
  int passed = 0;
  long worst_extra = 0;
  double worst_norm = 0.0;
  for (int t = 0; t < 50; ++t) {
    std::uniform_int_distribution<Index> pick_n(2, 32);
    const Index n = pick_n(rng);
    std::uniform_real_distribution<double> log_cond(0.0, 4.0);
    const Problem problem = random_spd_quadratic(n, std::pow(10.0, log_cond(rng)), rng());
    SolverConfig config;
    config.mode = SolverMode::FullBFGS;
    config.exact_line_search = true;
    config.max_iters = 2 * n + 10;
    config.grad_tol = 1e-300;
    double best = problem.gradient(problem.x0).norm();
    long first = best <= 1e-8 ? 0 : -1;
    minimize(problem, problem.x0, config, [&](const IterationView& view) {
      if (view.k <= n + 1) best = std::min(best, view.g.norm());
      if (first < 0 && view.g.norm() <= 1e-8) first = view.k;
    });
    if (best <= 1e-8) ++passed;
    worst_norm = std::max(worst_norm, best);
    worst_extra = std::max(worst_extra, first < 0 ? 2 * n + 10 : first - n);
  }
  return {passed == 50, std::to_string(passed) +
                            "/50 reached ||g|| <= 1e-8 within n+1 iterations" +
                            fmt(" (worst ||g|| at n+1: %.2e; all reach it by n+%.0f)", worst_norm,
                                static_cast<double>(worst_extra))};
}

std::string table_path(int argc, char** argv) {
  if (argc > 1) return argv[1];
  return std::string(AGGBFGS_SOURCE_DIR) + "/tests/data/table1.csv";
}

Outcome criterion8(const std::string& table) {
  const auto start = Clock::now();
  RunOptions options;
  options.jobs = worker_count();
  SolverConfig config;
  config.memory = 5;
  const std::vector<std::string> suite = suite_names();
  const BenchmarkOutput bench =
      run_benchmark(suite, {SolverMode::AggBFGS, SolverMode::LBFGS}, config, options);
  std::size_t convex = 0;
  std::size_t convex_ok = 0;
  std::size_t aggregating = 0;
  bool sizes_ok = suite.size() >= 10;
  for (std::size_t p = 0; p < bench.rows.size(); ++p) {
    const BenchmarkRow& row = bench.rows[p];
    sizes_ok = sizes_ok && row.n >= 10 && row.n <= 3000;
    if (make_problem(suite[p]).convex) {
      ++convex;
      if (!row.failed[0] && !row.failed[1]) ++convex_ok;
    }
    if (row.reports[0].aggs >= 1) ++aggregating;
  }

  std::ifstream in(table);
  if (!in) return {false, "cannot read " + table};
  const ProfileData data = compute_profiles(read_measure_table(in, "agg_iters", "lbfgs_iters"));
  // Independent recomputation straight from the table text.
  std::ifstream raw(table);
  std::string line;
  std::getline(raw, line);
  std::map<std::string, double> expected;
  while (std::getline(raw, line)) {
    std::stringstream cells(line);
    std::string name, ai, af, ag, li, lf;
    std::getline(cells, name, ',');
    std::getline(cells, ai, ',');
    std::getline(cells, af, ',');
    std::getline(cells, ag, ',');
    std::getline(cells, li, ',');
    if (ai == "---" || li == "---") continue;
    expected[name] = std::log2(std::stod(li)) - std::log2(std::stod(ai));
  }
  bool factors_ok = data.factors.size() == expected.size();
  for (const auto& f : data.factors) {
    const auto it = expected.find(f.problem);
    factors_ok = factors_ok && it != expected.end() && std::abs(it->second - f.factor) <= 1e-12;
  }
  const double bdqrtic = expected.count("bdqrtic") ? expected["bdqrtic"] : 0.0;
  factors_ok = factors_ok && std::abs(bdqrtic - 1.449) < 1e-3;

  const bool pass = sizes_ok && convex_ok == convex && 2 * aggregating >= suite.size() && factors_ok;
  return {pass, std::to_string(convex_ok) + "/" + std::to_string(convex) +
                    " convex problems solved by both, aggregation on " +
                    std::to_string(aggregating) + "/" + std::to_string(suite.size()) +
                    fmt(", bdqrtic factor %.4f, ", bdqrtic) +
                    (factors_ok ? "factors match" : "factor mismatch") +
                    fmt(", %.1fs", seconds_since(start))};
}

std::string csv_of(const ExperimentOutput& out) {
  std::ostringstream s;
  write_csv(s, out.records);
  write_json(s, out.records);
  return s.str();
}

Outcome criterion9() {
  RunOptions serial;
  serial.seed = 99;
  RunOptions parallel = serial;
  parallel.jobs = 4;
  const auto grid = square_grid({4, 8});
  const std::string a = csv_of(run_equivalence(grid, 10, serial));
  const std::string b = csv_of(run_equivalence(grid, 10, serial));
  const std::string c = csv_of(run_equivalence(grid, 10, parallel));
  const std::string d = csv_of(run_accumulation({8}, 8, 10, serial));
  const std::string e = csv_of(run_accumulation({8}, 8, 10, serial));
  const std::string f = csv_of(run_tracking("rosenbrock", 100, serial));
  const std::string g = csv_of(run_tracking("rosenbrock", 100, serial));
  const std::string h = csv_of(run_lag_study("rosenbrock", {1, 2}, 50, serial));
  const std::string i = csv_of(run_lag_study("rosenbrock", {1, 2}, 50, serial));
  const bool pass = a == b && a == c && d == e && f == g && h == i;
  return {pass, pass ? "repeated runs identical bitwise (also across --jobs)"
                     : "outputs differ between repeated runs"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string table = table_path(argc, argv);
  int failed = 0;
  auto report = [&](int id, const char* name, const Outcome& outcome) {
    std::printf("criterion %d [%s] %s: %s\n", id, outcome.pass ? "PASS" : "FAIL", name,
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failed;
  };
  auto guarded = [&](int id, const char* name, auto&& fn) {
    try {
      report(id, name, fn());
    } catch (const std::exception& e) {
      report(id, name, Outcome{false, std::string("exception: ") + e.what()});
    }
  };

  guarded(1, "form equivalence", criterion1);
  guarded(2, "parallel skip", criterion2);
  GridResult grid;
  try {
    grid = equivalence_grid();
  } catch (const std::exception& e) {
    grid.output.failures = 1;
  }
  guarded(3, "single aggregation", [&] { return criterion3(grid); });
  guarded(4, "key equation residuals", [&] { return criterion4(grid); });
  guarded(5, "accumulation", criterion5);
  guarded(6, "rosenbrock tracking", criterion6);
  guarded(7, "quadratic termination", criterion7);
  guarded(8, "suite sanity", [&] { return criterion8(table); });
  guarded(9, "determinism", criterion9);
  return failed == 0 ? 0 : 1;
}
