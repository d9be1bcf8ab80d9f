#include "aggbfgs/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "aggbfgs/aggregation.hpp"
#include "aggbfgs/problems.hpp"

namespace aggbfgs {

ExperimentOutput run_instances(
    std::size_t count, unsigned jobs,
    const std::function<std::vector<ExperimentRecord>(std::size_t)>& task,
    const std::function<ExperimentRecord(std::size_t)>& on_failure) {
  std::vector<std::vector<ExperimentRecord>> slots(count);
  std::vector<char> failed(count, 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        slots[i] = task(i);
      } catch (const std::exception&) {
        slots[i] = {on_failure(i)};
        failed[i] = 1;
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  ExperimentOutput out;
  for (std::size_t i = 0; i < count; ++i) {
    out.failures += failed[i] ? 1 : 0;
    for (auto& r : slots[i]) out.records.push_back(std::move(r));
  }
  return out;
}

std::vector<std::pair<Index, Index>> square_grid(const std::vector<Index>& sizes) {
  std::vector<std::pair<Index, Index>> grid;
  for (const Index n : sizes) {
    for (const Index m : sizes) {
      if (m <= n) grid.emplace_back(n, m);
    }
  }
  return grid;
}

namespace {

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

void append(ExperimentOutput& into, ExperimentOutput&& from) {
  into.failures += from.failures;
  for (auto& r : from.records) into.records.push_back(std::move(r));
}

}  // namespace

ExperimentOutput run_equivalence(const std::vector<std::pair<Index, Index>>& grid,
                                 int instances, const RunOptions& options) {
  if (instances < 1) throw Error(ErrorCode::InvalidInput, "instances must be positive");
  ExperimentOutput all;
  for (const auto& [n, m] : grid) {
    if (m < 1 || m > n) throw Error(ErrorCode::InvalidInput, "grid cells need 1 <= m <= n");
    const std::uint64_t stream =
        stream_id("equivalence:" + std::to_string(n) + ":" + std::to_string(m));
    auto seed_of = [&](std::size_t i) { return derive_seed(options.seed, stream, i); };
    auto record = [&, n = n, m = m](std::size_t i, const char* metric, double value) {
      return ExperimentRecord{"equivalence", seed_of(i), n, m, static_cast<long>(i), metric, value};
    };
    ExperimentOutput cell = run_instances(
        static_cast<std::size_t>(instances), options.jobs,
        [&, n = n, m = m](std::size_t i) {
          PairStreamSpec spec;
          spec.seed = seed_of(i);
          spec.n = n;
          spec.m = m;
          const PairStream stream_data = mock_pair_sequence(spec, true);
          const PlantedDependence& planted = *stream_data.planted;
          PairList full;
          full.push_back(make_pair(planted.s0, planted.y0));
          for (const auto& p : stream_data.pairs) full.push_back(p);
          const InitialMatrix w = InitialMatrix::scaled_identity(n);
          const AggregationResult result = aggregate(w, full, 0, planted.tau);
          const PairList reduced = apply_aggregation(full, result);
          const double err = relative_error(bfgs_iterative(w, reduced), bfgs_iterative(w, full));
          const KeyResiduals res = key_equation_residuals(w, full, result);
          return std::vector<ExperimentRecord>{
              record(i, "relative_error", err),
              record(i, "residual_triangular", res.triangular),
              record(i, "residual_b", res.b),
              record(i, "residual_quadratic", res.quadratic),
              record(i, "residual_curvature", res.curvature),
          };
        },
        [&](std::size_t i) { return record(i, "failure", 1.0); });

    std::vector<double> errors;
    for (const auto& r : cell.records) {
      if (r.metric == "relative_error") errors.push_back(r.value);
    }
    if (!errors.empty()) {
      const std::pair<const char*, double> stats[] = {
          {"min", 0.0}, {"q1", 0.25}, {"median", 0.5}, {"q3", 0.75}, {"max", 1.0}};
      for (const auto& [name, q] : stats) {
        cell.records.push_back({"equivalence", options.seed, n, m, -1,
                                std::string(name) + "_relative_error", quantile(errors, q)});
      }
    }
    append(all, std::move(cell));
  }
  return all;
}

ExperimentOutput run_accumulation(const std::vector<Index>& sizes, int extra_steps,
                                  int instances, const RunOptions& options) {
  if (instances < 1 || extra_steps < 0) {
    throw Error(ErrorCode::InvalidInput, "instances must be positive and extra steps nonnegative");
  }
  ExperimentOutput all;
  for (const Index n : sizes) {
    if (n < 1) throw Error(ErrorCode::InvalidInput, "sizes must be positive");
    const std::uint64_t stream = stream_id("accumulation:" + std::to_string(n));
    auto seed_of = [&](std::size_t i) { return derive_seed(options.seed, stream, i); };
    ExperimentOutput cell = run_instances(
        static_cast<std::size_t>(instances), options.jobs,
        [&, n](std::size_t i) {
          PairStreamSpec spec;
          spec.seed = seed_of(i);
          spec.n = n;
          spec.m = n;
          spec.steps = n + extra_steps;
          const PairStream data = mock_pair_sequence(spec, false);
          const InitialMatrix w = InitialMatrix::scaled_identity(n);
          SolverConfig config;
          config.mode = SolverMode::AggBFGS;
          config.memory = static_cast<std::size_t>(n);
          config.policy = StoragePolicy::Exact;
          PairStore store(w, config.memory);
          std::vector<ExperimentRecord> out;
          long aggregations = 0;
          for (std::size_t k = 0; k < data.pairs.size(); ++k) {
            const MemoryEdit edit = update_memory(store, data.pairs[k], config);
            if (edit.kind == MemoryEdit::Kind::Aggregate) ++aggregations;
            const auto step = static_cast<long>(k + 1);
            if (step < n) continue;
            const PairView history(data.pairs.data(), k + 1);
            const double err =
                relative_error(bfgs_iterative(w, store.pairs()), bfgs_iterative(w, history));
            out.push_back({"accumulation", spec.seed, n, n, step, "relative_error", err});
          }
          out.push_back({"accumulation", spec.seed, n, n, static_cast<long>(data.pairs.size()),
                         "aggregations", static_cast<double>(aggregations)});
          return out;
        },
        [&, n](std::size_t i) {
          return ExperimentRecord{"accumulation", seed_of(i), n, n, static_cast<long>(i),
                                  "failure", 1.0};
        });
    append(all, std::move(cell));
  }
  return all;
}

namespace {

/// Raw pairs of a FullBFGS run, one per accepted iteration.
PairList full_bfgs_history(const Problem& problem, int iterations) {
  SolverConfig config;
  config.mode = SolverMode::FullBFGS;
  config.max_iters = iterations;
  config.grad_tol = 1e-12;
  PairList history;
  minimize(problem, problem.x0, config,
           [&](const IterationView& view) { history.push_back(view.pair); });
  return history;
}

}  // namespace

ExperimentOutput run_lag_study(const std::string& problem_name, const std::vector<int>& lags,
                               int iterations, const RunOptions& options) {
  if (iterations < 1) throw Error(ErrorCode::InvalidInput, "iterations must be positive");
  for (const int j : lags) {
    if (j < 0) throw Error(ErrorCode::InvalidInput, "lags must be nonnegative");
  }
  const Problem problem = make_problem(problem_name);
  const PairList history = full_bfgs_history(problem, iterations);
  const InitialMatrix w = InitialMatrix::scaled_identity(problem.dim);
  ExperimentOutput out;
  for (const int j : lags) {
    const auto lag = static_cast<std::size_t>(j);
    for (std::size_t k = lag + 1; k <= history.size(); ++k) {
      const PairView all(history.data(), k);
      const PairView late(history.data() + lag, k - lag);
      const double err = relative_error(bfgs_iterative(w, late), bfgs_iterative(w, all));
      out.records.push_back({"lag:" + problem.name, options.seed, problem.dim,
                             static_cast<Index>(j), static_cast<long>(k), "relative_error", err});
    }
  }
  return out;
}

ExperimentOutput run_tracking(const std::string& problem_name, int iterations,
                              const RunOptions& options) {
  if (iterations < 1) throw Error(ErrorCode::InvalidInput, "iterations must be positive");
  const Problem problem = make_problem(problem_name);
  SolverConfig config;
  config.mode = SolverMode::AggBFGS;
  config.memory = static_cast<std::size_t>(problem.dim);
  config.policy = StoragePolicy::Exact;
  config.max_iters = iterations;
  config.grad_tol = 1e-12;
  PairList history;
  ExperimentOutput out;
  const std::string experiment = "tracking:" + problem.name;
  const Index n = problem.dim;
  minimize(problem, problem.x0, config, [&](const IterationView& view) {
    history.push_back(view.pair);
    const Matrix reference = bfgs_iterative(view.initial, history);
    const std::size_t keep = std::min(history.size(), config.memory);
    const PairView recent(history.data() + history.size() - keep, keep);
    out.records.push_back({experiment, options.seed, n, n, view.k, "agg_vs_bfgs",
                           relative_error(bfgs_iterative(view.initial, view.pairs), reference)});
    out.records.push_back({experiment, options.seed, n, n, view.k, "lbfgs_vs_bfgs",
                           relative_error(bfgs_iterative(view.initial, recent), reference)});
    out.records.push_back({experiment, options.seed, n, n, view.k, "aggregated",
                           view.edit.kind == MemoryEdit::Kind::Aggregate ? 1.0 : 0.0});
  });
  return out;
}

BenchmarkOutput run_benchmark(const std::vector<std::string>& suite,
                              const std::vector<SolverMode>& modes, const SolverConfig& base,
                              const RunOptions& options) {
  if (modes.empty()) throw Error(ErrorCode::InvalidInput, "no solver modes given");
  std::vector<Problem> problems;
  problems.reserve(suite.size());
  for (const auto& name : suite) problems.push_back(make_problem(name));
  base.validate();

  BenchmarkOutput bench;
  bench.modes = modes;
  bench.rows.resize(problems.size());
  const std::size_t tasks = problems.size() * modes.size();
  std::vector<SolverReport> reports(tasks);
  std::vector<char> failed(tasks, 1);
  bench.output = run_instances(
      tasks, options.jobs,
      [&](std::size_t t) {
        const Problem& problem = problems[t / modes.size()];
        const SolverMode mode = modes[t % modes.size()];
        SolverConfig config = base;
        config.mode = mode;
        SolverReport report = minimize(problem, problem.x0, config);
        const std::string experiment = "benchmark:" + problem.name;
        const std::string prefix = to_string(mode) + ".";
        const auto m = static_cast<Index>(config.memory);
        auto rec = [&](const std::string& field, double value) {
          return ExperimentRecord{experiment, options.seed, problem.dim, m, 0, prefix + field, value};
        };
        std::vector<ExperimentRecord> out{
            rec("iters", static_cast<double>(report.iters)),
            rec("funcs", static_cast<double>(report.funcs)),
            rec("aggs", static_cast<double>(report.aggs)),
            rec("fallbacks", static_cast<double>(report.fallbacks)),
            rec("converged", report.status == SolverStatus::Converged ? 1.0 : 0.0),
            rec("f", report.f),
            rec("grad_inf", report.grad_inf),
        };
        failed[t] = report.status == SolverStatus::Converged ? 0 : 1;
        reports[t] = std::move(report);
        return out;
      },
      [&](std::size_t t) {
        const Problem& problem = problems[t / modes.size()];
        return ExperimentRecord{"benchmark:" + problem.name, options.seed, problem.dim,
                                static_cast<Index>(base.memory), 0,
                                to_string(modes[t % modes.size()]) + ".failure", 1.0};
      });
  bench.output.failures = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));
  for (std::size_t p = 0; p < problems.size(); ++p) {
    BenchmarkRow& row = bench.rows[p];
    row.problem = problems[p].name;
    row.n = problems[p].dim;
    for (std::size_t s = 0; s < modes.size(); ++s) {
      row.reports.push_back(reports[p * modes.size() + s]);
      row.failed.push_back(failed[p * modes.size() + s] != 0);
    }
  }
  return bench;
}

void write_benchmark_table(std::ostream& out, const BenchmarkOutput& bench) {
  out << "name";
  for (const SolverMode mode : bench.modes) {
    const std::string m = to_string(mode);
    out << ',' << m << "_iters," << m << "_funcs," << m << "_aggs";
  }
  out << '\n';
  for (const auto& row : bench.rows) {
    out << row.problem;
    for (std::size_t s = 0; s < bench.modes.size(); ++s) {
      if (row.failed[s]) {
        out << ",---,---,---";
      } else {
        const SolverReport& r = row.reports[s];
        out << ',' << r.iters << ',' << r.funcs << ',' << r.aggs;
      }
    }
    out << '\n';
  }
}

ProfileInput read_measure_table(std::istream& in, const std::string& column_a,
                                const std::string& column_b) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream stream(line);
    std::string cell;
    while (std::getline(stream, cell, ',')) cells.push_back(cell);
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidInput, "empty measure table");
  const std::vector<std::string> header = split(line);
  auto find = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::InvalidInput, "missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ia = find(column_a);
  const std::size_t ib = find(column_b);
  auto measure = [](const std::string& cell) -> std::optional<double> {
    if (cell.empty() || cell == "---") return std::nullopt;
    try {
      std::size_t used = 0;
      const double v = std::stod(cell, &used);
      if (used != cell.size()) throw std::invalid_argument(cell);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidInput, "bad measure " + cell);
    }
  };
  ProfileInput input;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::InvalidInput, "row width differs from header: " + line);
    }
    input.problems.push_back(cells[0]);
    input.measure_a.push_back(measure(cells[ia]));
    input.measure_b.push_back(measure(cells[ib]));
  }
  return input;
}

}  // namespace aggbfgs
