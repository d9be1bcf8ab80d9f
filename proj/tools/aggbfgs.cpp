#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "aggbfgs/experiments.hpp"
#include "aggbfgs/problems.hpp"
#include "aggbfgs/profiles.hpp"

namespace {

using aggbfgs::Error;
using aggbfgs::ErrorCode;
using aggbfgs::ExperimentOutput;
using aggbfgs::Index;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

Index parse_index(const std::string& text) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size() || v < 1) throw std::invalid_argument(text);
    return static_cast<Index>(v);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidInput, "expected a positive integer, got '" + text + "'");
  }
}

/// "4,8,16" means every (n, m) from the list with m <= n; "8x4" items name
/// single cells.
std::vector<std::pair<Index, Index>> parse_grid(const std::string& text) {
  std::vector<Index> sizes;
  std::vector<std::pair<Index, Index>> cells;
  for (const auto& item : split_list(text)) {
    const auto x = item.find('x');
    if (x == std::string::npos) {
      sizes.push_back(parse_index(item));
    } else {
      cells.emplace_back(parse_index(item.substr(0, x)), parse_index(item.substr(x + 1)));
    }
  }
  auto grid = aggbfgs::square_grid(sizes);
  grid.insert(grid.end(), cells.begin(), cells.end());
  if (grid.empty()) throw Error(ErrorCode::InvalidInput, "empty grid");
  return grid;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + path);
  return out;
}

/// Writes <out>.csv and <out>.json, or CSV to stdout without --out.
void emit(const ExperimentOutput& result, const std::string& out_prefix) {
  if (out_prefix.empty()) {
    aggbfgs::write_csv(std::cout, result.records);
    return;
  }
  auto csv = open_output(out_prefix + ".csv");
  aggbfgs::write_csv(csv, result.records);
  auto json = open_output(out_prefix + ".json");
  aggbfgs::write_json(json, result.records);
}

void emit_profiles(const aggbfgs::ProfileData& data, const std::string& out_prefix) {
  if (out_prefix.empty()) {
    aggbfgs::write_profile_curve(std::cout, data);
    std::cout << '\n';
    aggbfgs::write_factors(std::cout, data);
    return;
  }
  auto curve = open_output(out_prefix + "_profile.csv");
  aggbfgs::write_profile_curve(curve, data);
  auto factors = open_output(out_prefix + "_factors.csv");
  aggbfgs::write_factors(factors, data);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-Newton displacement aggregation experiments"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string out;
  unsigned jobs = 1;
  app.add_option("--seed", seed, "Base seed")->capture_default_str();
  app.add_option("--out", out, "Output path prefix (CSV and JSON); stdout when omitted");
  app.add_option("--jobs", jobs, "Worker threads (0 = hardware concurrency)")->capture_default_str();

  std::string grid = "4,8,16,32";
  int instances = 100;
  auto* equivalence = app.add_subcommand("equivalence", "Single-aggregation equivalence");
  equivalence->add_option("--grid", grid, "Sizes (all m <= n) or nxm cells, comma separated")
      ->capture_default_str();
  equivalence->add_option("--instances", instances, "Instances per cell")->capture_default_str();

  std::string sizes = "8,32,128";
  int extra_steps = 8;
  auto* accumulation = app.add_subcommand("accumulation", "Error accumulation over repeated aggregation");
  accumulation->add_option("--grid", sizes, "Sizes n = m, comma separated")->capture_default_str();
  accumulation->add_option("--instances", instances, "Instances per size")->capture_default_str();
  accumulation->add_option("--extra-steps", extra_steps, "Steps beyond n")->capture_default_str();

  std::string problem = "rosenbrock";
  std::string lags = "1,2,3";
  int iterations = 100;
  auto* lag = app.add_subcommand("lag", "BFGS started j iterations late vs full BFGS");
  lag->add_option("--problem", problem, "Registered problem name")->capture_default_str();
  lag->add_option("--lags", lags, "Lags j, comma separated")->capture_default_str();
  lag->add_option("--iterations", iterations, "Iteration cap")->capture_default_str();

  auto* tracking = app.add_subcommand("tracking", "Aggregated and L-BFGS models vs full BFGS");
  tracking->add_option("--problem", problem, "Registered problem name")->capture_default_str();
  tracking->add_option("--iterations", iterations, "Iteration cap")->capture_default_str();

  std::string suite = "default";
  std::string modes = "agg,lbfgs";
  std::size_t memory = 5;
  double tol_recent = 1e-8;
  double tol_oldest = 1e-1;
  long max_iters = 100000;
  auto* benchmark = app.add_subcommand("benchmark", "Run solvers over the problem suite");
  benchmark->add_option("--suite", suite, "'default' or comma separated problem names")
      ->capture_default_str();
  benchmark->add_option("--mode", modes, "Solver modes: agg, lbfgs, full")->capture_default_str();
  benchmark->add_option("--memory", memory, "Stored pairs")->capture_default_str();
  benchmark->add_option("--tol-recent", tol_recent, "Projection tolerance for pairs newer than the oldest")
      ->capture_default_str();
  benchmark->add_option("--tol-oldest", tol_oldest, "Projection tolerance for the oldest pair")
      ->capture_default_str();
  benchmark->add_option("--max-iters", max_iters, "Iteration cap")->capture_default_str();

  std::string input;
  std::string column_a = "agg_iters";
  std::string column_b = "lbfgs_iters";
  auto* profiles = app.add_subcommand("profiles", "Dolan-More curves and Morales factors");
  profiles->add_option("--input", input, "Measure table CSV")->required();
  profiles->add_option("--a", column_a, "Column of solver A")->capture_default_str();
  profiles->add_option("--b", column_b, "Column of solver B")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    aggbfgs::RunOptions options;
    options.seed = seed;
    options.jobs = jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : jobs;

    ExperimentOutput result;
    if (equivalence->parsed()) {
      result = aggbfgs::run_equivalence(parse_grid(grid), instances, options);
    } else if (accumulation->parsed()) {
      std::vector<Index> ns;
      for (const auto& item : split_list(sizes)) ns.push_back(parse_index(item));
      result = aggbfgs::run_accumulation(ns, extra_steps, instances, options);
    } else if (lag->parsed()) {
      std::vector<int> js;
      for (const auto& item : split_list(lags)) {
        try {
          js.push_back(std::stoi(item));
        } catch (const std::exception&) {
          throw Error(ErrorCode::InvalidInput, "bad lag '" + item + "'");
        }
      }
      result = aggbfgs::run_lag_study(problem, js, iterations, options);
    } else if (tracking->parsed()) {
      result = aggbfgs::run_tracking(problem, iterations, options);
    } else if (benchmark->parsed()) {
      aggbfgs::SolverConfig config;
      config.memory = memory;
      config.tol_recent = tol_recent;
      config.tol_oldest = tol_oldest;
      config.max_iters = max_iters;
      std::vector<aggbfgs::SolverMode> mode_list;
      for (const auto& item : split_list(modes)) mode_list.push_back(aggbfgs::parse_mode(item));
      const std::vector<std::string> names =
          suite == "default" ? aggbfgs::suite_names() : split_list(suite);
      const aggbfgs::BenchmarkOutput bench =
          aggbfgs::run_benchmark(names, mode_list, config, options);
      result = bench.output;
      if (!out.empty()) {
        auto table = open_output(out + "_table.csv");
        aggbfgs::write_benchmark_table(table, bench);
        if (mode_list.size() >= 2) {
          std::stringstream buffer;
          aggbfgs::write_benchmark_table(buffer, bench);
          const std::string a = aggbfgs::to_string(mode_list[0]);
          const std::string b = aggbfgs::to_string(mode_list[1]);
          for (const char* measure : {"iters", "funcs"}) {
            std::stringstream copy(buffer.str());
            const auto data = aggbfgs::compute_profiles(aggbfgs::read_measure_table(
                copy, a + "_" + measure, b + "_" + measure));
            emit_profiles(data, out + "_" + measure);
          }
        }
      }
    } else if (profiles->parsed()) {
      std::ifstream in(input);
      if (!in) throw Error(ErrorCode::InvalidInput, "cannot read " + input);
      emit_profiles(aggbfgs::compute_profiles(aggbfgs::read_measure_table(in, column_a, column_b)),
                    out);
      return 0;
    }
    emit(result, out);
    return result.failures > 0 ? 2 : 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::InvalidInput || e.code() == ErrorCode::UnknownProblem ||
                   e.code() == ErrorCode::EmptyIntersection
               ? 1
               : 2;
  }
}
