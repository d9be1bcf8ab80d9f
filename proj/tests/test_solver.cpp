#include "doctest.h"

#include "aggbfgs/bfgs_forms.hpp"
#include "aggbfgs/records.hpp"
#include "aggbfgs/solver.hpp"

using namespace aggbfgs;

namespace {

SolverConfig config_for(SolverMode mode) {
  SolverConfig config;
  config.mode = mode;
  return config;
}

}  // namespace

TEST_CASE("mode names round trip") {
  for (SolverMode mode : {SolverMode::FullBFGS, SolverMode::LBFGS, SolverMode::AggBFGS}) {
    CHECK(parse_mode(to_string(mode)) == mode);
  }
  CHECK(parse_mode("AGG") == SolverMode::AggBFGS);
  CHECK_THROWS_AS(parse_mode("newton"), Error);
}

TEST_CASE("config validation") {
  SolverConfig config;
  config.memory = 0;
  CHECK_THROWS_AS(config.validate(), Error);
  config = SolverConfig{};
  config.tol_oldest = 1.5;
  CHECK_THROWS_AS(config.validate(), Error);
  config = SolverConfig{};
  config.grad_tol = 0.0;
  CHECK_THROWS_AS(config.validate(), Error);
}

TEST_CASE("half squared norm converges in one iteration") {
  const Problem p = make_problem("sphere:6");
  Vector x0 = Vector::Unit(6, 0);
  for (SolverMode mode : {SolverMode::FullBFGS, SolverMode::LBFGS, SolverMode::AggBFGS}) {
    CAPTURE(to_string(mode));
    const SolverReport report = minimize(p, x0, config_for(mode));
    CHECK(report.status == SolverStatus::Converged);
    CHECK(report.iters == 1);
    CHECK(report.aggs == 0);
    CHECK(report.x.norm() == 0.0);
  }
}

TEST_CASE("Rosenbrock converges to (1, 1) in every mode") {
  const Problem p = rosenbrock(RosenbrockVariant::Classic2d);
  for (SolverMode mode : {SolverMode::FullBFGS, SolverMode::LBFGS, SolverMode::AggBFGS}) {
    CAPTURE(to_string(mode));
    SolverConfig config = config_for(mode);
    config.grad_tol = 1e-10;
    const SolverReport report = minimize(p, p.x0, config);
    CHECK(report.status == SolverStatus::Converged);
    CHECK((report.x - Vector::Ones(2)).norm() <= 1e-6);
    CHECK(report.funcs >= report.iters);
  }
}

TEST_CASE("FullBFGS with exact steps has the n-step property on a mild quadratic") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Problem p = random_spd_quadratic(10, 100.0, seed);
    SolverConfig config = config_for(SolverMode::FullBFGS);
    config.exact_line_search = true;
    config.grad_tol = 1e-14;
    config.max_iters = 11;
    double g0 = p.gradient(p.x0).lpNorm<Eigen::Infinity>();
    const SolverReport report = minimize(p, p.x0, config);
    CHECK(report.grad_inf <= 1e-8 * g0);
  }
}

TEST_CASE("LBFGS with unbounded memory reproduces FullBFGS") {
  const Problem p = make_problem("chained_rosenbrock:6");
  SolverConfig full = config_for(SolverMode::FullBFGS);
  SolverConfig limited = config_for(SolverMode::LBFGS);
  limited.memory = 1000;
  full.max_iters = limited.max_iters = 12;
  const SolverReport a = minimize(p, p.x0, full);
  const SolverReport b = minimize(p, p.x0, limited);
  CHECK(a.iters == b.iters);
  CHECK((a.x - b.x).norm() <= 1e-8 * a.x.norm());
}

TEST_CASE("AggBFGS with memory n tracks the full-history model") {
  const Problem p = rosenbrock(RosenbrockVariant::Classic2d);
  SolverConfig config = config_for(SolverMode::AggBFGS);
  config.memory = 2;
  config.policy = StoragePolicy::Exact;
  PairList history;
  double worst = 0.0;
  long aggregated = 0;
  const SolverReport report = minimize(p, p.x0, config, [&](const IterationView& view) {
    history.push_back(view.pair);
    if (view.edit.kind == MemoryEdit::Kind::Aggregate) ++aggregated;
    const Matrix full = bfgs_iterative(view.initial, history);
    worst = std::max(worst, relative_error(bfgs_iterative(view.initial, view.pairs), full));
  });
  CHECK(report.status == SolverStatus::Converged);
  CHECK(aggregated > 0);
  CHECK(report.aggs == aggregated);
  CHECK(worst <= 1e-8);
}

TEST_CASE("update_memory storage cases") {
  Vector e0 = Vector::Unit(3, 0);
  Vector e1 = Vector::Unit(3, 1);
  SolverConfig config = config_for(SolverMode::AggBFGS);
  config.memory = 2;
  PairStore store(InitialMatrix::scaled_identity(3), 2);
  CHECK(update_memory(store, make_pair(e0, e0), config).kind == MemoryEdit::Kind::Append);
  CHECK(update_memory(store, make_pair(e1, e1), config).kind == MemoryEdit::Kind::Append);
  const MemoryEdit parallel = update_memory(store, make_pair(3.0 * e1, 2.0 * e1), config);
  CHECK(parallel.kind == MemoryEdit::Kind::ReplaceNewest);
  CHECK(store.size() == 2);
  CHECK(store.pairs()[1].s(1) == 3.0);
  const MemoryEdit evict = update_memory(store, make_pair(Vector::Unit(3, 2), Vector::Unit(3, 2)), config);
  CHECK(evict.kind == MemoryEdit::Kind::EvictOldest);
  CHECK(store.pairs()[0].s(1) == 3.0);

  PairList list;
  SolverConfig lconfig = config_for(SolverMode::LBFGS);
  lconfig.memory = 2;
  CHECK(update_memory(list, make_pair(e0, e0), lconfig).kind == MemoryEdit::Kind::Append);
  CHECK(update_memory(list, make_pair(e1, e1), lconfig).kind == MemoryEdit::Kind::Append);
  CHECK(update_memory(list, make_pair(e0 + e1, e0 + e1), lconfig).kind ==
        MemoryEdit::Kind::EvictOldest);
  CHECK(list.size() == 2);
  CHECK(list.front().s(1) == 1.0);
}

TEST_CASE("full store with a planted dependence aggregates the oldest pair") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    PairStreamSpec spec;
    spec.seed = 100 + seed;
    spec.n = 10;
    spec.m = 5;
    spec.steps = 5;
    const PairStream data = mock_pair_sequence(spec, false);
    SolverConfig config = config_for(SolverMode::AggBFGS);
    config.memory = 5;
    const InitialMatrix w = InitialMatrix::scaled_identity(10);
    PairStore store(w, 5);
    for (const auto& pair : data.pairs) store.push_back(pair);

    // s_0 = 0.8 s_1 - 0.5 s_2 + 0.3 s_3 + 1.2 s_4 + c s_new.
    const double c = 0.7;
    Vector s_new = data.pairs[0].s - 0.8 * data.pairs[1].s + 0.5 * data.pairs[2].s -
                   0.3 * data.pairs[3].s - 1.2 * data.pairs[4].s;
    s_new /= c;
    const CurvaturePair fresh = make_pair(s_new, data.hessian * s_new);
    PairList all = data.pairs;
    all.push_back(fresh);

    const MemoryEdit edit = update_memory(store, fresh, config);
    CHECK(edit.kind == MemoryEdit::Kind::Aggregate);
    CHECK(edit.index == 0);
    CHECK(store.size() == 5);
    CHECK(relative_error(bfgs_iterative(w, store.pairs()), bfgs_iterative(w, all)) <= 1e-8);
    CHECK((store.pairs().back().y.array() == fresh.y.array()).all());
  }
}

TEST_CASE("trace recording") {
  const Problem p = rosenbrock(RosenbrockVariant::Classic2d);
  SolverConfig config = config_for(SolverMode::LBFGS);
  config.record_trace = true;
  const SolverReport report = minimize(p, p.x0, config);
  CHECK(static_cast<long>(report.trace.size()) == report.iters);
  for (std::size_t k = 1; k < report.trace.size(); ++k) {
    CHECK(report.trace[k].f <= report.trace[k - 1].f);
  }
}
