#include "aggbfgs/solver.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "aggbfgs/aggregation.hpp"

namespace aggbfgs {

std::string to_string(SolverMode mode) {
  switch (mode) {
    case SolverMode::FullBFGS: return "full";
    case SolverMode::LBFGS: return "lbfgs";
    case SolverMode::AggBFGS: return "agg";
  }
  return "unknown";
}

SolverMode parse_mode(const std::string& text) {
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "full" || lower == "bfgs" || lower == "fullbfgs") return SolverMode::FullBFGS;
  if (lower == "lbfgs" || lower == "l-bfgs") return SolverMode::LBFGS;
  if (lower == "agg" || lower == "aggbfgs" || lower == "agg-bfgs") return SolverMode::AggBFGS;
  throw Error(ErrorCode::InvalidInput, "unknown solver mode " + text);
}

std::string to_string(MemoryEdit::Kind kind) {
  switch (kind) {
    case MemoryEdit::Kind::Append: return "append";
    case MemoryEdit::Kind::EvictOldest: return "evict_oldest";
    case MemoryEdit::Kind::ReplaceNewest: return "replace_newest";
    case MemoryEdit::Kind::Aggregate: return "aggregate";
    case MemoryEdit::Kind::Fallback: return "fallback";
  }
  return "unknown";
}

std::string to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::Converged: return "converged";
    case SolverStatus::IterLimit: return "iter_limit";
    case SolverStatus::LineSearchFailure: return "line_search_failure";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  if (memory < 1) throw Error(ErrorCode::InvalidInput, "memory must be at least 1");
  if (!(0.0 < tol_recent && tol_recent <= tol_oldest && tol_oldest < 1.0)) {
    throw Error(ErrorCode::InvalidInput, "tolerances must satisfy 0 < tol_recent <= tol_oldest < 1");
  }
  if (!(grad_tol > 0.0) || max_iters < 0) {
    throw Error(ErrorCode::InvalidInput, "gradient tolerance and iteration cap must be positive");
  }
  if (scaled_initial && mode == SolverMode::AggBFGS) {
    throw Error(ErrorCode::InvalidInput, "AggBFGS requires a fixed initial matrix");
  }
  wolfe.validate();
}

namespace {

/// Appends, dropping the oldest pairs while the store is full or the new
/// displacement is numerically dependent on what remains.
bool push_with_eviction(PairStore& store, const CurvaturePair& pair) {
  bool evicted = false;
  for (;;) {
    if (store.full()) {
      store.remove(0);
      evicted = true;
      continue;
    }
    try {
      store.push_back(pair);
      return evicted;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DependenceViolation || store.size() == 0) throw;
      store.remove(0);
      evicted = true;
    }
  }
}

struct Candidate {
  std::size_t j = 0;
  Vector s_hat;
  Vector tau;
};

std::optional<Candidate> find_candidate(const PairStore& store, const CurvaturePair& pair,
                                        const DependenceReport& report,
                                        const SolverConfig& config) {
  const PairList& stored = store.pairs();
  auto usable = [&](std::size_t j, const Vector& s_hat) {
    return s_hat.dot(stored[j].y) > 0.0;
  };
  if (config.policy == StoragePolicy::Exact) {
    if (report.kind != DependenceReport::Case::InSpan) return std::nullopt;
    Candidate c;
    c.j = report.j;
    c.tau = report.span_coefficients();
    c.s_hat = c.tau(c.tau.size() - 1) * pair.s;
    for (Index k = 0; k + 1 < c.tau.size(); ++k) {
      c.s_hat += c.tau(k) * stored[c.j + 1 + static_cast<std::size_t>(k)].s;
    }
    if (!usable(c.j, c.s_hat)) return std::nullopt;
    return c;
  }
  for (std::size_t j = stored.size(); j-- > 0;) {
    const double tol = j >= 1 ? config.tol_recent : config.tol_oldest;
    ProjectionTest test = store.project(j, pair.s, tol, report);
    if (!test.accept || !usable(j, test.s_hat)) continue;
    Candidate c;
    c.j = j;
    c.s_hat = std::move(test.s_hat);
    c.tau = std::move(test.coefficients);
    return c;
  }
  return std::nullopt;
}

}  // namespace

MemoryEdit update_memory(PairStore& store, const CurvaturePair& pair, const SolverConfig& config) {
  const DependenceReport report = store.observe(pair);
  MemoryEdit edit;
  if (report.kind == DependenceReport::Case::ParallelNewest) {
    store.remove(store.size() - 1);
    push_with_eviction(store, pair);
    edit.kind = MemoryEdit::Kind::ReplaceNewest;
    edit.index = store.size() - 1;
    return edit;
  }

  if (const auto candidate = find_candidate(store, pair, report, config)) {
    const std::size_t j = candidate->j;
    PairList extended = store.pairs();
    extended.push_back(pair);
    extended[j] = make_pair(candidate->s_hat, extended[j].y);
    try {
      const AggregationResult result = aggregate(store.initial(), extended, j, candidate->tau);
      const Index retained = result.y_tilde.cols() - 1;
      store.remove(j);
      if (retained > 0) store.replace_gradients(j, result.y_tilde.leftCols(retained));
      push_with_eviction(store, pair);
      edit.kind = MemoryEdit::Kind::Aggregate;
      edit.index = j;
      return edit;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ConstructionFailure &&
          e.code() != ErrorCode::DependenceViolation &&
          e.code() != ErrorCode::CurvatureViolation &&
          e.code() != ErrorCode::NotPositiveDefinite) {
        throw;
      }
      if (store.size() > 0) store.remove(0);
      push_with_eviction(store, pair);
      edit.kind = MemoryEdit::Kind::Fallback;
      edit.index = 0;
      return edit;
    }
  }

  edit.kind = push_with_eviction(store, pair) ? MemoryEdit::Kind::EvictOldest
                                               : MemoryEdit::Kind::Append;
  edit.index = store.size() - 1;
  return edit;
}

MemoryEdit update_memory(PairList& pairs, const CurvaturePair& pair, const SolverConfig& config) {
  MemoryEdit edit;
  if (pairs.size() >= config.memory) {
    pairs.erase(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(pairs.size() - config.memory + 1));
    edit.kind = MemoryEdit::Kind::EvictOldest;
  }
  pairs.push_back(pair);
  edit.index = pairs.size() - 1;
  return edit;
}

namespace {

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

/// H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T in rank-two form.
void dense_bfgs_update(Matrix& h, const CurvaturePair& pair) {
  const Vector hy = h * pair.y;
  const double yhy = pair.y.dot(hy);
  const double rho = pair.rho;
  h.noalias() -= rho * (hy * pair.s.transpose() + pair.s * hy.transpose());
  h.noalias() += (rho * rho * yhy + rho) * (pair.s * pair.s.transpose());
}

}  // namespace

SolverReport minimize(const Problem& problem, const Vector& x0, const SolverConfig& config,
                      const IterationObserver& observer) {
  config.validate();
  const Index n = problem.dim;
  if (x0.size() != n || !x0.allFinite()) {
    throw Error(ErrorCode::InvalidInput, "starting point must be finite with the problem dimension");
  }
  if (config.exact_line_search && !problem.hessian) {
    throw Error(ErrorCode::InvalidInput, "exact line search needs a quadratic problem");
  }
  const InitialMatrix w = config.initial_matrix ? *config.initial_matrix
                                                : InitialMatrix::scaled_identity(n);
  if (w.dim() != n) throw Error(ErrorCode::ShapeMismatch, "initial matrix dimension");

  SolverReport report;
  Vector x = x0;
  Vector g;
  double f = problem.evaluate(x, g);
  report.funcs = 1;
  const double threshold = config.grad_tol * std::max(1.0, inf_norm(g));

  Matrix dense;
  PairList lbfgs_pairs;
  std::optional<PairStore> store;
  switch (config.mode) {
    case SolverMode::FullBFGS: dense = w.dense(); break;
    case SolverMode::LBFGS: break;
    case SolverMode::AggBFGS: store.emplace(w, config.memory); break;
  }
  InitialMatrix scaled = w;

  auto direction = [&]() -> Vector {
    switch (config.mode) {
      case SolverMode::FullBFGS: return -(dense * g);
      case SolverMode::LBFGS: return -two_loop_apply(scaled, lbfgs_pairs, g);
      case SolverMode::AggBFGS: return -two_loop_apply(w, store->pairs(), g);
    }
    return Vector();
  };

  report.status = SolverStatus::IterLimit;
  long k = 0;
  for (;; ++k) {
    if (!(inf_norm(g) > threshold)) {
      report.status = SolverStatus::Converged;
      break;
    }
    if (k >= config.max_iters) break;

    Vector d = direction();
    double alpha = 0.0;
    double f_new = 0.0;
    Vector g_new;
    long evals = 0;
    if (config.exact_line_search) {
      if (!(g.dot(d) < 0.0)) {
        report.status = SolverStatus::LineSearchFailure;
        break;
      }
      alpha = exact_quadratic_step(*problem.hessian, g, d);
      f_new = problem.evaluate(x + alpha * d, g_new);
      evals = 1;
    } else {
      LineSearchResult ls;
      try {
        ls = weak_wolfe_search(problem, x, f, g, d, config.wolfe);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NotDescent) throw;
        report.status = SolverStatus::LineSearchFailure;
        break;
      }
      report.funcs += ls.func_evals;
      if (!ls.ok()) {
        report.status = SolverStatus::LineSearchFailure;
        break;
      }
      alpha = ls.alpha;
      f_new = ls.f_new;
      g_new = std::move(ls.g_new);
      evals = ls.func_evals;
    }
    if (config.exact_line_search) report.funcs += evals;

    Vector s = alpha * d;
    Vector y = g_new - g;
    x += s;
    f = f_new;
    g = std::move(g_new);

    MemoryEdit edit;
    std::optional<CurvaturePair> pair;
    if (s.dot(y) > 0.0 && s.squaredNorm() > 0.0) {
      pair = make_pair(std::move(s), std::move(y));
      switch (config.mode) {
        case SolverMode::FullBFGS: dense_bfgs_update(dense, *pair); break;
        case SolverMode::LBFGS:
          edit = update_memory(lbfgs_pairs, *pair, config);
          if (config.scaled_initial) {
            scaled = InitialMatrix::scaled_identity(n, pair->s.dot(pair->y) / pair->y.squaredNorm());
          }
          break;
        case SolverMode::AggBFGS:
          edit = update_memory(*store, *pair, config);
          if (edit.kind == MemoryEdit::Kind::Aggregate) ++report.aggs;
          if (edit.kind == MemoryEdit::Kind::Fallback) ++report.fallbacks;
          break;
      }
    }

    if (config.record_trace) {
      IterationRecord rec;
      rec.k = k + 1;
      rec.f = f;
      rec.grad_inf = inf_norm(g);
      rec.alpha = alpha;
      rec.func_evals = evals;
      rec.pairs = config.mode == SolverMode::LBFGS   ? lbfgs_pairs.size()
                  : config.mode == SolverMode::AggBFGS ? store->size()
                                                       : static_cast<std::size_t>(k + 1);
      rec.edit = edit;
      report.trace.push_back(rec);
    }
    if (observer && pair) {
      PairView view;
      if (config.mode == SolverMode::LBFGS) view = lbfgs_pairs;
      if (config.mode == SolverMode::AggBFGS) view = store->pairs();
      const InitialMatrix& init = config.mode == SolverMode::LBFGS ? scaled : w;
      observer(IterationView{k + 1, x, g, *pair, edit, init, view,
                             config.mode == SolverMode::FullBFGS ? &dense : nullptr});
    }
  }
  report.iters = k;
  report.x = x;
  report.f = f;
  report.grad_inf = inf_norm(g);
  return report;
}

}  // namespace aggbfgs
