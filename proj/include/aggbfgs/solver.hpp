#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "aggbfgs/bfgs_forms.hpp"
#include "aggbfgs/linesearch.hpp"
#include "aggbfgs/pairs.hpp"
#include "aggbfgs/problems.hpp"

namespace aggbfgs {

enum class SolverMode { FullBFGS, LBFGS, AggBFGS };

/// How AggBFGS chooses the pair to aggregate.
enum class StoragePolicy {
  /// Scan j = newest stored down to oldest with projection tolerances
  /// tol_recent (j >= 1) and tol_oldest (j = 0); first acceptance wins.
  Adaptive,
  /// Aggregate only when the new displacement is exactly dependent on the
  /// stored ones, as revealed by the Gram factor downdate.
  Exact,
};

std::string to_string(SolverMode mode);
/// Parses "full", "lbfgs" or "agg" (case-insensitive). Throws InvalidInput.
SolverMode parse_mode(const std::string& text);

struct SolverConfig {
  SolverMode mode = SolverMode::LBFGS;
  std::size_t memory = 5;
  double grad_tol = 1e-6;
  long max_iters = 100000;
  double tol_recent = 1e-8;
  double tol_oldest = 1e-1;
  WolfeParams wolfe;
  /// Identity of the problem dimension when unset.
  std::optional<InitialMatrix> initial_matrix;
  /// LBFGS only: gamma_k = s^T y / y^T y of the newest pair.
  bool scaled_initial = false;
  StoragePolicy policy = StoragePolicy::Adaptive;
  /// Uses exact_quadratic_step with the problem's constant Hessian.
  bool exact_line_search = false;
  bool record_trace = false;

  /// Throws InvalidInput on violated invariants.
  void validate() const;
};

/// What update_memory did with a new pair.
struct MemoryEdit {
  enum class Kind {
    Append,         ///< room available (or FullBFGS)
    EvictOldest,    ///< oldest pair dropped, new pair appended
    ReplaceNewest,  ///< new displacement parallel to the newest stored one
    Aggregate,      ///< pair `index` aggregated away, new pair appended
    Fallback,       ///< aggregation failed, oldest pair dropped instead
  };

  Kind kind = Kind::Append;
  std::size_t index = 0;
};

std::string to_string(MemoryEdit::Kind kind);

/// Applies the AggBFGS storage rules for one new pair.
MemoryEdit update_memory(PairStore& store, const CurvaturePair& pair, const SolverConfig& config);

/// L-BFGS storage: append, dropping the oldest pair beyond `memory`.
MemoryEdit update_memory(PairList& pairs, const CurvaturePair& pair, const SolverConfig& config);

enum class SolverStatus { Converged, IterLimit, LineSearchFailure };

std::string to_string(SolverStatus status);

struct IterationRecord {
  long k = 0;
  double f = 0.0;
  double grad_inf = 0.0;
  double alpha = 0.0;
  long func_evals = 0;
  std::size_t pairs = 0;
  MemoryEdit edit;
};

struct SolverReport {
  long iters = 0;
  long funcs = 0;
  long aggs = 0;
  long fallbacks = 0;
  SolverStatus status = SolverStatus::IterLimit;
  Vector x;
  double f = 0.0;
  double grad_inf = 0.0;
  std::vector<IterationRecord> trace;
};

/// State handed to an observer after each accepted iteration.
struct IterationView {
  long k = 0;
  const Vector& x;
  const Vector& g;
  const CurvaturePair& pair;  ///< raw pair of this iteration
  MemoryEdit edit;
  const InitialMatrix& initial;
  PairView pairs;        ///< stored pairs (limited modes)
  const Matrix* dense;   ///< inverse Hessian (FullBFGS), otherwise null
};

using IterationObserver = std::function<void(const IterationView&)>;

/// Line-search quasi-Newton minimization with d_k = -W_k g_k. Stops when
/// ||g_k||_inf <= grad_tol * max(1, ||g_0||_inf).
SolverReport minimize(const Problem& problem, const Vector& x0, const SolverConfig& config,
                      const IterationObserver& observer = {});

}  // namespace aggbfgs
