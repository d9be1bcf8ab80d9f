#include "aggbfgs/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "aggbfgs/error.hpp"
#include "aggbfgs/records.hpp"

namespace aggbfgs {

double morales_factor(double a, double b) { return -std::log2(a / b); }

ProfileData compute_profiles(const ProfileInput& input) {
  const std::size_t count = input.problems.size();
  if (input.measure_a.size() != count || input.measure_b.size() != count) {
    throw Error(ErrorCode::ShapeMismatch, "profile inputs differ in length");
  }
  ProfileData data;
  std::vector<std::optional<double>> log_ratio_a(count), log_ratio_b(count);
  std::vector<double> grid{0.0};
  for (std::size_t p = 0; p < count; ++p) {
    const auto& a = input.measure_a[p];
    const auto& b = input.measure_b[p];
    if (a) ++data.solved_a;
    if (b) ++data.solved_b;
    if (!a && !b) continue;
    const double ma = a ? std::max(*a, 1.0) : 0.0;
    const double mb = b ? std::max(*b, 1.0) : 0.0;
    const double best = a && b ? std::min(ma, mb) : (a ? ma : mb);
    if (a) {
      log_ratio_a[p] = std::log2(ma / best);
      grid.push_back(*log_ratio_a[p]);
    }
    if (b) {
      log_ratio_b[p] = std::log2(mb / best);
      grid.push_back(*log_ratio_b[p]);
    }
    if (a && b) {
      ++data.solved_both;
      data.factors.push_back({input.problems[p], morales_factor(ma, mb)});
    }
  }
  if (data.solved_both == 0) {
    throw Error(ErrorCode::EmptyIntersection, "no problem was solved by both solvers");
  }

  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const double total = static_cast<double>(count);
  for (const double alpha : grid) {
    std::size_t hit_a = 0;
    std::size_t hit_b = 0;
    for (std::size_t p = 0; p < count; ++p) {
      if (log_ratio_a[p] && *log_ratio_a[p] <= alpha) ++hit_a;
      if (log_ratio_b[p] && *log_ratio_b[p] <= alpha) ++hit_b;
    }
    data.curve.push_back({alpha, static_cast<double>(hit_a) / total,
                          static_cast<double>(hit_b) / total});
  }

  std::stable_sort(data.factors.begin(), data.factors.end(),
                   [](const OutperformingFactor& x, const OutperformingFactor& y) {
                     const double ax = std::abs(x.factor);
                     const double ay = std::abs(y.factor);
                     if (ax != ay) return ax > ay;
                     return x.problem < y.problem;
                   });
  return data;
}

void write_profile_curve(std::ostream& out, const ProfileData& data) {
  out << "alpha,fraction_a,fraction_b\n";
  for (const auto& point : data.curve) {
    out << format_double(point.alpha) << ',' << format_double(point.fraction_a) << ','
        << format_double(point.fraction_b) << '\n';
  }
}

void write_factors(std::ostream& out, const ProfileData& data) {
  out << "problem,factor\n";
  for (const auto& f : data.factors) out << f.problem << ',' << format_double(f.factor) << '\n';
}

}  // namespace aggbfgs
