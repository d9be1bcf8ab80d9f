#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "aggbfgs/linalg.hpp"

namespace aggbfgs {

/// One measured value of an experiment.
struct ExperimentRecord {
  std::string experiment;
  std::uint64_t seed = 0;
  Index n = 0;
  Index m = 0;
  long k = 0;
  std::string metric;
  double value = 0.0;

  bool operator==(const ExperimentRecord&) const = default;
};

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

/// CSV with header experiment,seed,n,m,k,metric,value.
void write_csv(std::ostream& out, const std::vector<ExperimentRecord>& records);
std::vector<ExperimentRecord> read_csv(std::istream& in);

/// JSON array of objects with the CSV column names as keys.
void write_json(std::ostream& out, const std::vector<ExperimentRecord>& records);
std::vector<ExperimentRecord> read_json(std::istream& in);

/// max_ij |a - ref| / max_ij |ref|. Throws ShapeMismatch or ZeroReference.
double relative_error(const Matrix& a, const Matrix& ref);

}  // namespace aggbfgs
