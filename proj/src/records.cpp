#include "aggbfgs/records.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "aggbfgs/error.hpp"

namespace aggbfgs {

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

namespace {

double parse_double(const std::string& text) {
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::InvalidInput, "bad number in record: " + text);
  }
  return value;
}

template <typename Int>
Int parse_int(const std::string& text) {
  Int value = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::InvalidInput, "bad integer in record: " + text);
  }
  return value;
}

constexpr const char* kHeader = "experiment,seed,n,m,k,metric,value";

}  // namespace

void write_csv(std::ostream& out, const std::vector<ExperimentRecord>& records) {
  out << kHeader << '\n';
  for (const auto& r : records) {
    out << r.experiment << ',' << r.seed << ',' << r.n << ',' << r.m << ',' << r.k << ','
        << r.metric << ',' << format_double(r.value) << '\n';
  }
}

std::vector<ExperimentRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw Error(ErrorCode::InvalidInput, "missing record header");
  }
  std::vector<ExperimentRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream stream(line);
    std::string cell;
    while (std::getline(stream, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw Error(ErrorCode::InvalidInput, "record needs 7 columns: " + line);
    ExperimentRecord r;
    r.experiment = cells[0];
    r.seed = parse_int<std::uint64_t>(cells[1]);
    r.n = parse_int<Index>(cells[2]);
    r.m = parse_int<Index>(cells[3]);
    r.k = parse_int<long>(cells[4]);
    r.metric = cells[5];
    r.value = parse_double(cells[6]);
    records.push_back(std::move(r));
  }
  return records;
}

void write_json(std::ostream& out, const std::vector<ExperimentRecord>& records) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    nlohmann::ordered_json row;
    row["experiment"] = r.experiment;
    row["seed"] = r.seed;
    row["n"] = r.n;
    row["m"] = r.m;
    row["k"] = r.k;
    row["metric"] = r.metric;
    row["value"] = r.value;
    doc.push_back(std::move(row));
  }
  out << doc.dump(1) << '\n';
}

std::vector<ExperimentRecord> read_json(std::istream& in) {
  const nlohmann::json doc = nlohmann::json::parse(in);
  std::vector<ExperimentRecord> records;
  for (const auto& row : doc) {
    ExperimentRecord r;
    r.experiment = row.at("experiment").get<std::string>();
    r.seed = row.at("seed").get<std::uint64_t>();
    r.n = row.at("n").get<Index>();
    r.m = row.at("m").get<Index>();
    r.k = row.at("k").get<long>();
    r.metric = row.at("metric").get<std::string>();
    r.value = row.at("value").get<double>();
    records.push_back(std::move(r));
  }
  return records;
}

double relative_error(const Matrix& a, const Matrix& ref) {
  if (a.rows() != ref.rows() || a.cols() != ref.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "matrices differ in shape");
  }
  const double scale = linalg::max_abs(ref);
  if (!(scale > 0.0)) throw Error(ErrorCode::ZeroReference, "reference matrix is zero");
  return linalg::max_abs(a - ref) / scale;
}

}  // namespace aggbfgs
