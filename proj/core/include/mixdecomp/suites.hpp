#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace mixdecomp {

using Cell = std::variant<double, std::string>;

// Plot-ready table; every cell shares the table's provenance.
struct DataTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::string provenance;
};

struct SuiteOutcome {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  std::string threshold;
  std::string detail;
  std::uint64_t seed = 0;
  // Long format: one row per (parameter, quantity) cell.
  DataTable data;
};

std::vector<std::string> suite_names();

// Runs the named reproduction experiment; ConfigInvalid for unknown names.
SuiteOutcome run_suite(const std::string& name, std::uint64_t seed);
// Same, but throws SuiteFailed carrying measured vs threshold on failure.
SuiteOutcome reproduce_suite(const std::string& name, std::uint64_t seed);

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mixdecomp
