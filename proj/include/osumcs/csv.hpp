#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "osumcs/glm.hpp"

namespace osumcs {

struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numeric CSV with a header row. The last column is the response, the rest
// are features. Constant feature columns are dropped (their names land in
// dropped_columns). Malformed input reports the 1-based row and column.
struct CsvTable {
  std::vector<std::string> feature_names;
  std::vector<std::string> dropped_columns;
  Mat X;
  Vec y;
};

CsvTable read_numeric_csv(const std::string& path);
CsvTable parse_numeric_csv(const std::string& text);  // for tests

}  // namespace osumcs
