#include "osumcs/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace osumcs {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end != begin && (*(end - 1) == ' ' || *(end - 1) == '\t' ||
                          *(end - 1) == '\r'))
    --end;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw CsvError("non-numeric cell at row " + std::to_string(row) +
                   ", column " + std::to_string(col));
  return value;
}

}  // namespace

CsvTable parse_numeric_csv(const std::string& text) {
  std::stringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw CsvError("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_line(line);
  const std::size_t ncol = header.size();
  if (ncol < 2) throw CsvError("need at least one feature column and a response");

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != ncol)
      throw CsvError("ragged row " + std::to_string(lineno) + ": expected " +
                     std::to_string(ncol) + " cells, got " +
                     std::to_string(cells.size()));
    std::vector<double> vals(ncol);
    for (std::size_t c = 0; c < ncol; ++c)
      vals[c] = parse_cell(cells[c], lineno, c + 1);
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw CsvError("CSV has a header but no data rows");

  const std::size_t nfeat = ncol - 1;
  // constant feature columns carry no information and break the GLM fits
  std::vector<std::size_t> keep;
  std::vector<std::string> dropped;
  for (std::size_t c = 0; c < nfeat; ++c) {
    bool constant = true;
    for (std::size_t r = 1; r < rows.size() && constant; ++r)
      constant = rows[r][c] == rows[0][c];
    if (constant)
      dropped.push_back(header[c]);
    else
      keep.push_back(c);
  }
  if (keep.empty()) throw CsvError("all feature columns are constant");

  CsvTable table;
  table.dropped_columns = std::move(dropped);
  for (std::size_t c : keep) table.feature_names.push_back(header[c]);
  table.X.resize(static_cast<Eigen::Index>(rows.size()),
                 static_cast<Eigen::Index>(keep.size()));
  table.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t k = 0; k < keep.size(); ++k)
      table.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          rows[r][keep[k]];
    table.y(static_cast<Eigen::Index>(r)) = rows[r][nfeat];
  }
  return table;
}

CsvTable read_numeric_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError("cannot open CSV file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_numeric_csv(buf.str());
}

}  // namespace osumcs
