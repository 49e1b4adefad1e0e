#include "clfa/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "clfa/errors.hpp"

namespace clfa {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& token, const char* context) {
  if (token.empty()) throw DataError(std::string(context) + ": empty numeric field");
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size())
    throw DataError(std::string(context) + ": not a number: '" + token + "'");
  return v;
}

static std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      table.comments.push_back(line);
      continue;
    }
    if (!have_header) {
      table.header = split_line(line);
      have_header = true;
      continue;
    }
    std::vector<std::string> fields = split_line(line);
    if (fields.size() != table.header.size())
      throw DataError(path + ": row " + std::to_string(table.rows.size() + 2) + " has " +
                      std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(table.header.size()));
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) throw DataError(path + ": missing header row");
  return table;
}

static void check_field(const std::string& f) {
  if (f.find(',') != std::string::npos || f.find('\n') != std::string::npos)
    throw UsageError("csv field contains a separator: '" + f + "'");
}

void write_csv(const std::string& path, const std::vector<std::string>& comments,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  for (const std::string& c : comments) out << (c.rfind('#', 0) == 0 ? "" : "# ") << c << '\n';
  std::ostringstream line;
  for (std::size_t i = 0; i < header.size(); ++i) {
    check_field(header[i]);
    line << (i ? "," : "") << header[i];
  }
  out << line.str() << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw UsageError("csv row width disagrees with header");
    line.str("");
    for (std::size_t i = 0; i < row.size(); ++i) {
      check_field(row[i]);
      line << (i ? "," : "") << row[i];
    }
    out << line.str() << '\n';
  }
  if (!out) throw DataError("write failed for " + path);
}

void write_matrix_csv(const std::string& path, const std::vector<std::string>& comments,
                      const MatrixXd& m, const std::vector<std::string>& col_labels,
                      const std::optional<std::pair<std::string, std::vector<std::string>>>&
                          row_label_column) {
  if (static_cast<Eigen::Index>(col_labels.size()) != m.cols())
    throw UsageError("write_matrix_csv: label count != columns");
  std::vector<std::string> header;
  if (row_label_column) {
    if (static_cast<Eigen::Index>(row_label_column->second.size()) != m.rows())
      throw UsageError("write_matrix_csv: row label count != rows");
    header.push_back(row_label_column->first);
  }
  header.insert(header.end(), col_labels.begin(), col_labels.end());

  std::vector<std::vector<std::string>> rows;
  rows.reserve(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> row;
    row.reserve(header.size());
    if (row_label_column) row.push_back(row_label_column->second[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(format_double(m(i, j)));
    rows.push_back(std::move(row));
  }
  write_csv(path, comments, header, rows);
}

MatrixXd read_matrix_csv(const std::string& path, bool has_row_labels,
                         std::vector<std::string>* col_labels) {
  const CsvTable table = read_csv(path);
  const std::size_t skip = has_row_labels ? 1 : 0;
  if (table.header.size() < skip + 1) throw DataError(path + ": no data columns");
  const std::size_t cols = table.header.size() - skip;
  if (col_labels) col_labels->assign(table.header.begin() + static_cast<std::ptrdiff_t>(skip), table.header.end());
  MatrixXd m(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          parse_double(table.rows[i][j + skip], path.c_str());
  return m;
}

}  // namespace clfa
