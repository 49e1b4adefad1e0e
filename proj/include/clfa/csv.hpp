#pragma once

#include <optional>
#include <string>
#include <vector>

#include "clfa/types.hpp"

namespace clfa {

/// Full-precision, locale-independent rendering (%.17g); round-trips exactly.
std::string format_double(double v);

/// Strict parse of a complete token; rejects partial consumption and empties.
double parse_double(const std::string& token, const char* context);

struct CsvTable {
  std::vector<std::string> comments;  // leading lines starting with '#'
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Comma-separated, no quoting (fields must not contain commas); leading
/// '#' lines are collected as comments instead of data.
CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& comments,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

void write_matrix_csv(const std::string& path, const std::vector<std::string>& comments,
                      const MatrixXd& m, const std::vector<std::string>& col_labels,
                      const std::optional<std::pair<std::string, std::vector<std::string>>>&
                          row_label_column = std::nullopt);

/// Reads back a matrix written by write_matrix_csv; `has_row_labels` drops the
/// first column. Returns the column labels through `col_labels`.
MatrixXd read_matrix_csv(const std::string& path, bool has_row_labels,
                         std::vector<std::string>* col_labels = nullptr);

}  // namespace clfa
