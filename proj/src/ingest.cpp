#include "clfa/ingest.hpp"

#include <algorithm>
#include <cstdlib>

#include "clfa/csv.hpp"
#include "clfa/errors.hpp"

namespace clfa {

std::vector<Band> default_exclusion_bands() {
  return {{1592.0, 1720.0}, {2996.0, 3698.0}, {3818.0, 5010.0}};
}

std::vector<Band> read_bands_file(const std::string& path) {
  std::vector<Band> bands;
  const CsvTable table = read_csv(path);
  auto parse_row = [&](const std::vector<std::string>& fields) {
    std::vector<std::string> parts;
    if (fields.size() == 2) {
      parts = {fields[0], fields[1]};
    } else if (fields.size() == 1) {
      const std::size_t colon = fields[0].find(':');
      if (colon == std::string::npos) throw DataError(path + ": band needs lo:hi or lo,hi");
      parts = {fields[0].substr(0, colon), fields[0].substr(colon + 1)};
    } else {
      throw DataError(path + ": band needs exactly two endpoints");
    }
    Band b;
    b.lo = parse_double(parts[0], "band lo");
    b.hi = parse_double(parts[1], "band hi");
    if (!(b.lo < b.hi)) throw UsageError(path + ": band requires lo < hi");
    bands.push_back(b);
  };
  parse_row(table.header);  // bands files have no header row: every line is a band
  for (const auto& row : table.rows) parse_row(row);
  return bands;
}

static bool parses_as_number(const std::string& s, double* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return false;
  *out = v;
  return true;
}

std::map<std::string, GroupData> ingest_csv(const std::string& path, const IngestConfig& config) {
  for (const Band& b : config.exclusion_bands)
    if (!(b.lo < b.hi)) throw UsageError("exclusion band requires lo < hi");

  CsvTable table = read_csv(path);
  if (config.transpose) {
    // rows = wavelengths, first column = wavenumber: flip to rows = samples
    CsvTable flipped;
    flipped.header.push_back(table.header.empty() ? "id" : table.header[0]);
    for (const auto& row : table.rows) flipped.header.push_back(row.at(0));
    const std::size_t n_samples = table.header.size() - 1;
    for (std::size_t s = 0; s < n_samples; ++s) {
      std::vector<std::string> row;
      row.push_back(table.header[s + 1]);
      for (const auto& src : table.rows) row.push_back(src.at(s + 1));
      flipped.rows.push_back(std::move(row));
    }
    table = std::move(flipped);
  }

  // classify columns: numeric headers are wavenumbers
  std::vector<std::size_t> spectral_cols;
  std::vector<double> wavenumbers;
  std::ptrdiff_t group_col = -1;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    double wn = 0.0;
    if (parses_as_number(table.header[c], &wn)) {
      bool excluded = false;
      for (const Band& b : config.exclusion_bands)
        if (wn >= b.lo && wn <= b.hi) {
          excluded = true;
          break;
        }
      if (!excluded) {
        spectral_cols.push_back(c);
        wavenumbers.push_back(wn);
      }
    } else if (!config.group_by.empty() && table.header[c] == config.group_by) {
      group_col = static_cast<std::ptrdiff_t>(c);
    }
  }
  if (spectral_cols.empty()) throw DataError(path + ": no spectral columns outside exclusion bands");
  if (!config.group_by.empty() && group_col < 0)
    throw UsageError(path + ": group-by column '" + config.group_by + "' not found");
  if (table.rows.size() < 2) throw DataError(path + ": need at least 2 samples");

  std::vector<std::string> labels(spectral_cols.size());
  for (std::size_t j = 0; j < spectral_cols.size(); ++j) labels[j] = table.header[spectral_cols[j]];

  // group membership per row
  std::map<std::string, std::vector<int>> members;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::string g = group_col >= 0 ? table.rows[r][static_cast<std::size_t>(group_col)] : "all";
    const auto mapped = config.label_map.find(g);
    if (mapped != config.label_map.end()) g = mapped->second;
    members[g].push_back(static_cast<int>(r));
  }
  for (const auto& [g, rows] : members)
    if (rows.size() < 2)
      throw UsageError(path + ": group '" + g + "' has fewer than 2 samples");

  std::map<std::string, GroupData> out;
  for (const auto& [g, rows] : members) {
    GroupData gd;
    gd.row_indices = rows;
    gd.data.variable_labels = labels;
    gd.data.values.resize(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(spectral_cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < spectral_cols.size(); ++j) {
        const std::string& cell = table.rows[static_cast<std::size_t>(rows[i])][spectral_cols[j]];
        double v = 0.0;
        if (!parses_as_number(cell, &v))
          throw DataError(path + ": non-numeric value '" + cell + "' at row " +
                          std::to_string(rows[i] + 2) + ", column '" + labels[j] + "'");
        gd.data.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      }
    center_columns(gd.data);
    gd.data.validate();
    out.emplace(g, std::move(gd));
  }
  return out;
}

}  // namespace clfa
