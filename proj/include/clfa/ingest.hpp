#pragma once

#include <map>
#include <string>
#include <vector>

#include "clfa/types.hpp"

namespace clfa {

struct Band {
  double lo = 0.0, hi = 0.0;
};

/// Noisy MIR regions excluded by default, cm^-1, inclusive.
std::vector<Band> default_exclusion_bands();

/// Parses "lo:hi" per line (or lo,hi), '#' comments allowed.
std::vector<Band> read_bands_file(const std::string& path);

struct IngestConfig {
  std::string group_by;                         // empty: single group
  std::vector<Band> exclusion_bands;            // inclusive [lo, hi]
  std::map<std::string, std::string> label_map; // group label remapping (e.g. GRS -> Pasture)
  bool transpose = false;                       // input has rows = wavelengths
};

struct GroupData {
  DataMatrix data;               // centered within the group
  std::vector<int> row_indices;  // 0-based rows of the input file, for alignment
};

/// Header cells that parse as numbers are wavenumber columns; the rest are
/// metadata. Excluded bands are dropped, then each group is centered.
std::map<std::string, GroupData> ingest_csv(const std::string& path, const IngestConfig& config);

}  // namespace clfa
