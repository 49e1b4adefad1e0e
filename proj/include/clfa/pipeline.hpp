#pragma once

#include <string>
#include <vector>

#include "clfa/ingest.hpp"
#include "clfa/metrics.hpp"
#include "clfa/select.hpp"
#include "clfa/synthgen.hpp"

namespace clfa {

inline constexpr const char* kToolVersion = "0.1.0";

std::uint64_t fnv1a64(const std::string& s);

struct FitOptions {
  std::string input_path;
  std::string out_dir;
  IngestConfig ingest;
  int k_max = 10;
  int g_max = 0;  // 0 = min(p, 30)
  SamplerConfig sampler;
  SearchOptions search;
  double sigma_lambda = 5.0;
  double alpha = 2.5;
  double alpha_z = 1.0;
  int max_threads = 0;
};

struct GroupFitSummary {
  std::string group;
  std::string dir;
  bool ok = false;
  std::string error;
  int k = 0, g = 0;
  double mse_vs_sample = 0.0;
  double rv_vs_sample = 0.0;
  double acceptance_rate = 0.0;
};

/// Per group: initialize_kg -> greedy_search -> point_estimates, then the
/// file set (correlation, partition, co-clustering, criteria history,
/// summary). Failures are per-group; other groups still complete.
std::vector<GroupFitSummary> run_fit(const FitOptions& opts);

struct SimulateOptions {
  SimDesign design;
  SamplerConfig sampler;
  std::string out_dir;
  int max_threads = 0;
};

/// run_study plus the four CSV tables and the manifest.
StudyReport run_simulate(const SimulateOptions& opts);

struct CompareOptions {
  std::string dir_a;
  std::string dir_b;
  std::string out_dir;  // optional: empty writes nothing
  bool has_range = false;
  int range_lo = 1, range_hi = 0;  // 1-based inclusive variable positions
};

struct ComparisonReport {
  PartitionComparison tabulation;
  double mse = 0.0;
  double rv = 0.0;
  int n_variables = 0;
};

ComparisonReport run_compare(const CompareOptions& opts);

struct RegressOptions {
  std::string fit_dir;  // one group's output directory
  std::string responses_path;
  std::string out_dir;  // empty: fit_dir
};

struct RegressReport {
  std::vector<std::string> responses;
  std::vector<ClusterRegression> fits;  // one per response
  Partition partition;
};

RegressReport run_regress(const RegressOptions& opts);

}  // namespace clfa
