#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clfa/rng.hpp"
#include "clfa/sampler.hpp"
#include "clfa/types.hpp"

namespace clfa {

struct SimDesign {
  int n = 500;
  int p = 40;
  int k_true = 3;
  int g_true = 5;
  int b = 200;  // replicates
  std::uint64_t seed = 42;
  std::vector<int> k_grid = {2, 3, 4, 5};
  std::vector<int> g_grid = {3, 4, 5, 6, 7};
  int sel_k_max = 8;  // initialize_kg bounds used for the selection table
  int sel_g_max = 0;  // 0 = min(p, 30)

  // truth-generation knobs (unreported in the source material; these defaults
  // give recoverable, well-separated clusters and are all overridable)
  double loading_sigma = 1.0;  // Lambda_c rows ~ N(0, loading_sigma^2 I)
  double min_row_gap = 1.5;    // minimum Euclidean distance between rows
  double psi_lo = 0.2, psi_hi = 1.0;
  int max_resample = 10000;

  void validate() const;
};

struct Truth {
  Partition partition;
  ClusterLoadings loadings;
  Uniquenesses psi;

  MatrixXd covariance() const;
  MatrixXd correlation() const;
};

/// Non-empty uniform partition, loading rows resampled to the minimum gap,
/// psi uniform on [psi_lo, psi_hi].
Truth generate_truth(const SimDesign& design, Rng& rng);

/// n draws of x = Lt u + eps (no p x p factorization), columns centered.
DataMatrix generate_data(const Truth& truth, int n, Rng& rng);

/// Group-level variation around a shared truth: entrywise Gaussian noise on
/// the loading rows, log-uniform jitter on psi; the partition is shared.
Truth perturb_truth(const Truth& truth, double loading_sd, double psi_jitter, Rng& rng);

struct CellMetrics {
  bool ok = false;
  std::string error;
  double ari = 0.0, mse = 0.0, rv = 0.0;
};

struct StudyReport {
  SimDesign design;
  std::vector<std::vector<CellMetrics>> raw;     // [replicate][k-major cell]
  std::vector<std::pair<int, int>> selections;   // initialize_kg pick per replicate

  std::size_t cell_index(int k, int g) const;

  struct CellSummary {
    int k = 0, g = 0, n_ok = 0, n_fail = 0;
    double mean_ari = 0.0, sd_ari = 0.0;
    double mean_mse = 0.0, sd_mse = 0.0;
    double mean_rv = 0.0, sd_rv = 0.0;
  };
  CellSummary summarize(int k, int g) const;
  double selection_proportion(int k, int g) const;
};

/// Tables 1-4 harness: per replicate, generate truth and data, fit every
/// (k, g) grid cell, record ARI/MSE/RV against truth, and run initialize_kg.
/// Replicates run in parallel on derived seeds; results are slot-indexed so
/// aggregation is independent of scheduling.
StudyReport run_study(const SimDesign& design, const SamplerConfig& sampler_config,
                      int max_threads = 0);

}  // namespace clfa
