#pragma once

#include <vector>

#include "clfa/types.hpp"

namespace clfa {

/// Mean squared deviation over the lower triangle including the diagonal,
/// i.e. the p(p+1)/2 entries with j >= j'.
double correlation_mse(const MatrixXd& r, const MatrixXd& r_hat);

/// tr(R' R_hat) / sqrt(tr(R'R) tr(R_hat'R_hat)); in [0,1] for PSD arguments.
double rv_coefficient(const MatrixXd& r, const MatrixXd& r_hat);

/// Hubert-Arabie adjusted Rand index; labels are arbitrary integers.
/// Degenerate pairs (both partitions trivial) where the chance correction
/// has zero denominator return 1.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

struct PartitionComparison {
  Eigen::MatrixXi confusion;  // rows: clusters of a, cols: clusters of b
  std::vector<int> row_labels;
  std::vector<int> col_labels;
  double ari = 0.0;
};

PartitionComparison cross_tabulate(const std::vector<int>& a, const std::vector<int>& b);

struct ClusterRegression {
  VectorXd adjusted_r2;             // length G; unset entries are NaN
  std::vector<bool> skipped;        // n <= n_g + 1, or empty cluster
  std::vector<bool> rank_deficient; // solved by minimum-norm least squares
};

/// OLS of response on each cluster's columns plus intercept;
/// adjusted R^2 = 1 - (1-R^2)(n-1)/(n - n_g - 1).
ClusterRegression cluster_regression(const DataMatrix& data, const Partition& partition,
                                     const VectorXd& response);

}  // namespace clfa
