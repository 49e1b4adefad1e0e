#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "clfa/errors.hpp"

namespace clfa {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Centered n x p observation matrix with one label per variable (column).
struct DataMatrix {
  MatrixXd values;                          // n x p
  std::vector<std::string> variable_labels; // size p
  bool centered = false;

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index p() const { return values.cols(); }

  /// Throws unless n >= 2, p >= 1, all entries finite, labels consistent and,
  /// when flagged centered, every column mean is ~0 relative to its magnitude.
  void validate() const;
};

/// Center each column in place and set the flag.
void center_columns(DataMatrix& data);

/// Allocation of p variables to G clusters. Cluster ids are 0-based in memory
/// (serialized 1-based); empty clusters are representable, G is fixed.
struct Partition {
  std::vector<int> assignment; // size p, values in {0..G-1}
  int G = 0;
  std::vector<int> occupancy;  // size G, sums to p

  Partition() = default;
  Partition(std::vector<int> assign, int n_clusters);

  Eigen::Index p() const { return static_cast<Eigen::Index>(assignment.size()); }
  int occupied_count() const;
  void validate() const;
};

/// G x K matrix; row g is the loading vector shared by every variable in cluster g.
struct ClusterLoadings {
  MatrixXd values; // G x K

  Eigen::Index G() const { return values.rows(); }
  Eigen::Index K() const { return values.cols(); }
};

/// Diagonal of Psi, strictly positive.
struct Uniquenesses {
  VectorXd psi;

  void validate() const;
};

/// n x K factor scores, row i = u_i.
struct FactorScores {
  MatrixXd values;

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index K() const { return values.cols(); }
};

struct Hyperparameters {
  double sigma_lambda = 5.0; // prior sd of loading entries
  double alpha = 2.5;        // inverse-gamma shape for psi_j
  VectorXd beta;             // inverse-gamma rates, one per variable
  double alpha_z = 1.0;      // partition cohesion concentration

  void validate() const;
};

/// One MCMC state with its cached log-likelihood.
struct SamplerState {
  ClusterLoadings loadings;
  Uniquenesses psi;
  Partition partition;
  FactorScores scores;
  double loglik = 0.0;

  /// Dimension consistency across the blocks (does not recheck the cache).
  void validate_shapes(Eigen::Index n, Eigen::Index p) const;
};

/// Free covariance parameters of the clustered model: (G x K) + p.
inline long clustered_param_count(int G, int K, int p) {
  return static_cast<long>(G) * K + p;
}

/// Free covariance parameters of standard factor analysis: (p x K) + p.
inline long standard_fa_param_count(int p, int K) {
  return static_cast<long>(p) * K + p;
}

}  // namespace clfa
