#pragma once

#include <vector>

#include "clfa/types.hpp"

namespace clfa {

struct KmeansResult {
  std::vector<int> assignment;  // length = rows
  MatrixXd centers;             // G x d
};

/// Lloyd's algorithm with deterministic farthest-point seeding (no RNG):
/// first center = largest-norm row, then maxmin rows; ties break to the
/// lowest index. Empty clusters are reseeded at the worst-fit row.
KmeansResult kmeans_rows(const MatrixXd& rows, int g, int max_iter = 100);

/// Diagonal-family Gaussian mixture covariance structures.
enum class GmmModel { kSphericalEqual, kSphericalVarying, kDiagonalVarying };

const char* gmm_model_name(GmmModel model);

struct GmmFit {
  std::vector<int> assignment;
  int g = 0;
  GmmModel model = GmmModel::kSphericalEqual;
  double loglik = 0.0;
  double bic = 0.0;  // 2*loglik - nu*log(rows)
  int n_params = 0;
};

/// EM fit of one mixture; initialized from kmeans_rows, hence deterministic.
GmmFit fit_gmm(const MatrixXd& rows, int g, GmmModel model, int max_iter = 200,
               double tol = 1e-8);

struct RowClustering {
  std::vector<int> assignment;
  int g_selected = 0;
  GmmModel model = GmmModel::kSphericalEqual;
  double bic = 0.0;
};

/// BIC-selected mixture over g = 1..g_max and the three covariance structures.
/// Identical rows collapse to a single cluster.
RowClustering cluster_loading_rows(const MatrixXd& loadings, int g_max);

}  // namespace clfa
