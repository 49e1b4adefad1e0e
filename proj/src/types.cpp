#include "clfa/types.hpp"

#include <cmath>
#include <numeric>

namespace clfa {

void DataMatrix::validate() const {
  if (n() < 2) throw UsageError("DataMatrix: need at least 2 observations");
  if (p() < 1) throw UsageError("DataMatrix: need at least 1 variable");
  if (!values.allFinite()) throw DataError("DataMatrix: non-finite entry");
  if (!variable_labels.empty() &&
      variable_labels.size() != static_cast<std::size_t>(p()))
    throw UsageError("DataMatrix: label count does not match column count");
  if (centered) {
    for (Eigen::Index j = 0; j < p(); ++j) {
      const double mean = values.col(j).mean();
      const double scale = values.col(j).cwiseAbs().maxCoeff();
      if (std::abs(mean) > 1e-10 * (1.0 + scale))
        throw DataError("DataMatrix: flagged centered but column " + std::to_string(j) +
                        " has mean " + std::to_string(mean));
    }
  }
}

void center_columns(DataMatrix& data) {
  data.values.rowwise() -= data.values.colwise().mean();
  data.centered = true;
}

Partition::Partition(std::vector<int> assign, int n_clusters)
    : assignment(std::move(assign)), G(n_clusters), occupancy(n_clusters, 0) {
  for (int a : assignment) {
    if (a < 0 || a >= G) throw UsageError("Partition: cluster index out of range");
    ++occupancy[a];
  }
}

int Partition::occupied_count() const {
  int occ = 0;
  for (int c : occupancy)
    if (c > 0) ++occ;
  return occ;
}

void Partition::validate() const {
  if (G <= 0) throw UsageError("Partition: G must be positive");
  if (occupancy.size() != static_cast<std::size_t>(G))
    throw UsageError("Partition: occupancy size mismatch");
  std::vector<int> counts(G, 0);
  for (int a : assignment) {
    if (a < 0 || a >= G) throw UsageError("Partition: cluster index out of range");
    ++counts[a];
  }
  if (counts != occupancy) throw UsageError("Partition: occupancy inconsistent with assignment");
}

void Uniquenesses::validate() const {
  for (Eigen::Index j = 0; j < psi.size(); ++j)
    if (!(psi[j] > 0.0) || !std::isfinite(psi[j]))
      throw UsageError("Uniquenesses: psi[" + std::to_string(j) + "] must be positive and finite");
}

void Hyperparameters::validate() const {
  if (!(sigma_lambda > 0.0)) throw UsageError("Hyperparameters: sigma_lambda must be positive");
  if (!(alpha > 0.0)) throw UsageError("Hyperparameters: alpha must be positive");
  if (!(alpha_z > 0.0)) throw UsageError("Hyperparameters: alpha_z must be positive");
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    if (!(beta[j] > 0.0)) throw UsageError("Hyperparameters: beta must be positive");
}

void SamplerState::validate_shapes(Eigen::Index n, Eigen::Index p) const {
  const Eigen::Index G = loadings.G();
  const Eigen::Index K = loadings.K();
  if (partition.G != G) throw UsageError("SamplerState: partition G != loadings rows");
  if (partition.p() != p) throw UsageError("SamplerState: partition length != p");
  if (psi.psi.size() != p) throw UsageError("SamplerState: psi length != p");
  if (scores.n() != n || scores.K() != K)
    throw UsageError("SamplerState: scores shape mismatch");
}

}  // namespace clfa
