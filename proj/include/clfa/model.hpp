#pragma once

#include "clfa/types.hpp"

namespace clfa {

/// Z * Lambda_c: p x K loadings with one shared row per cluster.
MatrixXd expand_loadings(const Partition& partition, const ClusterLoadings& loadings);

/// Model covariance Lt * Lt' + diag(psi). Symmetric positive definite.
MatrixXd model_covariance(const Partition& partition, const ClusterLoadings& loadings,
                          const Uniquenesses& psi);

/// R = D^{-1/2} Sigma D^{-1/2}. Requires symmetric input with positive diagonal.
MatrixXd covariance_to_correlation(const MatrixXd& sigma);

/// Conditional Gaussian log-likelihood sum_i log N(x_i; Z Lambda_c u_i, Psi).
/// Only the diagonal Psi structure is used; no p x p matrix is formed.
double log_likelihood(const DataMatrix& data, const Partition& partition,
                      const ClusterLoadings& loadings, const FactorScores& scores,
                      const Uniquenesses& psi);
double log_likelihood(const DataMatrix& data, const SamplerState& state);

/// Log cohesion of the occupied blocks: G_occ log(alpha_z) + sum log((n_g - 1)!).
/// Unnormalized; only cohesion ratios ever enter acceptance probabilities.
double log_partition_cohesion(const Partition& partition, double alpha_z);

/// Sum of log prior densities: Gaussian loading rows, Gaussian scores,
/// inverse-gamma uniquenesses, partition cohesion.
double log_prior(const SamplerState& state, const Hyperparameters& hyper);

/// log_likelihood + log_prior (unnormalized joint).
double log_posterior_unnorm(const DataMatrix& data, const SamplerState& state,
                            const Hyperparameters& hyper);

/// Paper defaults: alpha = 2.5, beta_j = (alpha - 1) / (S^-1)_jj, alpha_z = 1.
/// S is ridge-regularized when singular (n <= p).
Hyperparameters make_hyperparameters(const DataMatrix& data, double sigma_lambda = 5.0,
                                     double alpha = 2.5, double alpha_z = 1.0);

}  // namespace clfa
