#pragma once

#include <cstdint>
#include <vector>

#include "clfa/model.hpp"
#include "clfa/rng.hpp"
#include "clfa/types.hpp"

namespace clfa {

struct SamplerConfig {
  int n_iter = 2000;
  int burn_in = 1000;
  int thin = 5;
  std::uint64_t seed = 42;
  int moves_per_sweep = 0;        // 0 = ceil(p / 10), at least 1
  double distance_epsilon = 1e-8; // floor for inverse-distance proposal weights

  void validate() const;
  int resolved_moves_per_sweep(Eigen::Index p) const;
};

/// Post-burn-in thinned draw; factor scores are not retained.
struct KeptDraw {
  ClusterLoadings loadings;
  Uniquenesses psi;
  Partition partition;
  double loglik = 0.0;
};

struct ChainTrace {
  std::vector<KeptDraw> draws;
  std::vector<double> loglik_trace; // one value per sweep, after all block updates
  std::uint64_t accept_count = 0;
  std::uint64_t attempt_count = 0;
  SamplerConfig config;

  double acceptance_rate() const {
    return attempt_count == 0 ? 0.0 : static_cast<double>(accept_count) / attempt_count;
  }
  /// Log-likelihood values past burn-in (criteria are computed on these).
  std::vector<double> post_burnin_loglik() const;
};

// --- Gibbs full conditionals -------------------------------------------------

struct ScoreConditional {
  MatrixXd mean;       // n x K, row i = mu_u for observation i
  MatrixXd covariance; // K x K, shared across observations
};

/// u_i | ... ~ N_K((I + Lt' Psi^-1 Lt)^-1 Lt' Psi^-1 x_i, (I + Lt' Psi^-1 Lt)^-1).
ScoreConditional score_full_conditional(const DataMatrix& data, const Partition& partition,
                                        const ClusterLoadings& loadings,
                                        const Uniquenesses& psi);

FactorScores sample_scores(const DataMatrix& data, const Partition& partition,
                           const ClusterLoadings& loadings, const Uniquenesses& psi, Rng& rng);

struct LoadingsConditional {
  VectorXd mean;      // length G*K, column-major vec(Lambda_c)
  MatrixXd precision; // (G*K) x (G*K): U'U (x) Z'Psi^-1 Z + sigma^-2 I
};

/// vec(Lambda_c) | ... ~ N(mu, P^-1) with the Kronecker-structured precision.
/// vec() is column-major, matching vec(AXB) = (B' (x) A) vec(X).
LoadingsConditional loadings_full_conditional(const DataMatrix& data, const Partition& partition,
                                              const FactorScores& scores, const Uniquenesses& psi,
                                              double sigma_lambda);

ClusterLoadings sample_cluster_loadings(const DataMatrix& data, const Partition& partition,
                                        const FactorScores& scores, const Uniquenesses& psi,
                                        double sigma_lambda, Rng& rng);

/// Diagonal of (X - U Lc' Z')' (X - U Lc' Z'); the full p x p product is never formed.
VectorXd residual_sumsq(const DataMatrix& data, const Partition& partition,
                        const ClusterLoadings& loadings, const FactorScores& scores);

/// psi_j | ... ~ InvGamma(alpha + n/2, beta_j + M_jj / 2), independently per j.
Uniquenesses sample_uniquenesses(const DataMatrix& data, const Partition& partition,
                                 const ClusterLoadings& loadings, const FactorScores& scores,
                                 double alpha, const VectorXd& beta, Rng& rng);

// --- Metropolis-Hastings allocation move -------------------------------------

/// log of the printed proposal ratio P(Z'->Z)/P(Z->Z'):
/// [H(n_g1)/H(n_g2+M)] * [n_g1! n_g2! / ((n_g1-M)! (n_g2+M)!)], H(t) = sum_{m<=t} 1/m.
double log_proposal_ratio(int n_g1, int n_g2, int m_moved);

struct AllocationMoveResult {
  Partition partition;  // post-move partition (equal to input when not accepted)
  bool accepted = false;
  bool proposed = false;  // false when the drawn source cluster was empty
  double log_ratio = 0.0; // log R of the proposed move (meaningful when proposed)
};

/// One block-reallocation attempt. Mutates `state` (partition and cached
/// loglik) when accepted; failed draws count as attempts with no state change.
AllocationMoveResult propose_allocation_move(SamplerState& state, const DataMatrix& data,
                                             const Hyperparameters& hyper,
                                             const SamplerConfig& config, Rng& rng);

// --- Chain driver -------------------------------------------------------------

/// Metropolis-within-Gibbs sweep order: U, Lambda_c, Psi, then Z-move attempts.
/// Deterministic given (data, config.seed, init).
ChainTrace run_chain(const DataMatrix& data, int K, int G, const Hyperparameters& hyper,
                     const SamplerConfig& config, SamplerState init);

// --- Posterior summaries -------------------------------------------------------

struct PointEstimates {
  MatrixXd correlation;      // covariance_to_correlation of the mean model covariance
  MatrixXd coclustering;     // pairwise same-cluster frequency across kept draws
  Partition partition;       // kept draw minimizing posterior expected Binder loss
  VectorXd psi_mean;
  MatrixXd loadings_mean;    // per-draw-aligned labels; rotation/label variant
  bool loadings_label_variant = true;
};

PointEstimates point_estimates(const ChainTrace& trace);

}  // namespace clfa
