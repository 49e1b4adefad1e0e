#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "clfa/sampler.hpp"
#include "clfa/types.hpp"

namespace clfa {

struct ModelScore {
  int k = 0, g = 0;
  std::optional<double> bic;       // collapsed-FA BIC from the initialization stage
  std::optional<double> bicm;
  std::optional<double> aicm;
  std::optional<double> bic_mcmc;
};

/// Whether BICM/AICM moments are taken over log-likelihood draws (default;
/// Raftery-style) or likelihood draws (the literal alternative reading, prone
/// to overflow and provided for comparison only).
enum class CriterionScale { kLogDraws, kLikelihoodDraws };

/// BICM = 2 log Ltilde - 2 s^2 log n; AICM = 2 log Lbar - 2 s^2;
/// BIC-MCMC = 2 log Ltilde - nu log n with nu = (G*K)+p. Variance is the
/// sample (n-1) variance. With fewer than 2 post-burn-in values only
/// BIC-MCMC is set.
ModelScore compute_criteria(const ChainTrace& trace, double n, int k, int g,
                            CriterionScale scale = CriterionScale::kLogDraws);

struct InitCandidate {
  int k = 0, g = 0;
  double bic = 0.0;
};

struct InitSelection {
  int k_init = 0, g_init = 0;
  std::vector<InitCandidate> candidates;  // one per k examined
};

/// 4-step start: standard FA per k, mixture clustering of loading rows,
/// collapse rows to cluster means, BIC of the collapsed model; argmax.
/// g_max = 0 means min(p, 30).
InitSelection initialize_kg(const DataMatrix& data, int k_max = 10, int g_max = 0);

/// FA fit + k-means on its loading rows: partition and Lambda_c from the
/// cluster structure, Psi from FA, U from the FA conditional mean.
SamplerState make_initial_state(const DataMatrix& data, int k, int g);

struct CandidateFit {
  ModelScore score;
  std::shared_ptr<ChainTrace> trace;
  std::shared_ptr<PointEstimates> estimates;
};

using CandidateEvaluator = std::function<CandidateFit(int k, int g)>;

struct SearchOptions {
  int budget = 20;             // max ring expansions
  bool axis_neighbors = false; // also try (K±1,G), (K,G±1)
};

struct FitResult {
  int k = 0, g = 0;
  ModelScore score;
  PointEstimates estimates;
  ChainTrace trace;
  std::vector<ModelScore> history;  // every configuration evaluated, in order
};

/// Hill climb on BIC-MCMC over the four corner neighbors (K±1, G±1), clamped
/// at 1, skipping visited configurations; each configuration is evaluated at
/// most once. Evaluator UsageErrors mark a configuration infeasible.
FitResult greedy_search_core(int k_init, int g_init, const CandidateEvaluator& evaluate,
                             const SearchOptions& opts);

FitResult greedy_search(const DataMatrix& data, int k_init, int g_init,
                        const Hyperparameters& hyper, const SamplerConfig& config,
                        const SearchOptions& opts = SearchOptions{});

}  // namespace clfa
