#include "clfa/select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

#include "clfa/cluster.hpp"
#include "clfa/errors.hpp"
#include "clfa/fa.hpp"
#include "clfa/rng.hpp"

namespace clfa {

ModelScore compute_criteria(const ChainTrace& trace, double n, int k, int g,
                            CriterionScale scale) {
  const std::vector<double> ll = trace.post_burnin_loglik();
  if (ll.empty()) throw UsageError("compute_criteria: no post-burn-in log-likelihood values");
  if (trace.draws.empty()) throw UsageError("compute_criteria: trace has no kept draws to size the model");
  if (!(n > 0.0)) throw UsageError("compute_criteria: n must be positive");
  const Eigen::Index p = trace.draws.front().psi.psi.size();
  const int nu = clustered_param_count(g, k, static_cast<int>(p));

  ModelScore score;
  score.k = k;
  score.g = g;
  const double ltilde = *std::max_element(ll.begin(), ll.end());
  score.bic_mcmc = 2.0 * ltilde - nu * std::log(n);
  if (ll.size() < 2) return score;

  const double t = static_cast<double>(ll.size());
  if (scale == CriterionScale::kLogDraws) {
    double lbar = 0.0;
    for (double v : ll) lbar += v;
    lbar /= t;
    double s2 = 0.0;
    for (double v : ll) s2 += (v - lbar) * (v - lbar);
    s2 /= t - 1.0;
    score.bicm = 2.0 * ltilde - 2.0 * s2 * std::log(n);
    score.aicm = 2.0 * lbar - 2.0 * s2;
  } else {
    // moments of exp(loglik); shift by the max so the mean is representable,
    // the variance then carries an exp(2*max) factor that may over/underflow
    double mean_w = 0.0;
    for (double v : ll) mean_w += std::exp(v - ltilde);
    mean_w /= t;
    double var_w = 0.0;
    for (double v : ll) {
      const double d = std::exp(v - ltilde) - mean_w;
      var_w += d * d;
    }
    var_w /= t - 1.0;
    const double log_lbar = ltilde + std::log(mean_w);
    const double s2 = std::exp(2.0 * ltilde) * var_w;
    score.bicm = 2.0 * ltilde - 2.0 * s2 * std::log(n);
    score.aicm = 2.0 * log_lbar - 2.0 * s2;
  }
  return score;
}

InitSelection initialize_kg(const DataMatrix& data, int k_max, int g_max) {
  data.validate();
  const Eigen::Index p = data.p();
  const double n = static_cast<double>(data.n());
  if (k_max < 1) throw UsageError("initialize_kg: k_max must be >= 1");
  const int k_cap = std::min<int>(k_max, static_cast<int>(p) - 1);
  const int g_cap = g_max > 0 ? g_max : std::min<int>(static_cast<int>(p), 30);

  const MatrixXd s = data.values.transpose() * data.values / n;

  InitSelection sel;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= k_cap; ++k) {
    const StandardFaFit fa = fit_standard_fa(data, k);
    const RowClustering rc = cluster_loading_rows(fa.loadings, g_cap);

    // step 3: replace each loading row by its cluster mean
    MatrixXd centers = MatrixXd::Zero(rc.g_selected, k);
    std::vector<int> count(static_cast<std::size_t>(rc.g_selected), 0);
    for (Eigen::Index j = 0; j < p; ++j) {
      centers.row(rc.assignment[static_cast<std::size_t>(j)]) += fa.loadings.row(j);
      ++count[static_cast<std::size_t>(rc.assignment[static_cast<std::size_t>(j)])];
    }
    for (int c = 0; c < rc.g_selected; ++c) centers.row(c) /= count[static_cast<std::size_t>(c)];
    MatrixXd collapsed(p, k);
    for (Eigen::Index j = 0; j < p; ++j)
      collapsed.row(j) = centers.row(rc.assignment[static_cast<std::size_t>(j)]);

    const double loglik = marginal_gaussian_loglik(s, n, collapsed, fa.psi);
    const int nu = clustered_param_count(rc.g_selected, k, static_cast<int>(p));
    const double bic = 2.0 * loglik - nu * std::log(n);
    sel.candidates.push_back(InitCandidate{k, rc.g_selected, bic});
    if (bic > best) {
      best = bic;
      sel.k_init = k;
      sel.g_init = rc.g_selected;
    }
  }
  return sel;
}

SamplerState make_initial_state(const DataMatrix& data, int k, int g) {
  const StandardFaFit fa = fit_standard_fa(data, k);
  const KmeansResult km = kmeans_rows(fa.loadings, g);

  SamplerState state;
  state.partition = Partition(km.assignment, g);
  state.loadings.values = km.centers;
  state.psi.psi = fa.psi;
  state.scores.values = fa_score_means(data, fa.loadings, fa.psi);
  state.loglik = log_likelihood(data, state);
  return state;
}

FitResult greedy_search_core(int k_init, int g_init, const CandidateEvaluator& evaluate,
                             const SearchOptions& opts) {
  if (k_init < 1 || g_init < 1) throw UsageError("greedy_search: K_init and G_init must be >= 1");
  if (opts.budget < 0) throw UsageError("greedy_search: negative budget");

  std::set<std::pair<int, int>> visited;
  std::vector<ModelScore> history;
  auto try_evaluate = [&](int k, int g) -> std::optional<CandidateFit> {
    if (!visited.insert({k, g}).second) return std::nullopt;
    CandidateFit cand;
    try {
      cand = evaluate(k, g);
    } catch (const UsageError&) {
      return std::nullopt;  // infeasible configuration (e.g. k >= p)
    }
    if (!cand.score.bic_mcmc) throw NumericError("greedy_search: evaluator returned no BIC-MCMC");
    history.push_back(cand.score);
    return cand;
  };

  std::optional<CandidateFit> incumbent = try_evaluate(k_init, g_init);
  if (!incumbent) throw UsageError("greedy_search: starting configuration infeasible");
  int bk = k_init, bg = g_init;

  for (int ring = 0; ring < opts.budget; ++ring) {
    std::vector<std::pair<int, int>> neighbors = {
        {bk + 1, bg + 1}, {bk + 1, bg - 1}, {bk - 1, bg + 1}, {bk - 1, bg - 1}};
    if (opts.axis_neighbors) {
      neighbors.insert(neighbors.end(), {{bk + 1, bg}, {bk - 1, bg}, {bk, bg + 1}, {bk, bg - 1}});
    }
    std::optional<CandidateFit> best;
    int nk = 0, ng = 0;
    for (auto [k, g] : neighbors) {
      k = std::max(k, 1);
      g = std::max(g, 1);
      std::optional<CandidateFit> cand = try_evaluate(k, g);
      if (!cand) continue;
      if (!best || *cand->score.bic_mcmc > *best->score.bic_mcmc) {
        best = std::move(cand);
        nk = k;
        ng = g;
      }
    }
    if (!best || *best->score.bic_mcmc <= *incumbent->score.bic_mcmc) break;
    incumbent = std::move(best);
    bk = nk;
    bg = ng;
  }

  FitResult out;
  out.k = bk;
  out.g = bg;
  out.score = incumbent->score;
  if (incumbent->estimates) out.estimates = *incumbent->estimates;
  if (incumbent->trace) out.trace = *incumbent->trace;
  out.history = std::move(history);
  return out;
}

FitResult greedy_search(const DataMatrix& data, int k_init, int g_init,
                        const Hyperparameters& hyper, const SamplerConfig& config,
                        const SearchOptions& opts) {
  const double n = static_cast<double>(data.n());
  CandidateEvaluator evaluate = [&](int k, int g) -> CandidateFit {
    if (g > data.p()) throw UsageError("greedy_search: more clusters than variables");
    SamplerState init = make_initial_state(data, k, g);
    SamplerConfig cfg = config;
    cfg.seed = derive_seed(config.seed, {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(g)});
    ChainTrace trace = run_chain(data, k, g, hyper, cfg, std::move(init));
    CandidateFit cand;
    cand.score = compute_criteria(trace, n, k, g);
    cand.estimates = std::make_shared<PointEstimates>(point_estimates(trace));
    cand.trace = std::make_shared<ChainTrace>(std::move(trace));
    return cand;
  };
  return greedy_search_core(k_init, g_init, evaluate, opts);
}

}  // namespace clfa
