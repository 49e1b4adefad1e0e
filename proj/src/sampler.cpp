#include "clfa/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include <Eigen/Cholesky>

namespace clfa {

void SamplerConfig::validate() const {
  if (n_iter < 0) throw UsageError("sampler config: n_iter must be non-negative");
  if (burn_in < 0) throw UsageError("sampler config: burn_in must be non-negative");
  if (n_iter > 0 && burn_in >= n_iter) throw UsageError("sampler config: burn_in must be < n_iter");
  if (thin < 1) throw UsageError("sampler config: thin must be positive");
  if (moves_per_sweep < 0) throw UsageError("sampler config: moves_per_sweep must be non-negative");
  if (!(distance_epsilon > 0.0)) throw UsageError("sampler config: distance_epsilon must be positive");
}

int SamplerConfig::resolved_moves_per_sweep(Eigen::Index p) const {
  if (moves_per_sweep > 0) return moves_per_sweep;
  return std::max(1, static_cast<int>((p + 9) / 10));
}

std::vector<double> ChainTrace::post_burnin_loglik() const {
  const std::size_t skip = std::min<std::size_t>(loglik_trace.size(), static_cast<std::size_t>(config.burn_in));
  return std::vector<double>(loglik_trace.begin() + static_cast<std::ptrdiff_t>(skip), loglik_trace.end());
}

// --- scores -------------------------------------------------------------------

// d_g = sum_{j in C_g} 1/psi_j, the diagonal of Z' Psi^-1 Z
static VectorXd cluster_precision_weights(const Partition& partition, const Uniquenesses& psi) {
  VectorXd d = VectorXd::Zero(partition.G);
  for (Eigen::Index j = 0; j < psi.psi.size(); ++j) d[partition.assignment[static_cast<std::size_t>(j)]] += 1.0 / psi.psi[j];
  return d;
}

ScoreConditional score_full_conditional(const DataMatrix& data, const Partition& partition,
                                        const ClusterLoadings& loadings, const Uniquenesses& psi) {
  const Eigen::Index K = loadings.K();
  const VectorXd d = cluster_precision_weights(partition, psi);
  // A = I + Lt' Psi^-1 Lt collapses to I + Lc' diag(d) Lc over cluster rows
  MatrixXd a = MatrixXd::Identity(K, K);
  a.noalias() += loadings.values.transpose() * d.asDiagonal() * loadings.values;
  a = 0.5 * (a + a.transpose()).eval();
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NumericError("score conditional: posterior precision not SPD");
  MatrixXd sigma_u = llt.solve(MatrixXd::Identity(K, K));
  sigma_u = 0.5 * (sigma_u + sigma_u.transpose()).eval();

  const MatrixXd lt = expand_loadings(partition, loadings);
  MatrixXd w = psi.psi.cwiseInverse().asDiagonal() * lt;  // p x K
  ScoreConditional out;
  out.mean.noalias() = (data.values * w) * sigma_u;
  out.covariance = std::move(sigma_u);
  return out;
}

FactorScores sample_scores(const DataMatrix& data, const Partition& partition,
                           const ClusterLoadings& loadings, const Uniquenesses& psi, Rng& rng) {
  ScoreConditional cond = score_full_conditional(data, partition, loadings, psi);
  Eigen::LLT<MatrixXd> llt(cond.covariance);
  if (llt.info() != Eigen::Success) throw NumericError("score conditional: covariance factorization failed");
  const MatrixXd l = llt.matrixL();

  const Eigen::Index n = data.n(), K = loadings.K();
  FactorScores scores;
  scores.values.resize(n, K);
  VectorXd z(K);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < K; ++k) z[k] = rng.normal();
    scores.values.row(i) = cond.mean.row(i) + (l * z).transpose();
  }
  return scores;
}

// --- cluster loadings -----------------------------------------------------------

LoadingsConditional loadings_full_conditional(const DataMatrix& data, const Partition& partition,
                                              const FactorScores& scores, const Uniquenesses& psi,
                                              double sigma_lambda) {
  const Eigen::Index G = partition.G, K = scores.K(), p = data.p();
  const VectorXd d = cluster_precision_weights(partition, psi);
  const MatrixXd utu = scores.values.transpose() * scores.values;

  // U'U (x) Z'Psi^-1 Z: K x K grid of diagonal G x G blocks (column-major vec)
  LoadingsConditional out;
  out.precision = MatrixXd::Zero(G * K, G * K);
  for (Eigen::Index k1 = 0; k1 < K; ++k1)
    for (Eigen::Index k2 = 0; k2 < K; ++k2)
      out.precision.block(k2 * G, k1 * G, G, G).diagonal() = utu(k2, k1) * d;
  out.precision.diagonal().array() += 1.0 / (sigma_lambda * sigma_lambda);

  MatrixXd xtu = data.values.transpose() * scores.values;  // p x K
  xtu = psi.psi.cwiseInverse().asDiagonal() * xtu;
  MatrixXd b = MatrixXd::Zero(G, K);
  for (Eigen::Index j = 0; j < p; ++j) b.row(partition.assignment[static_cast<std::size_t>(j)]) += xtu.row(j);

  Eigen::LLT<MatrixXd> llt(out.precision);
  if (llt.info() != Eigen::Success) throw NumericError("loadings conditional: precision not SPD");
  out.mean = llt.solve(Eigen::Map<const VectorXd>(b.data(), G * K));
  return out;
}

ClusterLoadings sample_cluster_loadings(const DataMatrix& data, const Partition& partition,
                                        const FactorScores& scores, const Uniquenesses& psi,
                                        double sigma_lambda, Rng& rng) {
  LoadingsConditional cond = loadings_full_conditional(data, partition, scores, psi, sigma_lambda);
  const Eigen::Index G = partition.G, K = scores.K();

  Eigen::LLT<MatrixXd> llt(cond.precision);
  if (llt.info() != Eigen::Success) throw NumericError("loadings conditional: precision factorization failed");
  VectorXd z(G * K);
  for (Eigen::Index r = 0; r < G * K; ++r) z[r] = rng.normal();
  // P = L L' so L^-T z has covariance P^-1
  const VectorXd vec = cond.mean + llt.matrixU().solve(z);

  ClusterLoadings lc;
  lc.values = Eigen::Map<const MatrixXd>(vec.data(), G, K);
  return lc;
}

// --- uniquenesses ----------------------------------------------------------------

VectorXd residual_sumsq(const DataMatrix& data, const Partition& partition,
                        const ClusterLoadings& loadings, const FactorScores& scores) {
  const Eigen::Index p = data.p();
  const MatrixXd fitted = scores.values * loadings.values.transpose();  // n x G
  VectorXd out(p);
  for (Eigen::Index j = 0; j < p; ++j)
    out[j] = (data.values.col(j) - fitted.col(partition.assignment[static_cast<std::size_t>(j)])).squaredNorm();
  return out;
}

Uniquenesses sample_uniquenesses(const DataMatrix& data, const Partition& partition,
                                 const ClusterLoadings& loadings, const FactorScores& scores,
                                 double alpha, const VectorXd& beta, Rng& rng) {
  const Eigen::Index p = data.p();
  if (beta.size() != p) throw UsageError("sample_uniquenesses: beta length != p");
  const VectorXd mjj = residual_sumsq(data, partition, loadings, scores);
  const double shape = alpha + 0.5 * static_cast<double>(data.n());
  Uniquenesses psi;
  psi.psi.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) psi.psi[j] = rng.inverse_gamma(shape, beta[j] + 0.5 * mjj[j]);
  return psi;
}

// --- allocation move ---------------------------------------------------------------

static double log_harmonic(int t) {
  double h = 0.0;
  for (int m = 1; m <= t; ++m) h += 1.0 / m;
  return std::log(h);
}

double log_proposal_ratio(int n_g1, int n_g2, int m_moved) {
  if (n_g1 < 1 || m_moved < 1 || m_moved > n_g1 || n_g2 < 0)
    throw UsageError("log_proposal_ratio: need 1 <= M <= n_g1 and n_g2 >= 0");
  return log_harmonic(n_g1) - log_harmonic(n_g2 + m_moved)
       + std::lgamma(n_g1 + 1.0) + std::lgamma(n_g2 + 1.0)
       - std::lgamma(n_g1 - m_moved + 1.0) - std::lgamma(n_g2 + m_moved + 1.0);
}

// log alpha_z + log (m-1)! for an occupied block, 0 for an empty one
static double cohesion_term(double alpha_z, int m) {
  return m >= 1 ? std::log(alpha_z) + std::lgamma(static_cast<double>(m)) : 0.0;
}

AllocationMoveResult propose_allocation_move(SamplerState& state, const DataMatrix& data,
                                             const Hyperparameters& hyper,
                                             const SamplerConfig& config, Rng& rng) {
  const int G = static_cast<int>(state.loadings.G());
  if (G < 2) throw UsageError("allocation move: needs G >= 2");

  AllocationMoveResult res;
  res.partition = state.partition;

  // step 1: source cluster, uniform; empty source = failed attempt
  const int g1 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(G)));
  const int n1 = state.partition.occupancy[static_cast<std::size_t>(g1)];
  if (n1 == 0) return res;

  // step 2: destination ~ inverse distance between loading rows
  std::vector<double> w(static_cast<std::size_t>(G), 0.0);
  for (int g = 0; g < G; ++g) {
    if (g == g1) continue;
    const double dist = (state.loadings.values.row(g1) - state.loadings.values.row(g)).norm();
    w[static_cast<std::size_t>(g)] = 1.0 / std::max(dist, config.distance_epsilon);
  }
  const int g2 = static_cast<int>(rng.discrete(w));
  const int n2 = state.partition.occupancy[static_cast<std::size_t>(g2)];

  // step 3: block size M ~ 1/m on {1..n1}
  std::vector<double> wm(static_cast<std::size_t>(n1));
  for (int m = 1; m <= n1; ++m) wm[static_cast<std::size_t>(m - 1)] = 1.0 / m;
  const int m_moved = 1 + static_cast<int>(rng.discrete(wm));

  // step 4: the block itself, uniform without replacement
  std::vector<Eigen::Index> members;
  members.reserve(static_cast<std::size_t>(n1));
  for (Eigen::Index j = 0; j < data.p(); ++j)
    if (state.partition.assignment[static_cast<std::size_t>(j)] == g1) members.push_back(j);
  const std::vector<Eigen::Index> moved =
      rng.sample_without_replacement(members, static_cast<std::size_t>(m_moved));

  // step 5: log R = likelihood delta (moved columns only) + cohesion delta + proposal ratio
  const VectorXd f1 = state.scores.values * state.loadings.values.row(g1).transpose();
  const VectorXd f2 = state.scores.values * state.loadings.values.row(g2).transpose();
  double delta_ll = 0.0;
  for (Eigen::Index j : moved) {
    const double ssq1 = (data.values.col(j) - f1).squaredNorm();
    const double ssq2 = (data.values.col(j) - f2).squaredNorm();
    delta_ll += (ssq1 - ssq2) / (2.0 * state.psi.psi[j]);
  }
  const double delta_cohesion = cohesion_term(hyper.alpha_z, n1 - m_moved) + cohesion_term(hyper.alpha_z, n2 + m_moved)
                              - cohesion_term(hyper.alpha_z, n1) - cohesion_term(hyper.alpha_z, n2);
  const double log_r = delta_ll + delta_cohesion + log_proposal_ratio(n1, n2, m_moved);

  res.proposed = true;
  res.log_ratio = log_r;
  if (log_r >= 0.0 || std::log(rng.uniform_pos()) < log_r) {
    for (Eigen::Index j : moved) res.partition.assignment[static_cast<std::size_t>(j)] = g2;
    res.partition.occupancy[static_cast<std::size_t>(g1)] -= m_moved;
    res.partition.occupancy[static_cast<std::size_t>(g2)] += m_moved;
    res.accepted = true;
#ifndef NDEBUG
    const double full_delta = log_likelihood(data, res.partition, state.loadings, state.psi, state.scores)
                            - log_likelihood(data, state.partition, state.loadings, state.psi, state.scores);
    if (std::abs(full_delta - delta_ll) > 1e-8 * (1.0 + std::abs(full_delta)))
      throw NumericError("allocation move: incremental loglik delta disagrees with full recomputation");
#endif
    state.partition = res.partition;
    state.loglik += delta_ll;
  }
  return res;
}

// --- chain driver ---------------------------------------------------------------------

ChainTrace run_chain(const DataMatrix& data, int K, int G, const Hyperparameters& hyper,
                     const SamplerConfig& config, SamplerState init) {
  config.validate();
  hyper.validate();
  init.validate_shapes(data.n(), data.p());
  if (init.loadings.G() != G || init.loadings.K() != K)
    throw UsageError("run_chain: init dimensions disagree with (K, G)");
  if (hyper.beta.size() != data.p()) throw UsageError("run_chain: hyper.beta length != p");

  ChainTrace trace;
  trace.config = config;
  if (config.n_iter == 0) return trace;

  Rng rng(config.seed);
  SamplerState state = std::move(init);
  state.loglik = log_likelihood(data, state);
  const int moves = config.resolved_moves_per_sweep(data.p());
  trace.loglik_trace.reserve(static_cast<std::size_t>(config.n_iter));

  const char* phase = "init";
  for (int t = 1; t <= config.n_iter; ++t) {
    try {
      phase = "scores";
      state.scores = sample_scores(data, state.partition, state.loadings, state.psi, rng);
      phase = "loadings";
      state.loadings = sample_cluster_loadings(data, state.partition, state.scores, state.psi,
                                               hyper.sigma_lambda, rng);
      phase = "uniquenesses";
      state.psi = sample_uniquenesses(data, state.partition, state.loadings, state.scores,
                                      hyper.alpha, hyper.beta, rng);
      phase = "likelihood";
      state.loglik = log_likelihood(data, state);
      if (G >= 2) {
        phase = "allocation move";
        for (int m = 0; m < moves; ++m) {
          ++trace.attempt_count;
          if (propose_allocation_move(state, data, hyper, config, rng).accepted) ++trace.accept_count;
        }
      }
    } catch (const NumericError& e) {
      throw NumericError("sweep " + std::to_string(t) + ", " + phase + ": " + e.what());
    }
    trace.loglik_trace.push_back(state.loglik);
    if (t > config.burn_in && (t - config.burn_in) % config.thin == 0)
      trace.draws.push_back(KeptDraw{state.loadings, state.psi, state.partition, state.loglik});
  }
  return trace;
}

// --- posterior summaries ------------------------------------------------------------------

PointEstimates point_estimates(const ChainTrace& trace) {
  if (trace.draws.empty()) throw UsageError("point_estimates: empty trace");
  const std::size_t n_draws = trace.draws.size();
  const Eigen::Index p = trace.draws.front().psi.psi.size();
  const Eigen::Index G = trace.draws.front().loadings.G();
  const Eigen::Index K = trace.draws.front().loadings.K();

  PointEstimates est;
  est.psi_mean = VectorXd::Zero(p);
  est.loadings_mean = MatrixXd::Zero(G, K);
  MatrixXd mean_cov = MatrixXd::Zero(p, p);
  est.coclustering = MatrixXd::Zero(p, p);

  for (const KeptDraw& draw : trace.draws) {
    est.psi_mean += draw.psi.psi;
    est.loadings_mean += draw.loadings.values;
    mean_cov += model_covariance(draw.partition, draw.loadings, draw.psi);
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = i; j < p; ++j)
        if (draw.partition.assignment[static_cast<std::size_t>(i)] ==
            draw.partition.assignment[static_cast<std::size_t>(j)])
          est.coclustering(i, j) += 1.0;
  }
  const double inv = 1.0 / static_cast<double>(n_draws);
  est.psi_mean *= inv;
  est.loadings_mean *= inv;
  mean_cov *= inv;
  est.coclustering *= inv;
  est.coclustering = est.coclustering.selfadjointView<Eigen::Upper>();
  est.correlation = covariance_to_correlation(mean_cov);

  // Binder loss of each kept partition against the co-clustering frequencies
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_idx = 0;
  for (std::size_t s = 0; s < n_draws; ++s) {
    const Partition& part = trace.draws[s].partition;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = i + 1; j < p; ++j) {
        const double same = part.assignment[static_cast<std::size_t>(i)] ==
                                    part.assignment[static_cast<std::size_t>(j)]
                                ? 1.0
                                : 0.0;
        const double diff = same - est.coclustering(i, j);
        loss += diff * diff;
      }
    if (loss < best) {
      best = loss;
      best_idx = s;
    }
  }
  est.partition = trace.draws[best_idx].partition;
  return est;
}

}  // namespace clfa
