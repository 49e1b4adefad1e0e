#include "clfa/model.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace clfa {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

MatrixXd expand_loadings(const Partition& partition, const ClusterLoadings& loadings) {
  if (partition.G != loadings.G())
    throw UsageError("expand_loadings: partition G != loadings rows");
  const Eigen::Index p = partition.p();
  MatrixXd expanded(p, loadings.K());
  for (Eigen::Index j = 0; j < p; ++j)
    expanded.row(j) = loadings.values.row(partition.assignment[j]);
  return expanded;
}

MatrixXd model_covariance(const Partition& partition, const ClusterLoadings& loadings,
                          const Uniquenesses& psi) {
  if (psi.psi.size() != partition.p())
    throw UsageError("model_covariance: psi length != p");
  const MatrixXd lt = expand_loadings(partition, loadings);
  MatrixXd sigma = lt * lt.transpose();
  sigma.diagonal() += psi.psi;
  return sigma;
}

MatrixXd covariance_to_correlation(const MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols())
    throw UsageError("covariance_to_correlation: matrix must be square");
  VectorXd inv_sd(sigma.rows());
  for (Eigen::Index j = 0; j < sigma.rows(); ++j) {
    const double v = sigma(j, j);
    if (!(v > 0.0))
      throw DataError("covariance_to_correlation: non-positive diagonal at " + std::to_string(j));
    inv_sd[j] = 1.0 / std::sqrt(v);
  }
  return inv_sd.asDiagonal() * sigma * inv_sd.asDiagonal();
}

double log_likelihood(const DataMatrix& data, const Partition& partition,
                      const ClusterLoadings& loadings, const FactorScores& scores,
                      const Uniquenesses& psi) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  if (partition.p() != p || psi.psi.size() != p || scores.n() != n ||
      scores.K() != loadings.K())
    throw UsageError("log_likelihood: dimension mismatch");

  const MatrixXd lt = expand_loadings(partition, loadings);
  const MatrixXd resid = data.values - scores.values * lt.transpose();

  double total = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double ssq = resid.col(j).squaredNorm();
    const double term = -0.5 * static_cast<double>(n) * (kLog2Pi + std::log(psi.psi[j])) -
                        0.5 * ssq / psi.psi[j];
    if (!std::isfinite(term))
      throw NumericError("log_likelihood: non-finite contribution at variable " +
                         std::to_string(j));
    total += term;
  }
  return total;
}

double log_likelihood(const DataMatrix& data, const SamplerState& state) {
  return log_likelihood(data, state.partition, state.loadings, state.scores, state.psi);
}

double log_partition_cohesion(const Partition& partition, double alpha_z) {
  double total = 0.0;
  for (int n_g : partition.occupancy)
    if (n_g > 0) total += std::log(alpha_z) + std::lgamma(static_cast<double>(n_g));
  return total;
}

double log_prior(const SamplerState& state, const Hyperparameters& hyper) {
  state.psi.validate();
  hyper.validate();

  const double s2 = hyper.sigma_lambda * hyper.sigma_lambda;
  const Eigen::Index gk = state.loadings.values.size();
  double lp = -0.5 * static_cast<double>(gk) * (kLog2Pi + std::log(s2)) -
              0.5 * state.loadings.values.squaredNorm() / s2;

  const Eigen::Index nk = state.scores.values.size();
  lp += -0.5 * static_cast<double>(nk) * kLog2Pi - 0.5 * state.scores.values.squaredNorm();

  const double lg_alpha = std::lgamma(hyper.alpha);
  for (Eigen::Index j = 0; j < state.psi.psi.size(); ++j) {
    const double psi_j = state.psi.psi[j];
    const double beta_j = hyper.beta[j];
    lp += hyper.alpha * std::log(beta_j) - lg_alpha - (hyper.alpha + 1.0) * std::log(psi_j) -
          beta_j / psi_j;
  }

  lp += log_partition_cohesion(state.partition, hyper.alpha_z);
  return lp;
}

double log_posterior_unnorm(const DataMatrix& data, const SamplerState& state,
                            const Hyperparameters& hyper) {
  return log_likelihood(data, state) + log_prior(state, hyper);
}

Hyperparameters make_hyperparameters(const DataMatrix& data, double sigma_lambda, double alpha,
                                     double alpha_z) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  MatrixXd s = data.values.transpose() * data.values / static_cast<double>(n);

  // beta_j = (alpha - 1) / (S^-1)_jj; ridge the sample covariance if it is singular.
  Eigen::LLT<MatrixXd> llt(s);
  double ridge = 1e-10 * s.trace() / static_cast<double>(p);
  while (llt.info() != Eigen::Success) {
    if (!(ridge < 1e6 * s.trace()))
      throw NumericError("make_hyperparameters: sample covariance not factorizable");
    s.diagonal().array() += ridge;
    llt.compute(s);
    ridge *= 10.0;
  }
  const MatrixXd s_inv = llt.solve(MatrixXd::Identity(p, p));

  Hyperparameters hyper;
  hyper.sigma_lambda = sigma_lambda;
  hyper.alpha = alpha;
  hyper.alpha_z = alpha_z;
  hyper.beta = (alpha - 1.0) / s_inv.diagonal().array();
  hyper.validate();
  return hyper;
}

}  // namespace clfa
