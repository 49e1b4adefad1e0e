#include "clfa/fa.hpp"

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "clfa/errors.hpp"

namespace clfa {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

double marginal_gaussian_loglik(const MatrixXd& s, double n, const MatrixXd& loadings,
                                const VectorXd& psi) {
  const Eigen::Index p = s.rows(), k = loadings.cols();
  if (loadings.rows() != p || psi.size() != p) throw UsageError("marginal loglik: shape mismatch");
  if (!(psi.minCoeff() > 0.0)) throw NumericError("marginal loglik: non-positive uniqueness");

  const VectorXd inv_psi = psi.cwiseInverse();
  const MatrixXd wl = inv_psi.asDiagonal() * loadings;  // Psi^-1 L
  MatrixXd a = MatrixXd::Identity(k, k);
  a.noalias() += loadings.transpose() * wl;
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NumericError("marginal loglik: I + L'Psi^-1 L not SPD");

  double logdet_a = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) logdet_a += 2.0 * std::log(llt.matrixL()(i, i));
  const double logdet = logdet_a + psi.array().log().sum();

  // tr(Sigma^-1 S) = tr(Psi^-1 S) - tr(A^-1 (L'Psi^-1) S (Psi^-1 L))
  const double tr_base = (inv_psi.array() * s.diagonal().array()).sum();
  const MatrixXd m = wl.transpose() * s * wl;  // k x k
  const double tr_corr = llt.solve(m).trace();

  return -0.5 * n * (static_cast<double>(p) * kLog2Pi + logdet + (tr_base - tr_corr));
}

StandardFaFit fit_standard_fa(const DataMatrix& data, int k, int max_em_iter, double tol) {
  const Eigen::Index p = data.p();
  const double n = static_cast<double>(data.n());
  if (k < 1) throw UsageError("fit_standard_fa: k must be >= 1");
  if (k >= p) throw UsageError("fit_standard_fa: k must be < p");
  if (max_em_iter < 1) throw UsageError("fit_standard_fa: max_em_iter must be >= 1");

  const MatrixXd s = data.values.transpose() * data.values / n;
  for (Eigen::Index j = 0; j < p; ++j)
    if (!(s(j, j) > 0.0)) throw DataError("fit_standard_fa: zero-variance column " + std::to_string(j));

  // spectral start: top-k eigenpairs at half energy, psi at half the variances
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
  if (es.info() != Eigen::Success) throw NumericError("fit_standard_fa: eigen decomposition failed");
  MatrixXd lambda(p, k);
  for (int j = 0; j < k; ++j) {
    const Eigen::Index src = p - 1 - j;
    lambda.col(j) = es.eigenvectors().col(src) * std::sqrt(std::max(es.eigenvalues()[src], 0.0) * 0.5);
  }
  VectorXd psi = 0.5 * s.diagonal();

  const double psi_floor_scale = 1e-10;
  double loglik = marginal_gaussian_loglik(s, n, lambda, psi);
  int it = 0;
  for (; it < max_em_iter; ++it) {
    // E-step moments
    const VectorXd inv_psi = psi.cwiseInverse();
    const MatrixXd wl = inv_psi.asDiagonal() * lambda;
    MatrixXd a = MatrixXd::Identity(k, k);
    a.noalias() += lambda.transpose() * wl;
    Eigen::LLT<MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) throw NumericError("fit_standard_fa: E-step factorization failed");
    const MatrixXd delta = llt.solve(wl.transpose());  // K x p, = A^-1 L' Psi^-1
    const MatrixXd c_xu = s * delta.transpose();       // p x K
    MatrixXd c_uu = llt.solve(MatrixXd::Identity(k, k));
    c_uu.noalias() += delta * c_xu;
    c_uu = 0.5 * (c_uu + c_uu.transpose()).eval();

    // M-step
    Eigen::LLT<MatrixXd> llt_uu(c_uu);
    if (llt_uu.info() != Eigen::Success) throw NumericError("fit_standard_fa: M-step factorization failed");
    const MatrixXd lambda_new = llt_uu.solve(c_xu.transpose()).transpose();
    VectorXd psi_new = s.diagonal() - (lambda_new.array() * c_xu.array()).rowwise().sum().matrix();
    for (Eigen::Index j = 0; j < p; ++j) psi_new[j] = std::max(psi_new[j], psi_floor_scale * s(j, j));

    const double loglik_new = marginal_gaussian_loglik(s, n, lambda_new, psi_new);
    if (loglik_new < loglik - 1e-8 * (1.0 + std::abs(loglik)))
      throw NumericError("fit_standard_fa: EM log-likelihood decreased at iteration " + std::to_string(it));
    lambda = lambda_new;
    psi = psi_new;
    const bool converged = std::abs(loglik_new - loglik) <= tol * (1.0 + std::abs(loglik));
    loglik = loglik_new;
    if (converged) {
      ++it;
      break;
    }
  }

  StandardFaFit fit;
  fit.loadings = std::move(lambda);
  fit.psi = std::move(psi);
  fit.loglik = loglik;
  fit.n_params = static_cast<int>(p) * k + static_cast<int>(p);
  fit.em_iters = it;
  return fit;
}

MatrixXd fa_score_means(const DataMatrix& data, const MatrixXd& loadings, const VectorXd& psi) {
  const Eigen::Index k = loadings.cols();
  const MatrixXd wl = psi.cwiseInverse().asDiagonal() * loadings;
  MatrixXd a = MatrixXd::Identity(k, k);
  a.noalias() += loadings.transpose() * wl;
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NumericError("fa_score_means: factorization failed");
  return llt.solve((data.values * wl).transpose()).transpose();
}

}  // namespace clfa
