#pragma once

#include "clfa/types.hpp"

namespace clfa {

struct StandardFaFit {
  MatrixXd loadings;  // p x K
  VectorXd psi;
  double loglik = 0.0;
  int n_params = 0;  // (p*K) + p
  int em_iters = 0;
};

/// Zero-mean Gaussian log-likelihood n draws with sample covariance S under
/// Sigma = loadings loadings' + diag(psi), via Woodbury (no p x p inverse).
double marginal_gaussian_loglik(const MatrixXd& s, double n, const MatrixXd& loadings,
                                const VectorXd& psi);

/// ML factor analysis by EM on the marginal N(0, LL' + Psi); monotone in
/// log-likelihood (a decrease beyond 1e-8 relative is an internal error).
StandardFaFit fit_standard_fa(const DataMatrix& data, int k, int max_em_iter = 500,
                              double tol = 1e-8);

/// E[u_i | x_i] rows under a fitted standard FA model: X Psi^-1 L (I + L'Psi^-1 L)^-1.
MatrixXd fa_score_means(const DataMatrix& data, const MatrixXd& loadings, const VectorXd& psi);

}  // namespace clfa
