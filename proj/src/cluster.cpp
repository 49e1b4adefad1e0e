#include "clfa/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "clfa/errors.hpp"

namespace clfa {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

KmeansResult kmeans_rows(const MatrixXd& rows, int g, int max_iter) {
  const Eigen::Index m = rows.rows(), d = rows.cols();
  if (g < 1) throw UsageError("kmeans_rows: g must be >= 1");
  if (g > m) throw UsageError("kmeans_rows: g exceeds row count");

  // farthest-point seeding, ties to the lowest index
  MatrixXd centers(g, d);
  Eigen::Index first = 0;
  double best_norm = -1.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double norm2 = rows.row(i).squaredNorm();
    if (norm2 > best_norm) {
      best_norm = norm2;
      first = i;
    }
  }
  centers.row(0) = rows.row(first);
  VectorXd dist2(m);
  for (Eigen::Index i = 0; i < m; ++i) dist2[i] = (rows.row(i) - centers.row(0)).squaredNorm();
  for (int c = 1; c < g; ++c) {
    Eigen::Index far = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < m; ++i)
      if (dist2[i] > best) {
        best = dist2[i];
        far = i;
      }
    centers.row(c) = rows.row(far);
    for (Eigen::Index i = 0; i < m; ++i)
      dist2[i] = std::min(dist2[i], (rows.row(i) - centers.row(c)).squaredNorm());
  }

  KmeansResult res;
  res.assignment.assign(static_cast<std::size_t>(m), 0);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < m; ++i) {
      int arg = 0;
      double best = kInf;
      for (int c = 0; c < g; ++c) {
        const double d2 = (rows.row(i) - centers.row(c)).squaredNorm();
        if (d2 < best) {
          best = d2;
          arg = c;
        }
      }
      if (res.assignment[static_cast<std::size_t>(i)] != arg) {
        res.assignment[static_cast<std::size_t>(i)] = arg;
        changed = true;
      }
    }
    if (!changed && it > 0) break;

    std::vector<int> count(static_cast<std::size_t>(g), 0);
    centers.setZero();
    for (Eigen::Index i = 0; i < m; ++i) {
      centers.row(res.assignment[static_cast<std::size_t>(i)]) += rows.row(i);
      ++count[static_cast<std::size_t>(res.assignment[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < g; ++c)
      if (count[static_cast<std::size_t>(c)] > 0) centers.row(c) /= count[static_cast<std::size_t>(c)];
    std::vector<bool> taken(static_cast<std::size_t>(m), false);
    for (int c = 0; c < g; ++c) {
      if (count[static_cast<std::size_t>(c)] > 0) continue;
      // reseed an empty cluster at the worst-fit row
      Eigen::Index worst = 0;
      double worst_d2 = -1.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (taken[static_cast<std::size_t>(i)]) continue;
        const int a = res.assignment[static_cast<std::size_t>(i)];
        if (count[static_cast<std::size_t>(a)] <= 1) continue;  // keep donor clusters non-empty
        const double d2 = (rows.row(i) - centers.row(a)).squaredNorm();
        if (d2 > worst_d2) {
          worst_d2 = d2;
          worst = i;
        }
      }
      centers.row(c) = rows.row(worst);
      taken[static_cast<std::size_t>(worst)] = true;
    }
  }

  res.centers = std::move(centers);
  // final centers = means of the converged assignment (reseeds may have left raw rows)
  std::vector<int> count(static_cast<std::size_t>(g), 0);
  MatrixXd means = MatrixXd::Zero(g, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    means.row(res.assignment[static_cast<std::size_t>(i)]) += rows.row(i);
    ++count[static_cast<std::size_t>(res.assignment[static_cast<std::size_t>(i)])];
  }
  for (int c = 0; c < g; ++c)
    if (count[static_cast<std::size_t>(c)] > 0) res.centers.row(c) = means.row(c) / count[static_cast<std::size_t>(c)];
  return res;
}

const char* gmm_model_name(GmmModel model) {
  switch (model) {
    case GmmModel::kSphericalEqual: return "spherical-equal";
    case GmmModel::kSphericalVarying: return "spherical-varying";
    case GmmModel::kDiagonalVarying: return "diagonal-varying";
  }
  return "?";
}

static int gmm_param_count(GmmModel model, int g, int d) {
  const int base = g * d + (g - 1);
  switch (model) {
    case GmmModel::kSphericalEqual: return base + 1;
    case GmmModel::kSphericalVarying: return base + g;
    case GmmModel::kDiagonalVarying: return base + g * d;
  }
  return base;
}

GmmFit fit_gmm(const MatrixXd& rows, int g, GmmModel model, int max_iter, double tol) {
  const Eigen::Index m = rows.rows(), d = rows.cols();
  if (g < 1 || g > m) throw UsageError("fit_gmm: invalid component count");

  const Eigen::RowVectorXd grand_mean = rows.colwise().mean();
  const double total_var = (rows.rowwise() - grand_mean).squaredNorm() / (static_cast<double>(m) * d);
  const double floor_v = std::max(total_var, 1e-300) * 1e-10;

  // Conjugate variance regularization (posterior-mode M-step). Without it,
  // BIC selection is hijacked by spurious components sitting on coincident
  // rows, whose fitted variance -> 0 sends the likelihood to infinity.
  const double prior_dof = static_cast<double>(d) + 2.0;
  const double prior_scale =
      std::max(total_var, 1e-300) / std::pow(static_cast<double>(g), 2.0 / static_cast<double>(d));

  const KmeansResult km = kmeans_rows(rows, g);
  VectorXd weights = VectorXd::Zero(g);
  MatrixXd means = MatrixXd::Zero(g, d);
  MatrixXd vars = MatrixXd::Constant(g, d, std::max(total_var, floor_v));
  for (Eigen::Index i = 0; i < m; ++i) {
    weights[km.assignment[static_cast<std::size_t>(i)]] += 1.0;
    means.row(km.assignment[static_cast<std::size_t>(i)]) += rows.row(i);
  }
  for (int c = 0; c < g; ++c)
    if (weights[c] > 0) means.row(c) /= weights[c];
  weights /= static_cast<double>(m);

  MatrixXd log_resp(m, g);
  double loglik = -kInf;
  bool degenerate = false;
  for (int it = 0; it < max_iter; ++it) {
    // E-step in log space
    for (int c = 0; c < g; ++c) {
      const double log_w = std::log(std::max(weights[c], 1e-300));
      for (Eigen::Index i = 0; i < m; ++i) {
        double quad = 0.0, logdet = 0.0;
        for (Eigen::Index t = 0; t < d; ++t) {
          const double diff = rows(i, t) - means(c, t);
          quad += diff * diff / vars(c, t);
          logdet += std::log(vars(c, t));
        }
        log_resp(i, c) = log_w - 0.5 * (d * kLog2Pi + logdet + quad);
      }
    }
    double loglik_new = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double mx = log_resp.row(i).maxCoeff();
      const double lse = mx + std::log((log_resp.row(i).array() - mx).exp().sum());
      loglik_new += lse;
      log_resp.row(i) = (log_resp.row(i).array() - lse).exp();  // now responsibilities
    }

    // M-step
    const VectorXd n_c = log_resp.colwise().sum();
    if (n_c.minCoeff() < 1e-8) {
      degenerate = true;
      break;
    }
    weights = n_c / static_cast<double>(m);
    means = log_resp.transpose() * rows;
    for (int c = 0; c < g; ++c) means.row(c) /= n_c[c];
    MatrixXd second = MatrixXd::Zero(g, d);
    for (Eigen::Index i = 0; i < m; ++i)
      for (int c = 0; c < g; ++c)
        second.row(c) += log_resp(i, c) * (rows.row(i) - means.row(c)).array().square().matrix();
    for (int c = 0; c < g; ++c) second.row(c) /= n_c[c];
    switch (model) {
      case GmmModel::kDiagonalVarying:
        for (int c = 0; c < g; ++c)
          for (Eigen::Index t = 0; t < d; ++t)
            vars(c, t) = (prior_scale + n_c[c] * second(c, t)) / (prior_dof + n_c[c] + 2.0);
        break;
      case GmmModel::kSphericalVarying:
        for (int c = 0; c < g; ++c)
          vars.row(c).setConstant((prior_scale + n_c[c] * d * second.row(c).mean()) /
                                  (prior_dof + n_c[c] * d + 2.0));
        break;
      case GmmModel::kSphericalEqual: {
        double pooled = 0.0;
        for (int c = 0; c < g; ++c) pooled += n_c[c] * d * second.row(c).mean();
        vars.setConstant((prior_scale + pooled) / (prior_dof + static_cast<double>(m) * d + 2.0));
        break;
      }
    }
    if (vars.minCoeff() <= floor_v) {
      degenerate = true;  // a component collapsed onto its points: unbounded likelihood
      break;
    }

    const bool converged = std::abs(loglik_new - loglik) <= tol * (1.0 + std::abs(loglik_new));
    loglik = loglik_new;
    if (converged) break;
  }
  if (degenerate) throw NumericError("fit_gmm: component collapsed");

  GmmFit fit;
  fit.g = g;
  fit.model = model;
  fit.loglik = loglik;
  fit.n_params = gmm_param_count(model, g, static_cast<int>(d));
  fit.bic = 2.0 * loglik - fit.n_params * std::log(static_cast<double>(m));
  fit.assignment.assign(static_cast<std::size_t>(m), 0);
  for (Eigen::Index i = 0; i < m; ++i) {
    int arg = 0;
    double best = -kInf;
    for (int c = 0; c < g; ++c)
      if (log_resp(i, c) > best) {
        best = log_resp(i, c);
        arg = c;
      }
    fit.assignment[static_cast<std::size_t>(i)] = arg;
  }
  return fit;
}

RowClustering cluster_loading_rows(const MatrixXd& loadings, int g_max) {
  const Eigen::Index m = loadings.rows();
  if (m < 2) throw UsageError("cluster_loading_rows: need at least 2 rows");
  if (g_max < 1) throw UsageError("cluster_loading_rows: g_max must be >= 1");

  double spread = 0.0;
  for (Eigen::Index i = 1; i < m; ++i)
    spread = std::max(spread, (loadings.row(i) - loadings.row(0)).norm());
  const double scale = std::max(1.0, loadings.row(0).norm());
  RowClustering out;
  if (spread <= 1e-12 * scale) {
    // identical rows: one cluster, mixture likelihood unbounded so no BIC
    out.assignment.assign(static_cast<std::size_t>(m), 0);
    out.g_selected = 1;
    out.bic = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  const int cap = std::min<int>(g_max, static_cast<int>(m));
  double best = -kInf;
  for (int g = 1; g <= cap; ++g)
    for (GmmModel model : {GmmModel::kSphericalEqual, GmmModel::kSphericalVarying, GmmModel::kDiagonalVarying}) {
      GmmFit fit;
      try {
        fit = fit_gmm(loadings, g, model);
      } catch (const NumericError&) {
        continue;  // collapsed component: configuration not usable
      }
      if (fit.bic > best) {
        best = fit.bic;
        out.assignment = fit.assignment;
        out.g_selected = g;
        out.model = model;
        out.bic = fit.bic;
      }
    }
  if (out.assignment.empty()) throw NumericError("cluster_loading_rows: no mixture fit succeeded");

  // relabel clusters that ended up empty after hard assignment
  std::vector<int> occupancy(static_cast<std::size_t>(out.g_selected), 0);
  for (int a : out.assignment) ++occupancy[static_cast<std::size_t>(a)];
  std::vector<int> remap(static_cast<std::size_t>(out.g_selected), -1);
  int next = 0;
  for (int c = 0; c < out.g_selected; ++c)
    if (occupancy[static_cast<std::size_t>(c)] > 0) remap[static_cast<std::size_t>(c)] = next++;
  for (int& a : out.assignment) a = remap[static_cast<std::size_t>(a)];
  out.g_selected = next;
  return out;
}

}  // namespace clfa
