#include "clfa/metrics.hpp"

#include <cmath>
#include <limits>
#include <map>

#include <Eigen/QR>

#include "clfa/errors.hpp"

namespace clfa {

double correlation_mse(const MatrixXd& r, const MatrixXd& r_hat) {
  const Eigen::Index p = r.rows();
  if (r.cols() != p || r_hat.rows() != p || r_hat.cols() != p)
    throw UsageError("correlation_mse: dimension mismatch");
  double ssq = 0.0;
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = j; i < p; ++i) {
      const double d = r(i, j) - r_hat(i, j);
      ssq += d * d;
    }
  return ssq / (static_cast<double>(p) * (p + 1) / 2.0);
}

double rv_coefficient(const MatrixXd& r, const MatrixXd& r_hat) {
  if (r.rows() != r_hat.rows() || r.cols() != r_hat.cols())
    throw UsageError("rv_coefficient: dimension mismatch");
  const double num = (r.transpose() * r_hat).trace();
  const double den = std::sqrt((r.transpose() * r).trace() * (r_hat.transpose() * r_hat).trace());
  if (!(den > 0.0)) throw DataError("rv_coefficient: zero-norm input matrix");
  return num / den;
}

static double choose2(double m) { return m * (m - 1.0) / 2.0; }

// contingency counts keyed by (label_a, label_b); ordered map keeps output deterministic
static std::map<std::pair<int, int>, int> contingency(const std::vector<int>& a,
                                                      const std::vector<int>& b) {
  if (a.size() != b.size()) throw UsageError("partition comparison: length mismatch");
  if (a.size() < 2) throw UsageError("partition comparison: need at least 2 items");
  std::map<std::pair<int, int>, int> counts;
  for (std::size_t i = 0; i < a.size(); ++i) ++counts[{a[i], b[i]}];
  return counts;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  const auto counts = contingency(a, b);
  std::map<int, int> row_sum, col_sum;
  double sum_cells = 0.0;
  for (const auto& [key, c] : counts) {
    row_sum[key.first] += c;
    col_sum[key.second] += c;
    sum_cells += choose2(c);
  }
  double sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [lab, c] : row_sum) sum_rows += choose2(c);
  for (const auto& [lab, c] : col_sum) sum_cols += choose2(c);
  const double total = choose2(static_cast<double>(a.size()));
  const double expected = sum_rows * sum_cols / total;
  const double maximum = 0.5 * (sum_rows + sum_cols);
  if (maximum == expected) return 1.0;  // both partitions trivial: identical by convention
  return (sum_cells - expected) / (maximum - expected);
}

PartitionComparison cross_tabulate(const std::vector<int>& a, const std::vector<int>& b) {
  const auto counts = contingency(a, b);
  std::map<int, int> row_of, col_of;
  for (const auto& [key, c] : counts) {
    row_of.emplace(key.first, 0);
    col_of.emplace(key.second, 0);
  }
  PartitionComparison out;
  int r = 0;
  for (auto& [lab, idx] : row_of) {
    idx = r++;
    out.row_labels.push_back(lab);
  }
  int c = 0;
  for (auto& [lab, idx] : col_of) {
    idx = c++;
    out.col_labels.push_back(lab);
  }
  out.confusion = Eigen::MatrixXi::Zero(r, c);
  for (const auto& [key, cnt] : counts) out.confusion(row_of[key.first], col_of[key.second]) = cnt;
  out.ari = adjusted_rand_index(a, b);
  return out;
}

ClusterRegression cluster_regression(const DataMatrix& data, const Partition& partition,
                                     const VectorXd& response) {
  const Eigen::Index n = data.n(), p = data.p();
  if (static_cast<Eigen::Index>(partition.assignment.size()) != p)
    throw UsageError("cluster_regression: partition length != p");
  if (response.size() != n) throw UsageError("cluster_regression: response length != n");
  if (!response.allFinite()) throw DataError("cluster_regression: non-finite response");

  const int G = partition.G;
  ClusterRegression out;
  out.adjusted_r2 = VectorXd::Constant(G, std::numeric_limits<double>::quiet_NaN());
  out.skipped.assign(static_cast<std::size_t>(G), false);
  out.rank_deficient.assign(static_cast<std::size_t>(G), false);

  const double y_mean = response.mean();
  const double sst = (response.array() - y_mean).matrix().squaredNorm();

  for (int g = 0; g < G; ++g) {
    const int n_g = partition.occupancy[static_cast<std::size_t>(g)];
    if (n_g == 0 || n <= n_g + 1 || sst == 0.0) {
      out.skipped[static_cast<std::size_t>(g)] = true;
      continue;
    }
    MatrixXd design(n, n_g + 1);
    design.col(0).setOnes();
    int c = 1;
    for (Eigen::Index j = 0; j < p; ++j)
      if (partition.assignment[static_cast<std::size_t>(j)] == g) design.col(c++) = data.values.col(j);

    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(design);
    if (cod.rank() < design.cols()) out.rank_deficient[static_cast<std::size_t>(g)] = true;
    const VectorXd coef = cod.solve(response);
    const double ssr = (response - design * coef).squaredNorm();
    const double r2 = 1.0 - ssr / sst;
    out.adjusted_r2[g] = 1.0 - (1.0 - r2) * (n - 1.0) / (n - n_g - 1.0);
  }
  return out;
}

}  // namespace clfa
