#include <doctest.h>

#include <cmath>
#include <vector>

#include "clfa/metrics.hpp"
#include "clfa/rng.hpp"
#include "oracles.hpp"

using namespace clfa;

TEST_CASE("correlation_mse over the closed lower triangle") {
  MatrixXd r = MatrixXd::Identity(2, 2);
  MatrixXd ones = MatrixXd::Ones(2, 2);
  CHECK(correlation_mse(r, r) == 0.0);
  CHECK(correlation_mse(r, ones) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(correlation_mse(ones, r) == correlation_mse(r, ones));
  CHECK_THROWS_AS(correlation_mse(r, MatrixXd::Identity(3, 3)), UsageError);

  // Count check: p(p+1)/2 entries, each off-diagonal pair counted once.
  MatrixXd a = MatrixXd::Zero(3, 3);
  MatrixXd b = MatrixXd::Ones(3, 3);
  CHECK(correlation_mse(a, b) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("rv_coefficient trace arithmetic") {
  MatrixXd i4 = MatrixXd::Identity(4, 4);
  MatrixXd j4 = MatrixXd::Ones(4, 4);
  CHECK(rv_coefficient(i4, i4) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rv_coefficient(i4, j4) == doctest::Approx(0.5).epsilon(1e-15));

  Rng rng(5);
  MatrixXd m = MatrixXd::NullaryExpr(4, 4, [&] { return rng.normal(); });
  MatrixXd r = m * m.transpose() + 0.5 * i4;
  CHECK(rv_coefficient(2.0 * r, 0.3 * j4) ==
        doctest::Approx(rv_coefficient(r, j4)).epsilon(1e-12));
  CHECK(rv_coefficient(r, r) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(rv_coefficient(MatrixXd::Zero(2, 2), i4.topLeftCorner(2, 2)), DataError);
}

TEST_CASE("adjusted rand index") {
  std::vector<int> a{1, 1, 2, 2};
  CHECK(adjusted_rand_index(a, a) == doctest::Approx(1.0).epsilon(1e-15));

  // Maximally discordant 2x2 case; frozen from the pair-count oracle.
  std::vector<int> b{1, 2, 1, 2};
  CHECK(oracles::pair_count_ari(a, b) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(adjusted_rand_index(a, b) == doctest::Approx(-0.5).epsilon(1e-12));

  // Label permutations of either argument change nothing.
  std::vector<int> relabeled{7, 7, 3, 3};
  CHECK(adjusted_rand_index(relabeled, b) == doctest::Approx(adjusted_rand_index(a, b)));
  CHECK(adjusted_rand_index(a, std::vector<int>{2, 1, 2, 1}) ==
        doctest::Approx(adjusted_rand_index(a, b)));

  // Trivial pair (all-one-cluster vs all-one-cluster): 0/0 convention.
  std::vector<int> flat{4, 4, 4};
  CHECK(adjusted_rand_index(flat, flat) == 1.0);

  CHECK_THROWS_AS(adjusted_rand_index(a, flat), UsageError);
}

TEST_CASE("adjusted rand index equals the pair-count oracle on every partition pair") {
  for (int n = 2; n <= 6; n += 2) {
    const auto parts = oracles::all_set_partitions(n);
    for (const auto& x : parts)
      for (const auto& y : parts)
        CHECK(adjusted_rand_index(x, y) ==
              doctest::Approx(oracles::pair_count_ari(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("cross_tabulate") {
  std::vector<int> a{0, 0, 1, 1, 1};
  PartitionComparison same = cross_tabulate(a, a);
  CHECK(same.ari == doctest::Approx(1.0));
  CHECK(same.confusion(0, 0) == 2);
  CHECK(same.confusion(1, 1) == 3);
  CHECK(same.confusion(0, 1) == 0);

  std::vector<int> b{2, 0, 0, 2, 2};
  PartitionComparison cmp = cross_tabulate(a, b);
  CHECK(cmp.confusion.sum() == 5);
  CHECK(cmp.ari == doctest::Approx(adjusted_rand_index(a, b)));
  // Row sums recover the occupancy of a; labels are reported sorted.
  CHECK(cmp.row_labels == std::vector<int>{0, 1});
  CHECK(cmp.col_labels == std::vector<int>{0, 2});
  CHECK(cmp.confusion.row(0).sum() == 2);
  CHECK(cmp.confusion.row(1).sum() == 3);
}

TEST_CASE("cluster regression exact and null cases") {
  Rng rng(99);
  const int n = 200;
  DataMatrix data;
  data.values = MatrixXd::NullaryExpr(n, 6, [&] { return rng.normal(); });
  data.variable_labels = {"a", "b", "c", "d", "e", "f"};
  Partition part(std::vector<int>{0, 0, 0, 1, 1, 1}, 2);

  // Response equal to a covariate of cluster 0: perfect fit there.
  VectorXd y = data.values.col(0);
  ClusterRegression reg = cluster_regression(data, part, y);
  CHECK(!reg.skipped[0]);
  CHECK(reg.adjusted_r2[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(reg.adjusted_r2[1] < 0.2);

  // Independent noise response: adjusted R^2 near zero in both clusters.
  VectorXd noise = VectorXd::NullaryExpr(n, [&] { return rng.normal(); });
  ClusterRegression null_reg = cluster_regression(data, part, noise);
  for (int g = 0; g < 2; ++g) {
    CHECK(!null_reg.skipped[g]);
    CHECK(std::abs(null_reg.adjusted_r2[g]) < 0.1);
  }

  // Duplicated column: rank-deficient design still yields a fit, flagged.
  DataMatrix dup = data;
  dup.values.col(1) = dup.values.col(0);
  ClusterRegression rd = cluster_regression(dup, part, y);
  CHECK(rd.rank_deficient[0]);
  CHECK(!rd.rank_deficient[1]);
  CHECK(rd.adjusted_r2[0] == doctest::Approx(1.0).epsilon(1e-10));

  // Clusters too large to fit (n <= n_g + 1) are skipped, as are empty ones.
  DataMatrix tiny;
  tiny.values = MatrixXd::NullaryExpr(4, 4, [&] { return rng.normal(); });
  tiny.variable_labels = {"a", "b", "c", "d"};
  Partition lopsided(std::vector<int>{0, 0, 0, 0}, 2);
  ClusterRegression sk = cluster_regression(tiny, lopsided, VectorXd::Ones(4));
  CHECK(sk.skipped[0]);  // n_g = 4, n = 4
  CHECK(sk.skipped[1]);  // empty
  CHECK(std::isnan(sk.adjusted_r2[0]));
  CHECK(std::isnan(sk.adjusted_r2[1]));

  CHECK_THROWS_AS(cluster_regression(data, part, VectorXd::Ones(3)), UsageError);
  VectorXd bad = y;
  bad[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(cluster_regression(data, part, bad), DataError);
}

TEST_CASE("adding an irrelevant variable does not inflate adjusted R^2 on average") {
  Rng rng(123);
  const int n = 150;
  double mean_delta = 0.0;
  const int reps = 40;
  for (int rep = 0; rep < reps; ++rep) {
    DataMatrix data;
    data.values = MatrixXd::NullaryExpr(n, 4, [&] { return rng.normal(); });
    data.variable_labels = {"a", "b", "c", "d"};
    VectorXd y = data.values.col(0) + 0.5 * VectorXd::NullaryExpr(n, [&] { return rng.normal(); });

    Partition small(std::vector<int>{0, 0, 1, 1}, 2);   // cluster 0 = {a,b}
    Partition larger(std::vector<int>{0, 0, 0, 1}, 2);  // adds irrelevant c
    const double r2_small = cluster_regression(data, small, y).adjusted_r2[0];
    const double r2_large = cluster_regression(data, larger, y).adjusted_r2[0];
    mean_delta += (r2_large - r2_small) / reps;
  }
  CHECK(mean_delta < 0.005);
}

TEST_CASE("mse increases and rv decreases along nested perturbations") {
  Rng rng(321);
  MatrixXd m = MatrixXd::NullaryExpr(5, 5, [&] { return rng.normal(); });
  MatrixXd sigma = m * m.transpose() + 5.0 * MatrixXd::Identity(5, 5);
  VectorXd inv_sd = sigma.diagonal().cwiseSqrt().cwiseInverse();
  MatrixXd r = inv_sd.asDiagonal() * sigma * inv_sd.asDiagonal();
  MatrixXd j = MatrixXd::Ones(5, 5);

  double prev_mse = -1.0, prev_rv = 2.0;
  for (int step = 0; step <= 10; ++step) {
    const double t = step / 10.0;
    MatrixXd r_hat = (1.0 - t) * r + t * j;
    const double mse = correlation_mse(r, r_hat);
    const double rv = rv_coefficient(r, r_hat);
    if (step > 0) {
      CHECK(mse > prev_mse);
      CHECK(rv < prev_rv);
    }
    prev_mse = mse;
    prev_rv = rv;
  }
}
