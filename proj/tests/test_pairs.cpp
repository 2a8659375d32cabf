#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <cmath>

#include "cri/pairs.hpp"
#include "helpers.hpp"

using namespace cri;

TEST_CASE("pairs bootstrap with one cluster reproduces the original sample") {
  Dataset data;
  data.X.resize(5, 1);
  data.X.col(0) << 1, 2, 3, 4, 5;
  data.y.resize(5);
  data.y << 1.1, 2.3, 2.8, 4.2, 4.9;
  data.names = {"x"};
  const auto part = build_partition({"a", "a", "a", "a", "a"});
  const auto fit = fit_ols(data, part);

  PairsOptions opts;
  opts.b = 99;
  Eigen::VectorXd a = Eigen::VectorXd::Ones(1);
  const auto result = pairs_cluster_test(fit, a, 0.0, opts);
  REQUIRE(result.enumerated);
  REQUIRE(result.b == 1);
  REQUIRE(result.replicates.size() == 1);
  REQUIRE(result.replicates.front() == 0.0);
}

TEST_CASE("identical clusters give degenerate pairs replicates") {
  // three byte-identical clusters: any resample refits to the same beta
  Dataset data;
  data.X.resize(9, 2);
  data.y.resize(9);
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 3; ++i) {
      data.X(3 * c + i, 0) = 1.0;
      data.X(3 * c + i, 1) = static_cast<double>(i);
      data.y(3 * c + i) = 0.5 + 0.25 * i + (i == 1 ? 0.3 : 0.0);
    }
  }
  data.names = {"const", "x"};
  const auto part = test_helpers::sized_partition({3, 3, 3});
  const auto fit = fit_ols(data, part);

  PairsOptions opts;
  opts.b = 50;  // >= 3^3, so enumeration covers all draws
  Eigen::VectorXd a = Eigen::VectorXd::Zero(2);
  a(1) = 1.0;
  const auto result = pairs_cluster_test(fit, a, 0.0, opts);
  REQUIRE(result.enumerated);
  REQUIRE(result.b == 27);
  for (const double t : result.replicates) REQUIRE(t == 0.0);
}

TEST_CASE("pairs enumeration at G=3 matches the exhaustive refit oracle") {
  Rng rng(1201);
  const auto part = test_helpers::sized_partition({3, 4, 3});
  const auto data = test_helpers::random_dataset(rng, 10, 2, part);
  const auto fit = fit_ols(data, part);

  PairsOptions opts;
  opts.b = 27;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(2);
  a(1) = 1.0;
  const auto result = pairs_cluster_test(fit, a, 0.0, opts);
  REQUIRE(result.enumerated);
  REQUIRE(result.b == 27);

  // oracle: all 27 ordered draws, each refit by stacking raw cluster rows
  std::vector<double> oracle;
  for (int d0 = 0; d0 < 3; ++d0)
    for (int d1 = 0; d1 < 3; ++d1)
      for (int d2 = 0; d2 < 3; ++d2) {
        std::vector<index_t> rows;
        for (const int g : {d0, d1, d2})
          for (const index_t i : part.members[static_cast<std::size_t>(g)]) rows.push_back(i);
        Eigen::MatrixXd x(static_cast<index_t>(rows.size()), 2);
        Eigen::VectorXd y(static_cast<index_t>(rows.size()));
        for (std::size_t ii = 0; ii < rows.size(); ++ii) {
          x.row(static_cast<index_t>(ii)) = data.X.row(rows[ii]);
          y(static_cast<index_t>(ii)) = data.y(rows[ii]);
        }
        const Eigen::VectorXd beta = (x.transpose() * x).ldlt().solve(x.transpose() * y);
        oracle.push_back(beta(1));
      }

  auto got = result.coef_replicates;
  std::sort(got.begin(), got.end());
  std::sort(oracle.begin(), oracle.end());
  REQUIRE(got.size() == oracle.size());
  for (std::size_t i = 0; i < got.size(); ++i)
    REQUIRE(std::fabs(got[i] - oracle[i]) < 1e-10 * std::max(1.0, std::fabs(oracle[i])));
}

TEST_CASE("singular pairs replicates are discarded and counted") {
  // x1 varies only inside clusters c and d; draws missing both are singular
  Rng rng(1202);
  Dataset data;
  data.X.resize(16, 2);
  data.y.resize(16);
  data.X.col(0).setOnes();
  const auto part = test_helpers::sized_partition({4, 4, 4, 4});
  for (index_t i = 0; i < 16; ++i) {
    const auto g = part.assignment[static_cast<std::size_t>(i)];
    data.X(i, 1) = g >= 2 ? rng.next_normal() : 0.0;
    data.y(i) = rng.next_normal();
  }
  data.names = {"const", "x1"};
  const auto fit = fit_ols(data, part);

  PairsOptions opts;
  opts.b = 256;  // 4^4 enumeration
  Eigen::VectorXd a = Eigen::VectorXd::Zero(2);
  a(1) = 1.0;
  const auto result = pairs_cluster_test(fit, a, 0.0, opts);
  REQUIRE(result.enumerated);
  // draws from {a, b} only: 2^4 = 16 of 256
  REQUIRE(result.discarded == 16);
  REQUIRE(result.b == 240);
  REQUIRE(result.replicates.size() == 240);
}

TEST_CASE("too many singular replicates is a hard error") {
  Rng rng(1203);
  Dataset data;
  data.X.resize(9, 2);
  data.y.resize(9);
  data.X.col(0).setOnes();
  const auto part = test_helpers::sized_partition({3, 3, 3});
  for (index_t i = 0; i < 9; ++i) {
    data.X(i, 1) = i < 3 ? rng.next_normal() : 0.0;  // varies only in cluster a
    data.y(i) = rng.next_normal();
  }
  data.names = {"const", "x1"};
  const auto fit = fit_ols(data, part);

  PairsOptions opts;
  opts.b = 27;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(2);
  a(1) = 1.0;
  // 8 of 27 draws miss cluster a: roughly 30% discarded
  REQUIRE_THROWS_AS(pairs_cluster_test(fit, a, 0.0, opts), numeric_error);
}

TEST_CASE("sampled pairs bootstrap is deterministic per seed and thread count") {
  Rng rng(1204);
  const auto part = test_helpers::random_partition(rng, 48, 8, 3);
  const auto data = test_helpers::random_dataset(rng, 48, 2, part);
  const auto fit = fit_ols(data, part);

  PairsOptions opts;
  opts.b = 299;
  opts.seed = 11;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(2);
  a(1) = 1.0;
  const auto one = pairs_cluster_test(fit, a, 0.0, opts);
  opts.threads = 8;
  const auto eight = pairs_cluster_test(fit, a, 0.0, opts);
  REQUIRE(one.replicates == eight.replicates);
  REQUIRE_FALSE(one.enumerated);
  REQUIRE(one.b == 299);
}
