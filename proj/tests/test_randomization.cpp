#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "cri/randomization.hpp"
#include "helpers.hpp"

using namespace cri;

namespace {

// Pascal's triangle with 128-bit entries: an independent big-integer oracle.
unsigned __int128 pascal(int n, int k) {
  std::vector<unsigned __int128> row(static_cast<std::size_t>(n) + 1, 0);
  row[0] = 1;
  for (int i = 1; i <= n; ++i)
    for (int j = i; j >= 1; --j) row[static_cast<std::size_t>(j)] += row[static_cast<std::size_t>(j - 1)];
  return row[static_cast<std::size_t>(k)];
}

}  // namespace

TEST_CASE("count_assignments exact values and overflow detection") {
  REQUIRE(count_assignments(5, 2).value == 10);
  REQUIRE_FALSE(count_assignments(5, 2).overflow);
  REQUIRE(count_assignments(5, 5).value == 1);
  REQUIRE(count_assignments(6, 1).value == 6);

  // exact big-integer oracle
  const auto big = count_assignments(51, 25);
  REQUIRE_FALSE(big.overflow);
  REQUIRE(big.value == static_cast<std::uint64_t>(pascal(51, 25)));

  // first overflowing sizes: C(68, 34) exceeds 2^64
  REQUIRE(pascal(68, 34) > static_cast<unsigned __int128>(UINT64_MAX));
  REQUIRE(count_assignments(68, 34).overflow);
  REQUIRE(count_assignments(70, 35).overflow);
  REQUIRE_FALSE(count_assignments(66, 33).overflow);

  REQUIRE_THROWS_AS(count_assignments(5, 0), validation_error);
  REQUIRE_THROWS_AS(count_assignments(5, 6), validation_error);
}

TEST_CASE("ri enumeration covers all re-randomizations once") {
  Rng rng(1601);
  const auto part = test_helpers::sized_partition({4, 4, 4, 4, 4});
  const auto data = test_helpers::random_dataset(rng, 20, 2, part);

  TreatmentSpec treatment;
  treatment.treated_clusters = {0, 2};
  RiOptions opts;
  opts.b = 9999;
  opts.statistic = RiStatistic::Beta;
  const auto result = ri_test(data, part, treatment, opts);

  REQUIRE(result.enumerated);
  REQUIRE(result.s == 9);  // C(5,2) - 1
  REQUIRE(result.replicates.size() == 9);
  REQUIRE(result.skipped == 0);

  // identity p2 = (1 + S p1) / (S + 1), computed with the same expression
  const double s = static_cast<double>(result.s);
  REQUIRE(result.p2 == (1.0 + s * result.p1) / (s + 1.0));

  // recount from the stored replicates
  index_t c = 0;
  for (const double t : result.replicates) c += (std::fabs(t) >= std::fabs(result.observed));
  REQUIRE(result.p1 == static_cast<double>(c) / s);

  // enumerated replicates are seed-independent
  RiOptions other = opts;
  other.seed = 999;
  const auto again = ri_test(data, part, treatment, other);
  REQUIRE(again.replicates == result.replicates);
}

TEST_CASE("upper-tail p1 is 1 when the observed statistic is minimal") {
  // cluster means rise with the cluster index; treating the low cluster
  // makes the observed coefficient the smallest across re-randomizations
  Dataset data;
  data.X.resize(15, 1);
  data.X.col(0).setOnes();
  data.y.resize(15);
  for (index_t i = 0; i < 15; ++i) data.y(i) = static_cast<double>(i / 3) + 0.01 * (i % 3);
  data.names = {"const"};
  const auto part = test_helpers::sized_partition({3, 3, 3, 3, 3});

  TreatmentSpec treatment;
  treatment.treated_clusters = {0};
  RiOptions opts;
  opts.statistic = RiStatistic::Beta;
  opts.two_sided = false;
  const auto result = ri_test(data, part, treatment, opts);
  REQUIRE(result.enumerated);
  REQUIRE(result.s == 4);
  REQUIRE(result.p1 == 1.0);
  REQUIRE(result.p2 == 1.0);
}

TEST_CASE("ri with one treated cluster computes a t statistic without crashing") {
  Rng rng(1602);
  const auto part = test_helpers::sized_partition({4, 4, 4, 4, 4, 4});
  const auto data = test_helpers::random_dataset(rng, 24, 2, part);

  TreatmentSpec treatment;
  treatment.treated_clusters = {3};
  RiOptions opts;
  opts.statistic = RiStatistic::T;
  const auto result = ri_test(data, part, treatment, opts);
  REQUIRE(result.crve_unreliable);
  REQUIRE(std::isfinite(result.observed));
  REQUIRE(result.s == 5);
  REQUIRE(result.p1 >= 0.0);
  REQUIRE(result.p1 <= 1.0);
}

TEST_CASE("sampling mode draws distinct assignments") {
  Rng rng(1603);
  const auto part = test_helpers::random_partition(rng, 60, 12, 3);
  const auto data = test_helpers::random_dataset(rng, 60, 2, part);

  TreatmentSpec treatment;
  treatment.treated_clusters = {0, 1, 2, 3, 4, 5};
  RiOptions opts;
  opts.statistic = RiStatistic::Beta;
  opts.b = 200;  // C(12,6) - 1 = 923 exceeds B
  opts.seed = 7;
  const auto result = ri_test(data, part, treatment, opts);
  REQUIRE_FALSE(result.enumerated);
  REQUIRE_FALSE(result.sampled_with_replacement);
  REQUIRE(result.s == 200);

  // deterministic per seed and threads
  RiOptions par = opts;
  par.threads = 4;
  const auto again = ri_test(data, part, treatment, par);
  REQUIRE(again.replicates == result.replicates);
}

TEST_CASE("did treatment columns switch on at the start period") {
  // 3 clusters x 4 periods, one observation per cell
  std::vector<std::string> cluster_labels;
  std::vector<index_t> period;
  for (int s = 0; s < 3; ++s)
    for (int t = 0; t < 4; ++t) {
      cluster_labels.push_back("s" + std::to_string(s));
      period.push_back(t);
    }
  const auto part = build_partition(cluster_labels);

  Rng rng(1604);
  Dataset data;
  data.X.resize(12, 1);
  data.X.col(0).setOnes();
  data.y.resize(12);
  for (index_t i = 0; i < 12; ++i) data.y(i) = rng.next_normal();
  data.names = {"const"};

  TreatmentSpec treatment;
  treatment.treated_clusters = {1};
  treatment.period_of_obs = period;
  treatment.periods = 4;
  treatment.start_periods = {2};

  RiOptions opts;
  opts.statistic = RiStatistic::Beta;
  const auto result = ri_test(data, part, treatment, opts);
  REQUIRE(result.enumerated);
  REQUIRE(result.s == 2);

  // oracle for the observed statistic: dummy on cluster 1, periods 2-3
  Eigen::VectorXd d = Eigen::VectorXd::Zero(12);
  d(6) = d(7) = 1.0;  // cluster s1 rows with t >= 2
  Dataset augmented = data;
  augmented.X.conservativeResize(12, 2);
  augmented.X.col(1) = d;
  augmented.names.push_back("treatment");
  const auto fit = fit_ols(augmented, part);
  REQUIRE(std::fabs(result.observed - fit.beta(1)) < 1e-12);
}

TEST_CASE("treatment validation") {
  Rng rng(1605);
  const auto part = test_helpers::sized_partition({5, 5, 5});
  const auto data = test_helpers::random_dataset(rng, 15, 1, part);
  TreatmentSpec treatment;
  treatment.treated_clusters = {0, 1, 2};  // no controls left
  REQUIRE_THROWS_AS(ri_test(data, part, treatment, {}), validation_error);
  treatment.treated_clusters = {7};
  REQUIRE_THROWS_AS(ri_test(data, part, treatment, {}), validation_error);
}
