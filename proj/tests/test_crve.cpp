#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "cri/crve.hpp"
#include "helpers.hpp"

using namespace cri;

namespace {

// Dense oracle for CV1: explicitly formed scores, textbook formula.
Eigen::MatrixXd cv1_oracle(const Dataset& data, const ClusterPartition& part,
                           const Eigen::VectorXd& beta) {
  const index_t k = data.n_regressors();
  const Eigen::MatrixXd xtx_inv = (data.X.transpose() * data.X).inverse();
  const Eigen::VectorXd u = data.y - data.X * beta;
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
  for (const auto& rows : part.members) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(k);
    for (const auto i : rows) s += data.X.row(i).transpose() * u(i);
    meat += s * s.transpose();
  }
  const double n = static_cast<double>(data.n_obs());
  const double g = static_cast<double>(part.g_count());
  const double factor = g * (n - 1.0) / ((g - 1.0) * (n - static_cast<double>(k)));
  return factor * xtx_inv * meat * xtx_inv;
}

// Dense oracle for CV2 / CV3 via explicit M_gg powers (-1/2 or -1).
Eigen::MatrixXd cv_adjusted_oracle(const Dataset& data, const ClusterPartition& part,
                                   const Eigen::VectorXd& beta, double power, double factor) {
  const index_t k = data.n_regressors();
  const Eigen::MatrixXd xtx_inv = (data.X.transpose() * data.X).inverse();
  const Eigen::VectorXd u = data.y - data.X * beta;
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
  for (const auto& rows : part.members) {
    const index_t ng = static_cast<index_t>(rows.size());
    Eigen::MatrixXd xg(ng, k);
    Eigen::VectorXd ug(ng);
    for (index_t ii = 0; ii < ng; ++ii) {
      xg.row(ii) = data.X.row(rows[static_cast<std::size_t>(ii)]);
      ug(ii) = u(rows[static_cast<std::size_t>(ii)]);
    }
    const Eigen::MatrixXd mgg = Eigen::MatrixXd::Identity(ng, ng) - xg * xtx_inv * xg.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mgg);
    const Eigen::MatrixXd mpow = eig.eigenvectors() *
                                 eig.eigenvalues().array().pow(power).matrix().asDiagonal() *
                                 eig.eigenvectors().transpose();
    const Eigen::VectorXd s = xg.transpose() * mpow * ug;
    meat += s * s.transpose();
  }
  return factor * xtx_inv * meat * xtx_inv;
}

}  // namespace

TEST_CASE("cv1 matches the dense formula") {
  Rng rng(21);
  const auto part = test_helpers::sized_partition({3, 2, 3});
  const auto data = test_helpers::random_dataset(rng, 8, 2, part);
  const auto fit = fit_ols(data, part);
  const auto cov = cv1(fit);
  const auto oracle = cv1_oracle(data, part, fit.beta);
  REQUIRE((cov.matrix - oracle).cwiseAbs().maxCoeff() < 1e-12 * oracle.cwiseAbs().maxCoeff());
  REQUIRE(cov.dof == 2.0);
}

TEST_CASE("zero residuals give zero variance matrices") {
  Dataset data;
  data.X.resize(6, 1);
  data.X.col(0) << 1, 2, 3, 4, 5, 6;
  data.y = -0.7 * data.X.col(0);
  data.names = {"x"};
  const auto part = build_partition({"a", "a", "b", "b", "c", "c"});
  const auto fit = fit_ols(data, part);
  REQUIRE(cv1(fit).matrix.cwiseAbs().maxCoeff() < 1e-20);
  REQUIRE(cv2(fit).matrix.cwiseAbs().maxCoeff() < 1e-20);
  const auto jack = cv3_jackknife(fit);
  REQUIRE(jack.cov.matrix.cwiseAbs().maxCoeff() < 1e-16);
  for (index_t g = 0; g < part.g_count(); ++g)
    REQUIRE((jack.deleted.row(g).transpose() - fit.beta).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("cv2 matches the dense eigendecomposition oracle") {
  Rng rng(22);
  const auto part = test_helpers::sized_partition({3, 2, 3});
  const auto data = test_helpers::random_dataset(rng, 8, 2, part);
  const auto fit = fit_ols(data, part);
  const auto cov = cv2(fit);
  const auto oracle = cv_adjusted_oracle(data, part, fit.beta, -0.5, 1.0);
  REQUIRE((cov.matrix - oracle).cwiseAbs().maxCoeff() < 1e-10 * oracle.cwiseAbs().maxCoeff());
}

TEST_CASE("cv2 rejects singular M_gg from unabsorbed fixed effects") {
  // a cluster dummy among the regressors makes M_gg singular for that cluster
  Dataset data;
  data.X.resize(6, 2);
  data.X.col(0) << 1, 1, 1, 0, 0, 0;  // dummy for cluster a
  data.X.col(1) << 0.3, -1.2, 0.7, 1.9, -0.4, 0.8;
  data.y.resize(6);
  data.y << 1.2, 0.8, -0.3, 0.5, 1.9, -1.1;
  data.names = {"dummy_a", "x"};
  const auto part = build_partition({"a", "a", "a", "b", "b", "b"});
  const auto fit = fit_ols(data, part);
  REQUIRE_THROWS_AS(cv2(fit), numeric_error);
}

TEST_CASE("cv3 jackknife equals the dense adjusted-score form on random instances") {
  Rng rng(23);
  for (int rep = 0; rep < 50; ++rep) {
    const index_t g_count = 3 + static_cast<index_t>(rng.below(6));
    const index_t k = 1 + static_cast<index_t>(rng.below(4));
    const index_t n = std::max<index_t>(g_count * 3, k * 4 + 4);
    const auto part = test_helpers::random_partition(rng, n, g_count, 2);
    const auto data = test_helpers::random_dataset(rng, n, k, part);
    const auto fit = fit_ols(data, part);
    const auto jack = cv3_jackknife(fit);
    const double g = static_cast<double>(g_count);
    const auto oracle = cv_adjusted_oracle(data, part, fit.beta, -1.0, (g - 1.0) / g);
    const double denom = std::max(oracle.norm(), 1e-300);
    REQUIRE((jack.cov.matrix - oracle).norm() / denom < 1e-8);
  }
}

TEST_CASE("cv3 deleted estimates match refits without each cluster") {
  Rng rng(24);
  const auto part = test_helpers::random_partition(rng, 30, 5, 3);
  const auto data = test_helpers::random_dataset(rng, 30, 3, part);
  const auto fit = fit_ols(data, part);
  const auto jack = cv3_jackknife(fit);

  for (index_t g = 0; g < part.g_count(); ++g) {
    std::vector<index_t> keep;
    for (index_t i = 0; i < 30; ++i)
      if (part.assignment[static_cast<std::size_t>(i)] != g) keep.push_back(i);
    Dataset sub;
    sub.y.resize(static_cast<index_t>(keep.size()));
    sub.X.resize(static_cast<index_t>(keep.size()), 3);
    for (std::size_t ii = 0; ii < keep.size(); ++ii) {
      sub.y(static_cast<index_t>(ii)) = data.y(keep[ii]);
      sub.X.row(static_cast<index_t>(ii)) = data.X.row(keep[ii]);
    }
    const Eigen::VectorXd oracle =
        (sub.X.transpose() * sub.X).ldlt().solve(sub.X.transpose() * sub.y);
    REQUIRE((jack.deleted.row(g).transpose() - oracle).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("cv3 names the cluster whose deletion is singular") {
  // x varies only inside cluster a; deleting it kills identification
  Dataset data;
  data.X.resize(6, 1);
  data.X.col(0) << 1.0, -1.0, 2.0, 0.0, 0.0, 0.0;
  data.y.resize(6);
  data.y << 0.5, 1.0, -0.5, 0.1, -0.2, 0.3;
  data.names = {"x"};
  const auto part = build_partition({"a", "a", "a", "b", "b", "b"});
  const auto fit = fit_ols(data, part);
  try {
    cv3_jackknife(fit);
    FAIL("expected singular deletion error");
  } catch (const numeric_error& e) {
    REQUIRE(std::string(e.what()).find("'a'") != std::string::npos);
  }
}

TEST_CASE("singleton clusters reduce CV1/CV2/CV3 to HC estimators") {
  Rng rng(25);
  const index_t n = 14, k = 2;
  const auto part = singleton_partition(n);
  const auto data = test_helpers::random_dataset(rng, n, k, part);
  const auto fit = fit_ols(data, part);

  const Eigen::MatrixXd xtx_inv = fit.xtx_inv;
  const Eigen::VectorXd u = fit.residuals;
  Eigen::MatrixXd hc1_meat = Eigen::MatrixXd::Zero(k, k);
  Eigen::MatrixXd hc2_meat = Eigen::MatrixXd::Zero(k, k);
  Eigen::MatrixXd hc3_meat = Eigen::MatrixXd::Zero(k, k);
  for (index_t i = 0; i < n; ++i) {
    const double h = data.X.row(i) * xtx_inv * data.X.row(i).transpose();
    const Eigen::MatrixXd op = data.X.row(i).transpose() * data.X.row(i);
    hc1_meat += u(i) * u(i) * op;
    hc2_meat += u(i) * u(i) / (1.0 - h) * op;
    hc3_meat += u(i) * u(i) / ((1.0 - h) * (1.0 - h)) * op;
  }
  const double nn = static_cast<double>(n);
  const Eigen::MatrixXd hc1_o = nn / (nn - k) * xtx_inv * hc1_meat * xtx_inv;
  const Eigen::MatrixXd hc2_o = xtx_inv * hc2_meat * xtx_inv;
  const Eigen::MatrixXd hc3_o = (nn - 1.0) / nn * xtx_inv * hc3_meat * xtx_inv;

  const double scale = hc1_o.cwiseAbs().maxCoeff();
  REQUIRE((cv1(fit).matrix - hc1_o).cwiseAbs().maxCoeff() < 1e-10 * scale);
  REQUIRE((cv2(fit).matrix - hc2_o).cwiseAbs().maxCoeff() < 1e-10 * scale);
  REQUIRE((cv3_jackknife(fit).cov.matrix - hc3_o).cwiseAbs().maxCoeff() < 1e-10 * scale);
  // hc1() shortcut agrees with cv1 over singletons
  REQUIRE((hc1(fit).matrix - hc1_o).cwiseAbs().maxCoeff() < 1e-10 * scale);
}

TEST_CASE("one-way CRVEs are PSD on random instances") {
  Rng rng(26);
  for (int rep = 0; rep < 20; ++rep) {
    const index_t g_count = 3 + static_cast<index_t>(rng.below(5));
    const index_t n = 24 + static_cast<index_t>(rng.below(20));
    const auto part = test_helpers::random_partition(rng, n, g_count, 2);
    const auto data = test_helpers::random_dataset(rng, n, 3, part);
    const auto fit = fit_ols(data, part);
    for (const auto& cov : {cv1(fit), cv2(fit), cv3_jackknife(fit).cov}) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov.matrix);
      REQUIRE(eig.eigenvalues().minCoeff() >= -1e-10 * cov.matrix.trace());
    }
  }
}

TEST_CASE("two-way cv1 with identical partitions reduces to one-way") {
  Rng rng(27);
  const auto part = test_helpers::random_partition(rng, 24, 4, 3);
  const auto data = test_helpers::random_dataset(rng, 24, 2, part);
  const auto fit = fit_ols(data, part);
  const auto crossed = build_crossed(part, part);
  const auto fit_ab = fit_ols(fit.data, std::make_shared<const ClusterPartition>(crossed.intersection));

  TwoWayOptions opts;
  opts.per_term_factors = false;
  const auto twoway = twoway_cv1(fit, fit, fit_ab, opts);

  // with factors disabled the three equal terms net to the plain sandwich
  const index_t k = 2;
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
  for (const auto& blocks : fit.per_cluster) meat += blocks.score * blocks.score.transpose();
  const Eigen::MatrixXd oracle = fit.xtx_inv * meat * fit.xtx_inv;
  REQUIRE((twoway.matrix - oracle).cwiseAbs().maxCoeff() < 1e-12 * oracle.cwiseAbs().maxCoeff());
  REQUIRE(twoway.dof == 3.0);
}

TEST_CASE("two-way cv1 with singleton dimensions gives the HC meat") {
  Rng rng(28);
  const index_t n = 12;
  const auto part = singleton_partition(n);
  const auto data = test_helpers::random_dataset(rng, n, 2, part);
  const auto fit = fit_ols(data, part);
  const auto crossed = build_crossed(part, part);
  const auto fit_ab = fit_ols(fit.data, std::make_shared<const ClusterPartition>(crossed.intersection));

  TwoWayOptions opts;
  opts.per_term_factors = false;
  const auto twoway = twoway_cv1(fit, fit, fit_ab, opts);
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(2, 2);
  for (index_t i = 0; i < n; ++i) {
    const Eigen::VectorXd s = data.X.row(i).transpose() * fit.residuals(i);
    meat += s * s.transpose();
  }
  const Eigen::MatrixXd oracle = fit.xtx_inv * meat * fit.xtx_inv;
  REQUIRE((twoway.matrix - oracle).cwiseAbs().maxCoeff() < 1e-12 * oracle.cwiseAbs().maxCoeff());
}

TEST_CASE("two-way cv1 matches the explicit triple sum on a 2x2 design") {
  Rng rng(29);
  // 2 clusters in each dimension, crossed over 12 observations
  std::vector<std::string> a_labels, b_labels;
  for (int i = 0; i < 12; ++i) {
    a_labels.push_back(i < 6 ? "g1" : "g2");
    b_labels.push_back(i % 2 == 0 ? "h1" : "h2");
  }
  const auto pa = build_partition(a_labels);
  const auto pb = build_partition(b_labels);
  const auto crossed = build_crossed(pa, pb);

  const auto data = test_helpers::random_dataset(rng, 12, 2, pa);
  const auto fit_a = fit_ols(data, pa);
  const auto fit_b = fit_ols(fit_a.data, std::make_shared<const ClusterPartition>(pb));
  const auto fit_ab =
      fit_ols(fit_a.data, std::make_shared<const ClusterPartition>(crossed.intersection));

  const auto twoway = twoway_cv1(fit_a, fit_b, fit_ab);

  // oracle: triple sum with per-term G/(G-1) factors
  const auto meat_for = [&](const ClusterPartition& part) {
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(2, 2);
    for (const auto& rows : part.members) {
      Eigen::VectorXd s = Eigen::VectorXd::Zero(2);
      for (const auto i : rows) s += data.X.row(i).transpose() * fit_a.residuals(i);
      meat += s * s.transpose();
    }
    return meat;
  };
  const Eigen::MatrixXd meat = 2.0 * meat_for(pa) + 2.0 * meat_for(pb) -
                               4.0 / 3.0 * meat_for(crossed.intersection);
  const Eigen::MatrixXd oracle = fit_a.xtx_inv * meat * fit_a.xtx_inv;
  REQUIRE((twoway.matrix - oracle).cwiseAbs().maxCoeff() < 1e-12 * oracle.cwiseAbs().maxCoeff());
  REQUIRE(twoway.dof == 1.0);
}

TEST_CASE("t test basics") {
  Rng rng(30);
  const auto part = test_helpers::random_partition(rng, 40, 8);
  const auto data = test_helpers::random_dataset(rng, 40, 3, part);
  const auto fit = fit_ols(data, part);
  const auto cov = cv1(fit);

  // beta_j = beta0 gives t = 0, P = 1
  const auto at_null = t_test(fit, cov, 1, fit.beta(1));
  REQUIRE(at_null.statistic == 0.0);
  REQUIRE(at_null.p_value == 1.0);

  // |t| at the 0.975 quantile gives P = 0.05
  const double q = student_t_quantile(0.975, cov.dof);
  const double beta0 = fit.beta(1) - q * cov.se(1);
  const auto at_quantile = t_test(fit, cov, 1, beta0);
  REQUIRE(std::fabs(at_quantile.statistic - q) < 1e-10);
  REQUIRE(std::fabs(at_quantile.p_value - 0.05) < 1e-10);
}

TEST_CASE("wald with one restriction equals the two-sided t test") {
  Rng rng(31);
  const auto part = test_helpers::random_partition(rng, 40, 8);
  const auto data = test_helpers::random_dataset(rng, 40, 3, part);
  const auto fit = fit_ols(data, part);
  const auto cov = cv1(fit);

  const auto t = t_test(fit, cov, 2, 0.1);
  const auto w = wald_test(fit, cov, Restriction::coefficient(2, 3, 0.1));
  REQUIRE(std::fabs(w.statistic - t.statistic * t.statistic) < 1e-10);
  REQUIRE(std::fabs(w.p_value - t.p_value) < 1e-12);
}

TEST_CASE("wald at the restriction is zero and oracle-checked at r=2") {
  Rng rng(32);
  const auto part = test_helpers::random_partition(rng, 40, 8);
  const auto data = test_helpers::random_dataset(rng, 40, 3, part);
  const auto fit = fit_ols(data, part);
  const auto cov = cv1(fit);

  Restriction exact;
  exact.R.resize(2, 3);
  exact.R << 0, 1, 0, 0, 0, 1;
  exact.r.resize(2);
  exact.r << fit.beta(1), fit.beta(2);
  const auto at_null = wald_test(fit, cov, exact);
  REQUIRE(std::fabs(at_null.statistic) < 1e-18);
  REQUIRE(at_null.p_value == 1.0);

  Restriction rest = exact;
  rest.r << 0.0, 0.0;
  const auto w = wald_test(fit, cov, rest);
  const Eigen::MatrixXd rvr = rest.R * cov.matrix * rest.R.transpose();
  const Eigen::VectorXd gap = rest.R * fit.beta;
  const double oracle = gap.dot(rvr.inverse() * gap);
  REQUIRE(std::fabs(w.statistic - oracle) < 1e-10 * std::max(1.0, oracle));

  const double g = cov.dof + 1.0;
  const double adjusted = oracle * (g - 2.0) / (2.0 * (g - 1.0));
  REQUIRE(std::fabs(w.p_value - (1.0 - f_cdf(adjusted, 2.0, g - 2.0))) < 1e-12);
}

TEST_CASE("wald refuses more restrictions than the CRVE rank supports") {
  Rng rng(33);
  const auto part = test_helpers::sized_partition({5, 5, 5});
  const auto data = test_helpers::random_dataset(rng, 15, 3, part);
  const auto fit = fit_ols(data, part);
  const auto cov = cv1(fit);  // dof = 2
  Restriction rest;
  rest.R = Eigen::MatrixXd::Identity(3, 3);
  rest.r = Eigen::VectorXd::Zero(3);
  REQUIRE_THROWS_AS(wald_test(fit, cov, rest), validation_error);
}
