#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cri/distributions.hpp"
#include "cri/ols.hpp"
#include "cri/parallel.hpp"
#include "cri/rng.hpp"
#include "cri/wild.hpp"

namespace cri {

struct LevelTestOptions {
  index_t b = 999;           // wild bootstrap replicates
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double variance_factor = 1.0;  // optional small-sample factor on V(theta)
};

struct LevelTestResult {
  double theta_hat = 0.0;    // coarse-minus-fine score variance, projected on a
  double tau_stat = 0.0;
  double p_asymptotic = 1.0;  // one-sided upper, N(0,1)
  double p_bootstrap = 1.0;   // one-sided upper, fine-level Rademacher wild
  bool degenerate = false;    // V(theta) = 0, e.g. fine = coarse
  bool enumerated = false;
  index_t b = 0;
  index_t fine_g = 0;
  index_t coarse_g = 0;
};

// Score-variance test of fine against coarse clustering for the combination
// a' beta.  With z_h = w' s_hat_h over fine clusters and w = (X'X)^{-1} a,
// the statistic sums the cross products of fine-cluster scores inside each
// coarse cluster:
//   theta_g = (sum_h z_h)^2 - sum_h z_h^2,    theta = sum_g theta_g,
// standardized by sqrt(sum_g theta_g^2).  Under fine clustering the theta_g
// are mean-zero and independent, and theta is asymptotically N(0,1) after
// standardization; the one-sided alternative is coarse clustering.  The
// bootstrap version re-draws fine-level Rademacher signs on the z_h.
inline LevelTestResult score_variance_test(const RegressionFit& fit, const ClusterPartition& fine,
                                           const ClusterPartition& coarse, const Eigen::VectorXd& a,
                                           const LevelTestOptions& opts = {}) {
  if (fine.n_obs() != fit.n_obs() || coarse.n_obs() != fit.n_obs())
    throw validation_error("score_variance_test: partitions do not match the fit");
  if (!is_nested(fine, coarse))
    throw validation_error("score_variance_test: fine clusters must be nested in coarse clusters");
  if (coarse.g_count() < 2)
    throw validation_error("score_variance_test: need at least two coarse clusters");
  if (a.size() != fit.n_regressors())
    throw validation_error("score_variance_test: direction has wrong length");

  const index_t fine_g = fine.g_count();
  const Eigen::VectorXd w = fit.xtx_inv * a;

  // projected fine-cluster scores and the fine -> coarse map
  Eigen::VectorXd z(fine_g);
  std::vector<index_t> parent(static_cast<std::size_t>(fine_g));
  for (index_t h = 0; h < fine_g; ++h) {
    const auto& rows = fine.members[static_cast<std::size_t>(h)];
    double zh = 0.0;
    for (const index_t i : rows) zh += fit.data->X.row(i).dot(w) * fit.residuals(i);
    z(h) = zh;
    parent[static_cast<std::size_t>(h)] = coarse.assignment[static_cast<std::size_t>(rows.front())];
  }

  const index_t coarse_g = coarse.g_count();
  const auto theta_of = [&](const Eigen::VectorXd& zz) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(coarse_g);
    Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(coarse_g);
    for (index_t h = 0; h < fine_g; ++h) {
      sum(parent[static_cast<std::size_t>(h)]) += zz(h);
      sumsq(parent[static_cast<std::size_t>(h)]) += zz(h) * zz(h);
    }
    double theta = 0.0, var = 0.0;
    for (index_t g = 0; g < coarse_g; ++g) {
      const double tg = sum(g) * sum(g) - sumsq(g);
      theta += tg;
      var += tg * tg;
    }
    return std::pair<double, double>(theta, var);
  };

  LevelTestResult result;
  result.fine_g = fine_g;
  result.coarse_g = coarse_g;

  const auto [theta, var] = theta_of(z);
  result.theta_hat = theta;
  const double scaled_var = opts.variance_factor * var;
  if (!(scaled_var > 0.0)) {
    result.degenerate = true;
    return result;  // tau = 0, both P values 1
  }
  result.tau_stat = theta / std::sqrt(scaled_var);
  result.p_asymptotic = 1.0 - normal_cdf(result.tau_stat);

  // wild bootstrap at the fine level
  if (opts.b < 1) throw validation_error("score_variance_test: bootstrap needs B >= 1");
  const std::uint64_t total = detail::pow_saturating(2, fine_g);
  result.enumerated = total <= static_cast<std::uint64_t>(opts.b);
  result.b = result.enumerated ? static_cast<index_t>(total) : opts.b;

  std::vector<double> taus(static_cast<std::size_t>(result.b));
  parallel_for(static_cast<std::size_t>(result.b), opts.threads, [&](std::size_t rep) {
    Eigen::VectorXd zz(fine_g);
    if (result.enumerated) {
      std::uint64_t digits = rep;
      for (index_t h = 0; h < fine_g; ++h) {
        zz(h) = (digits & 1) ? -z(h) : z(h);
        digits >>= 1;
      }
    } else {
      Rng rng(opts.seed, rep);
      for (index_t h = 0; h < fine_g; ++h) zz(h) = rng.below(2) ? -z(h) : z(h);
    }
    const auto [theta_b, var_b] = theta_of(zz);
    taus[rep] = detail::safe_studentize(theta_b, opts.variance_factor * var_b);
  });

  std::size_t exceed = 0;
  for (const double t : taus) exceed += (t >= result.tau_stat);
  result.p_bootstrap = static_cast<double>(exceed) / static_cast<double>(result.b);
  return result;
}

}  // namespace cri
