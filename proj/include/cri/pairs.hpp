#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cri/wild.hpp"

namespace cri {

struct PairsOptions {
  index_t b = 9999;
  std::uint64_t seed = 1;
  bool count_absorbed_in_k = true;
  unsigned threads = 1;
};

// Pairs cluster bootstrap: every replicate resamples G (y_g, X_g) pairs with
// replacement and refits from the cached cluster blocks, so a replicate costs
// O(G k^2 + k^3) and never touches the raw data.  Bootstrap t statistics are
// recentered at beta_hat and studentized with the replicate's own CV1.
// Replicates whose resampled X'X is singular are discarded and counted; more
// than 10% discarded is treated as a failure.
inline BootstrapResult pairs_cluster_test(const RegressionFit& fit, const Eigen::VectorXd& a,
                                          double beta0, const PairsOptions& opts) {
  if (opts.b < 1) throw validation_error("bootstrap needs B >= 1");
  if (a.size() != fit.n_regressors())
    throw validation_error("pairs_cluster_test: direction has wrong length");
  const index_t g_count = fit.g_count();
  const index_t k = fit.n_regressors();
  const double k_dof = static_cast<double>(fit.dof_k(opts.count_absorbed_in_k));

  BootstrapResult result;
  result.variant = BootVariant::Pairs;
  result.seed = opts.seed;
  result.coef_observed = a.dot(fit.beta);
  detail::check_b_advisory(opts.b, result.warnings);

  // observed statistic from the full-sample CV1
  {
    CrveOptions copts;
    copts.count_absorbed_in_k = opts.count_absorbed_in_k;
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
    for (const auto& blocks : fit.per_cluster)
      meat.noalias() += blocks.score * blocks.score.transpose();
    const double n = static_cast<double>(fit.n_obs());
    const double g = static_cast<double>(g_count);
    const double factor =
        g_count >= 2 ? g * (n - 1.0) / ((g - 1.0) * (n - k_dof)) : std::numeric_limits<double>::quiet_NaN();
    const Eigen::MatrixXd cov = factor * fit.xtx_inv * meat * fit.xtx_inv;
    result.tau = detail::safe_studentize(a.dot(fit.beta) - beta0, a.dot(cov * a));
  }

  const std::uint64_t total =
      detail::pow_saturating(static_cast<std::uint64_t>(g_count), g_count);
  result.enumerated = total <= static_cast<std::uint64_t>(opts.b);
  result.b = result.enumerated ? static_cast<index_t>(total) : opts.b;

  std::vector<double> replicates(static_cast<std::size_t>(result.b));
  std::vector<double> coefs(static_cast<std::size_t>(result.b));
  std::vector<unsigned char> ok(static_cast<std::size_t>(result.b), 0);

  parallel_for(static_cast<std::size_t>(result.b), opts.threads, [&](std::size_t rep) {
    std::vector<index_t> chosen(static_cast<std::size_t>(g_count));
    if (result.enumerated) {
      std::uint64_t digits = rep;
      for (index_t j = 0; j < g_count; ++j) {
        chosen[static_cast<std::size_t>(j)] = static_cast<index_t>(digits % g_count);
        digits /= static_cast<std::uint64_t>(g_count);
      }
    } else {
      Rng rng(opts.seed, rep);
      for (index_t j = 0; j < g_count; ++j)
        chosen[static_cast<std::size_t>(j)] = static_cast<index_t>(rng.below(g_count));
    }

    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(k);
    double n_star = 0.0;
    for (const index_t g : chosen) {
      const auto& blocks = fit.per_cluster[static_cast<std::size_t>(g)];
      xtx += blocks.xtx;
      xty += blocks.xty;
      n_star += static_cast<double>(fit.clusters->size_of(g));
    }
    Eigen::LLT<Eigen::MatrixXd> llt(xtx);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-12) return;  // discarded

    const Eigen::VectorXd beta_star = llt.solve(xty);
    const Eigen::MatrixXd xtx_inv = llt.solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
    for (const index_t g : chosen) {
      const auto& blocks = fit.per_cluster[static_cast<std::size_t>(g)];
      const Eigen::VectorXd score = blocks.xty - blocks.xtx * beta_star;
      meat.noalias() += score * score.transpose();
    }
    const double gg = static_cast<double>(g_count);
    const double factor = g_count >= 2
                              ? gg * (n_star - 1.0) / ((gg - 1.0) * (n_star - k_dof))
                              : std::numeric_limits<double>::infinity();
    const double var = factor * a.dot(xtx_inv * meat * xtx_inv * a);
    const double num = a.dot(beta_star) - a.dot(fit.beta);
    replicates[rep] = detail::safe_studentize(num, var);
    coefs[rep] = a.dot(beta_star);
    ok[rep] = 1;
  });

  for (index_t rep = 0; rep < result.b; ++rep) {
    if (ok[static_cast<std::size_t>(rep)]) {
      result.replicates.push_back(replicates[static_cast<std::size_t>(rep)]);
      result.coef_replicates.push_back(coefs[static_cast<std::size_t>(rep)]);
    } else {
      ++result.discarded;
    }
  }
  if (10 * result.discarded > result.b)
    throw numeric_error("pairs cluster bootstrap: more than 10% of replicates were singular; "
                        "the bootstrap distribution is unreliable");
  result.b = static_cast<index_t>(result.replicates.size());

  result.p_symmetric = boot_p_value(result.tau, result.replicates, PKind::Symmetric);
  result.p_equal_tail = boot_p_value(result.tau, result.replicates, PKind::EqualTail);
  return result;
}

}  // namespace cri
