#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cri/crve.hpp"
#include "cri/ols.hpp"

namespace cri {

// Cluster leverages L_g = Tr(X_g'X_g (X'X)^{-1}); they sum to k and average
// k/G, so values far above k/G mark high-leverage clusters.
inline Eigen::VectorXd leverage(const RegressionFit& fit) {
  Eigen::VectorXd lg(fit.g_count());
  for (index_t g = 0; g < fit.g_count(); ++g)
    lg(g) = (fit.per_cluster[static_cast<std::size_t>(g)].xtx * fit.xtx_inv).trace();
  return lg;
}

// Partial leverage of each cluster for coefficient j: the cluster's share of
// the residual sum of squares of x_j after partialing out the other columns.
inline Eigen::VectorXd partial_leverage(const RegressionFit& fit, index_t j) {
  const index_t k = fit.n_regressors();
  if (j < 0 || j >= k) throw validation_error("partial_leverage: coefficient index out of range");
  const Eigen::MatrixXd& x = fit.data->X;
  const index_t n = fit.n_obs();

  Eigen::VectorXd xj_res = x.col(j);
  if (k > 1) {
    Eigen::MatrixXd others(n, k - 1);
    index_t col = 0;
    for (index_t c = 0; c < k; ++c)
      if (c != j) others.col(col++) = x.col(c);
    Eigen::LLT<Eigen::MatrixXd> llt(others.transpose() * others);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-12)
      throw numeric_error("partial_leverage: remaining regressors are collinear");
    xj_res -= others * llt.solve(others.transpose() * x.col(j));
  }
  const double total = xj_res.squaredNorm();
  const double scale = x.col(j).squaredNorm();
  if (!(total > 1e-20 * std::max(scale, 1e-300)))
    throw numeric_error("partial_leverage: column '" + fit.data->names[static_cast<std::size_t>(j)] +
                        "' has no variation left after partialing out the other regressors");

  Eigen::VectorXd lgj(fit.g_count());
  for (index_t g = 0; g < fit.g_count(); ++g) {
    double ss = 0.0;
    for (const index_t i : fit.clusters->members[static_cast<std::size_t>(g)])
      ss += xj_res(i) * xj_res(i);
    lgj(g) = ss / total;
  }
  return lgj;
}

// Delete-one-cluster coefficient vectors; identical to the CV3 jackknife's
// deleted estimates (single implementation).
inline Eigen::MatrixXd influence(const RegressionFit& fit) { return cv3_jackknife(fit).deleted; }

struct EffectiveClusters {
  double v_s = 0.0;      // squared coefficient of variation of partial leverages
  double g_star0 = 0.0;  // effective number of clusters at rho = 0
};

// V_s = (1/(G Lbar^2)) sum (L_gj - Lbar)^2; the effective cluster count is
// reported through the decreasing map G / (1 + V_s), with V_s itself always
// available as the primitive quantity.
inline EffectiveClusters effective_clusters(const Eigen::VectorXd& partial_leverages) {
  const index_t g_count = partial_leverages.size();
  if (g_count < 1) throw validation_error("effective_clusters: no partial leverages");
  const double mean = partial_leverages.mean();
  if (!(mean > 0.0)) throw validation_error("effective_clusters: mean partial leverage must be positive");
  const double g = static_cast<double>(g_count);
  EffectiveClusters out;
  out.v_s = (partial_leverages.array() - mean).square().sum() / (g * mean * mean);
  out.g_star0 = g / (1.0 + out.v_s);
  return out;
}

// Variance inflation from equi-correlated scores in equal-size clusters.
inline double moulton_factor(double cluster_size, double rho) {
  if (!(cluster_size >= 1.0)) throw validation_error("moulton_factor: cluster size must be >= 1");
  if (!(rho >= 0.0 && rho <= 1.0)) throw validation_error("moulton_factor: rho must lie in [0, 1]");
  return 1.0 + (cluster_size - 1.0) * rho;
}

struct SizeSummary {
  index_t g_count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

// Quartiles of the cluster sizes via linear interpolation between order
// statistics (type-7 convention).
inline SizeSummary size_summary(const ClusterPartition& partition) {
  std::vector<double> sizes;
  sizes.reserve(static_cast<std::size_t>(partition.g_count()));
  for (const auto& rows : partition.members) sizes.push_back(static_cast<double>(rows.size()));
  std::sort(sizes.begin(), sizes.end());
  const auto quantile = [&](double p) {
    const double h = (static_cast<double>(sizes.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sizes.size() - 1);
    return sizes[lo] + (h - std::floor(h)) * (sizes[hi] - sizes[lo]);
  };
  SizeSummary out;
  out.g_count = partition.g_count();
  out.min = sizes.front();
  out.q1 = quantile(0.25);
  out.median = quantile(0.5);
  out.q3 = quantile(0.75);
  out.max = sizes.back();
  out.mean = 0.0;
  for (const double s : sizes) out.mean += s;
  out.mean /= static_cast<double>(sizes.size());
  return out;
}

struct DiagnosticsReport {
  index_t coefficient = 0;                 // j the partial quantities refer to
  std::string coefficient_name;
  Eigen::VectorXd leverages;               // L_g
  Eigen::VectorXd partial_leverages;       // L_gj
  Eigen::MatrixXd deleted_estimates;       // G x k
  std::vector<index_t> sizes;              // N_g
  SizeSummary size_stats;
  EffectiveClusters effective;
};

inline DiagnosticsReport diagnose(const RegressionFit& fit, index_t j) {
  DiagnosticsReport report;
  report.coefficient = j;
  report.coefficient_name = fit.data->names[static_cast<std::size_t>(j)];
  report.leverages = leverage(fit);
  report.partial_leverages = partial_leverage(fit, j);
  report.deleted_estimates = influence(fit);
  report.sizes = fit.clusters->sizes();
  report.size_stats = size_summary(*fit.clusters);
  report.effective = effective_clusters(report.partial_leverages);
  return report;
}

// Values for an EDF plot: sorted and rescaled to sum to one, so cluster
// sizes, leverages, and partial leverages share a common scale.
inline std::vector<double> edf_points(const Eigen::VectorXd& values) {
  std::vector<double> out(values.data(), values.data() + values.size());
  std::sort(out.begin(), out.end());
  double total = 0.0;
  for (const double v : out) total += v;
  if (total != 0.0)
    for (double& v : out) v /= total;
  return out;
}

}  // namespace cri
