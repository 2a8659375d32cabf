#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cri/dataset.hpp"
#include "cri/partition.hpp"

namespace cri {

// Linear restriction R beta = r with R of full row rank.
struct Restriction {
  Eigen::MatrixXd R;
  Eigen::VectorXd r;

  index_t n_restrictions() const { return R.rows(); }

  // Single-coefficient restriction beta_j = value.
  static Restriction coefficient(index_t j, index_t k, double value) {
    Restriction rest;
    rest.R = Eigen::MatrixXd::Zero(1, k);
    rest.R(0, j) = 1.0;
    rest.r = Eigen::VectorXd::Constant(1, value);
    return rest;
  }

  // a' beta = value for an arbitrary direction a.
  static Restriction combination(const Eigen::VectorXd& a, double value) {
    Restriction rest;
    rest.R = a.transpose();
    rest.r = Eigen::VectorXd::Constant(1, value);
    return rest;
  }

  void validate(index_t k) const {
    if (R.rows() < 1 || R.cols() != k)
      throw validation_error("restriction matrix has the wrong shape");
    if (r.size() != R.rows())
      throw validation_error("restriction target length does not match row count");
    if (R.rows() > k) throw validation_error("more restrictions than coefficients");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(R.transpose());
    if (qr.rank() < R.rows())
      throw validation_error("restriction matrix is not of full row rank");
  }
};

struct ClusterBlocks {
  Eigen::MatrixXd xtx;   // X_g' X_g
  Eigen::VectorXd xty;   // X_g' y_g
  Eigen::VectorXd score;  // X_g' u_hat_g
};

struct RestrictedFit {
  Restriction restriction;
  Eigen::VectorXd beta;       // restricted estimator
  Eigen::VectorXd residuals;  // y - X beta_tilde
  Eigen::MatrixXd scores;     // G x k, row g = restricted score s_tilde_g'
};

// OLS results plus the per-cluster blocks every variance estimator and
// bootstrap in this library consumes.  Immutable once built; the dataset and
// partition are shared, not copied, across derived fits.
struct RegressionFit {
  std::shared_ptr<const Dataset> data;
  std::shared_ptr<const ClusterPartition> clusters;
  Eigen::VectorXd beta;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd xtx;
  Eigen::MatrixXd xtx_inv;
  std::vector<ClusterBlocks> per_cluster;
  std::optional<RestrictedFit> restricted;

  index_t n_obs() const { return data->n_obs(); }
  index_t n_regressors() const { return data->n_regressors(); }
  index_t g_count() const { return clusters->g_count(); }

  // Column count for degrees-of-freedom corrections; absorbed fixed effects
  // are counted by default (the convention of absorbing-regression tools).
  index_t dof_k(bool count_absorbed = true) const {
    return n_regressors() + (count_absorbed ? data->absorbed_count : 0);
  }

  // G x k matrix whose g-th row is the unrestricted score s_hat_g'.
  Eigen::MatrixXd score_matrix() const {
    Eigen::MatrixXd s(g_count(), n_regressors());
    for (index_t g = 0; g < g_count(); ++g) s.row(g) = per_cluster[static_cast<std::size_t>(g)].score;
    return s;
  }
};

namespace detail {

inline void throw_rank_error(const Dataset& data) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.X);
  qr.setThreshold(1e-10);
  const index_t rank = qr.rank();
  std::ostringstream msg;
  msg << "X'X is numerically singular (rank " << rank << " of " << data.n_regressors() << ")";
  if (rank < data.n_regressors()) {
    msg << "; dependent columns:";
    const auto perm = qr.colsPermutation().indices();
    for (index_t j = rank; j < data.n_regressors(); ++j)
      msg << ' ' << data.names[static_cast<std::size_t>(perm(j))];
  }
  throw numeric_error(msg.str());
}

}  // namespace detail

inline RegressionFit fit_ols(std::shared_ptr<const Dataset> data,
                             std::shared_ptr<const ClusterPartition> clusters) {
  data->validate();
  if (clusters->n_obs() != data->n_obs())
    throw validation_error("fit_ols: partition does not match dataset rows");

  RegressionFit fit;
  fit.data = std::move(data);
  fit.clusters = std::move(clusters);
  const Dataset& d = *fit.data;
  const index_t k = d.n_regressors();

  fit.xtx = d.X.transpose() * d.X;
  Eigen::LLT<Eigen::MatrixXd> llt(fit.xtx);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-12) detail::throw_rank_error(d);
  fit.xtx_inv = llt.solve(Eigen::MatrixXd::Identity(k, k));
  fit.beta = llt.solve(d.X.transpose() * d.y);
  fit.residuals = d.y - d.X * fit.beta;

  fit.per_cluster.resize(static_cast<std::size_t>(fit.g_count()));
  for (index_t g = 0; g < fit.g_count(); ++g) {
    const auto& rows = fit.clusters->members[static_cast<std::size_t>(g)];
    ClusterBlocks& blocks = fit.per_cluster[static_cast<std::size_t>(g)];
    blocks.xtx = Eigen::MatrixXd::Zero(k, k);
    blocks.xty = Eigen::VectorXd::Zero(k);
    for (const index_t i : rows) {
      blocks.xtx.noalias() += d.X.row(i).transpose() * d.X.row(i);
      blocks.xty.noalias() += d.X.row(i).transpose() * d.y(i);
    }
    blocks.score = blocks.xty - blocks.xtx * fit.beta;
  }
  return fit;
}

inline RegressionFit fit_ols(const Dataset& data, const ClusterPartition& clusters) {
  return fit_ols(std::make_shared<const Dataset>(data),
                 std::make_shared<const ClusterPartition>(clusters));
}

// Attaches the restricted estimator to an existing fit.  The Lagrangian solve
//   beta_tilde = beta_hat - (X'X)^{-1} R' [R (X'X)^{-1} R']^{-1} (R beta_hat - r)
// works for arbitrary full-rank R, and the restricted scores come from the
// cached cluster blocks, so no pass over the raw data is needed.
inline RegressionFit add_restriction(RegressionFit fit, const Restriction& rest) {
  rest.validate(fit.n_regressors());

  const Eigen::MatrixXd rvr = rest.R * fit.xtx_inv * rest.R.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(rvr);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-12)
    throw numeric_error("restriction solve failed: R (X'X)^{-1} R' is singular");

  RestrictedFit rf;
  rf.restriction = rest;
  const Eigen::VectorXd gap = rest.R * fit.beta - rest.r;
  rf.beta = fit.beta - fit.xtx_inv * rest.R.transpose() * llt.solve(gap);
  rf.residuals = fit.data->y - fit.data->X * rf.beta;
  rf.scores.resize(fit.g_count(), fit.n_regressors());
  for (index_t g = 0; g < fit.g_count(); ++g) {
    const auto& blocks = fit.per_cluster[static_cast<std::size_t>(g)];
    rf.scores.row(g) = (blocks.xty - blocks.xtx * rf.beta).transpose();
  }
  fit.restricted = std::move(rf);
  return fit;
}

inline RegressionFit fit_restricted(const Dataset& data, const ClusterPartition& clusters,
                                    const Restriction& rest) {
  return add_restriction(fit_ols(data, clusters), rest);
}

}  // namespace cri
