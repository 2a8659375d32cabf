#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cri/distributions.hpp"
#include "cri/ols.hpp"

namespace cri {

enum class CovKind { HC1, CV1, CV2, CV3, TwoWayCV1 };

enum class RefDist { Normal, StudentT };

inline const char* to_string(CovKind kind) {
  switch (kind) {
    case CovKind::HC1: return "HC1";
    case CovKind::CV1: return "CV1";
    case CovKind::CV2: return "CV2";
    case CovKind::CV3: return "CV3";
    case CovKind::TwoWayCV1: return "TwoWayCV1";
  }
  return "?";
}

// A k x k sandwich estimate tagged with its estimator kind and the reference
// distribution its test statistics should use.
struct CovEstimate {
  Eigen::MatrixXd matrix;
  CovKind kind = CovKind::CV1;
  double dof = 0.0;  // reference degrees of freedom (G-1 one-way, min(G,H)-1 two-way)
  RefDist ref = RefDist::StudentT;
  bool psd = true;

  double se(index_t j) const { return std::sqrt(matrix(j, j)); }
};

struct CrveOptions {
  // Count absorbed fixed effects in k for the CV1/HC1 small-sample factor.
  bool count_absorbed_in_k = true;
};

namespace detail {

inline CovEstimate sandwich(const RegressionFit& fit, const Eigen::MatrixXd& meat,
                            double factor, CovKind kind, double dof, RefDist ref) {
  CovEstimate cov;
  cov.matrix = factor * fit.xtx_inv * meat * fit.xtx_inv;
  cov.matrix = 0.5 * (cov.matrix + cov.matrix.transpose()).eval();
  cov.kind = kind;
  cov.dof = dof;
  cov.ref = ref;
  return cov;
}

}  // namespace detail

// CV1: empirical-score sandwich with the G(N-1)/((G-1)(N-k)) correction.
inline CovEstimate cv1(const RegressionFit& fit, const CrveOptions& opts = {}) {
  const index_t g_count = fit.g_count();
  if (g_count < 2) throw validation_error("CV1 requires at least two clusters");
  const index_t k = fit.n_regressors();
  const double n = static_cast<double>(fit.n_obs());
  const double g = static_cast<double>(g_count);
  const double k_dof = static_cast<double>(fit.dof_k(opts.count_absorbed_in_k));

  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
  for (const auto& blocks : fit.per_cluster)
    meat.noalias() += blocks.score * blocks.score.transpose();
  const double factor = g * (n - 1.0) / ((g - 1.0) * (n - k_dof));
  return detail::sandwich(fit, meat, factor, CovKind::CV1, g - 1.0, RefDist::StudentT);
}

// HC1, the singleton-cluster limit of CV1; reference distribution N(0,1).
inline CovEstimate hc1(const RegressionFit& fit, const CrveOptions& opts = {}) {
  const index_t k = fit.n_regressors();
  const double n = static_cast<double>(fit.n_obs());
  const double k_dof = static_cast<double>(fit.dof_k(opts.count_absorbed_in_k));
  const Eigen::MatrixXd& x = fit.data->X;

  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
  for (index_t i = 0; i < fit.n_obs(); ++i) {
    const double u2 = fit.residuals(i) * fit.residuals(i);
    meat.noalias() += u2 * x.row(i).transpose() * x.row(i);
  }
  return detail::sandwich(fit, meat, n / (n - k_dof), CovKind::HC1, n - k_dof, RefDist::Normal);
}

// CV2: scores adjusted by the inverse symmetric square root of M_gg.
// Dense in the cluster size, so meant for moderate N_g; fails with a pointer
// to fixed-effect absorption when some M_gg is singular.
inline CovEstimate cv2(const RegressionFit& fit) {
  const index_t g_count = fit.g_count();
  if (g_count < 2) throw validation_error("CV2 requires at least two clusters");
  const index_t k = fit.n_regressors();
  const Eigen::MatrixXd& x = fit.data->X;

  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
  for (index_t g = 0; g < g_count; ++g) {
    const auto& rows = fit.clusters->members[static_cast<std::size_t>(g)];
    const index_t ng = static_cast<index_t>(rows.size());
    Eigen::MatrixXd xg(ng, k);
    Eigen::VectorXd ug(ng);
    for (index_t ii = 0; ii < ng; ++ii) {
      xg.row(ii) = x.row(rows[static_cast<std::size_t>(ii)]);
      ug(ii) = fit.residuals(rows[static_cast<std::size_t>(ii)]);
    }
    Eigen::MatrixXd mgg = Eigen::MatrixXd::Identity(ng, ng) - xg * fit.xtx_inv * xg.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mgg);
    if (eig.info() != Eigen::Success)
      throw numeric_error("CV2: eigendecomposition of M_gg failed");
    if (eig.eigenvalues().minCoeff() < 1e-10) {
      std::ostringstream msg;
      msg << "CV2: M_gg is singular for cluster '"
          << fit.clusters->labels[static_cast<std::size_t>(g)]
          << "'; absorb the offending fixed effects before estimation";
      throw numeric_error(msg.str());
    }
    const Eigen::VectorXd adj =
        eig.eigenvectors() *
        eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
        (eig.eigenvectors().transpose() * ug);
    const Eigen::VectorXd score = xg.transpose() * adj;
    meat.noalias() += score * score.transpose();
  }
  const double g = static_cast<double>(g_count);
  return detail::sandwich(fit, meat, 1.0, CovKind::CV2, g - 1.0, RefDist::StudentT);
}

struct Cv3Result {
  CovEstimate cov;
  Eigen::MatrixXd deleted;  // G x k, row g = beta_hat with cluster g deleted
};

// CV3 in its jackknife form: beta^{(g)} from the cached cluster blocks,
// then (G-1)/G times the sum of outer products of deviations from beta_hat.
inline Cv3Result cv3_jackknife(const RegressionFit& fit) {
  const index_t g_count = fit.g_count();
  if (g_count < 2) throw validation_error("CV3 requires at least two clusters");
  const index_t k = fit.n_regressors();

  Eigen::VectorXd xty = Eigen::VectorXd::Zero(k);
  for (const auto& blocks : fit.per_cluster) xty += blocks.xty;

  Cv3Result out;
  out.deleted.resize(g_count, k);
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
  for (index_t g = 0; g < g_count; ++g) {
    const auto& blocks = fit.per_cluster[static_cast<std::size_t>(g)];
    Eigen::LLT<Eigen::MatrixXd> llt(fit.xtx - blocks.xtx);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-12) {
      std::ostringstream msg;
      msg << "CV3: deleting cluster '" << fit.clusters->labels[static_cast<std::size_t>(g)]
          << "' leaves a singular regression; the estimates should not be trusted";
      throw numeric_error(msg.str());
    }
    const Eigen::VectorXd beta_g = llt.solve(xty - blocks.xty);
    out.deleted.row(g) = beta_g.transpose();
    const Eigen::VectorXd dev = beta_g - fit.beta;
    meat.noalias() += dev * dev.transpose();
  }
  const double g = static_cast<double>(g_count);
  CovEstimate cov;
  cov.matrix = ((g - 1.0) / g) * meat;
  cov.matrix = 0.5 * (cov.matrix + cov.matrix.transpose()).eval();
  cov.kind = CovKind::CV3;
  cov.dof = g - 1.0;
  cov.ref = RefDist::StudentT;
  out.cov = std::move(cov);
  return out;
}

inline CovEstimate cv3(const RegressionFit& fit) { return cv3_jackknife(fit).cov; }

struct TwoWayOptions {
  // Per-term small-sample factors G/(G-1), H/(H-1), I/(I-1); the paper leaves
  // the choice open, so they can be switched off.
  bool per_term_factors = true;
  // Drop the subtracted intersection term (asymptotically valid variant that
  // guarantees positive semidefiniteness).
  bool omit_intersection = false;
};

// Two-way CV1: meat = sum over dimension A + sum over dimension B - sum over
// the intersection cells.  A non-PSD result is flagged, never repaired.
inline CovEstimate twoway_cv1(const RegressionFit& fit_a, const RegressionFit& fit_b,
                              const RegressionFit& fit_ab, const TwoWayOptions& opts = {}) {
  if (fit_a.data != fit_b.data || fit_a.data != fit_ab.data)
    throw validation_error("twoway_cv1: the three fits must share one dataset");
  const index_t k = fit_a.n_regressors();

  const auto meat_of = [k](const RegressionFit& fit) {
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
    for (const auto& blocks : fit.per_cluster)
      meat.noalias() += blocks.score * blocks.score.transpose();
    return meat;
  };
  const auto factor_of = [&opts](index_t g) {
    return opts.per_term_factors ? static_cast<double>(g) / static_cast<double>(g - 1) : 1.0;
  };

  const index_t ga = fit_a.g_count();
  const index_t gb = fit_b.g_count();
  Eigen::MatrixXd meat = factor_of(ga) * meat_of(fit_a) + factor_of(gb) * meat_of(fit_b);
  if (!opts.omit_intersection) {
    const index_t gi = fit_ab.g_count();
    meat.noalias() -= (gi > 1 ? factor_of(gi) : 1.0) * meat_of(fit_ab);
  }

  CovEstimate cov = detail::sandwich(fit_a, meat, 1.0, CovKind::TwoWayCV1,
                                     static_cast<double>(std::min(ga, gb) - 1), RefDist::StudentT);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov.matrix);
  cov.psd = eig.info() == Eigen::Success &&
            eig.eigenvalues().minCoeff() >= -1e-10 * std::max(1e-300, cov.matrix.trace());
  return cov;
}

enum class TestKind { T, Wald };

struct TestResult {
  double statistic = 0.0;
  TestKind kind = TestKind::T;
  double dof1 = 0.0;  // restrictions r (Wald); unused for t
  double dof2 = 0.0;  // reference dof: G-1 for t, G-r for the F form
  double p_value = 1.0;
  double estimate = std::numeric_limits<double>::quiet_NaN();
  double std_error = std::numeric_limits<double>::quiet_NaN();
};

// t statistic for a' beta = beta0 with a two-sided P value from the
// covariance estimate's reference distribution.
inline TestResult t_test(const RegressionFit& fit, const CovEstimate& cov,
                         const Eigen::VectorXd& a, double beta0) {
  if (a.size() != fit.n_regressors()) throw validation_error("t_test: direction has wrong length");
  const double var = a.dot(cov.matrix * a);
  if (!(var > 0.0)) throw numeric_error("t_test: estimated variance of the combination is zero");
  TestResult out;
  out.kind = TestKind::T;
  out.estimate = a.dot(fit.beta);
  out.std_error = std::sqrt(var);
  out.statistic = (out.estimate - beta0) / out.std_error;
  out.dof2 = cov.dof;
  out.p_value = cov.ref == RefDist::Normal
                    ? std::erfc(std::fabs(out.statistic) * 0.7071067811865475244)
                    : student_t_two_sided(out.statistic, cov.dof);
  return out;
}

inline TestResult t_test(const RegressionFit& fit, const CovEstimate& cov, index_t j,
                         double beta0) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(fit.n_regressors());
  a(j) = 1.0;
  return t_test(fit, cov, a, beta0);
}

// Wald statistic for R beta = r.  The P value applies the F(r, G-r) form:
// W (G-r) / (r (G-1)) is referred to F(r, G-r).
inline TestResult wald_test(const RegressionFit& fit, const CovEstimate& cov,
                            const Restriction& rest) {
  rest.validate(fit.n_regressors());
  const double r = static_cast<double>(rest.n_restrictions());
  const double g = cov.dof + 1.0;
  if (r > cov.dof)
    throw validation_error("wald_test: a cluster-robust variance matrix has rank at most G-1; "
                           "cannot test more restrictions than that");

  const Eigen::MatrixXd rvr = rest.R * cov.matrix * rest.R.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(rvr);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-12)
    throw numeric_error("wald_test: R V R' is singular");
  const Eigen::VectorXd gap = rest.R * fit.beta - rest.r;

  TestResult out;
  out.kind = TestKind::Wald;
  out.statistic = gap.dot(llt.solve(gap));
  out.dof1 = r;
  out.dof2 = g - r;
  const double adjusted = out.statistic * (g - r) / (r * (g - 1.0));
  out.p_value = 1.0 - f_cdf(adjusted, r, g - r);
  return out;
}

}  // namespace cri
