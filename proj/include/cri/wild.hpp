#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cri/crve.hpp"
#include "cri/ols.hpp"
#include "cri/parallel.hpp"
#include "cri/rng.hpp"

namespace cri {

enum class AuxKind { Rademacher, Webb6 };

inline const char* to_string(AuxKind kind) {
  return kind == AuxKind::Rademacher ? "rademacher" : "webb6";
}

// Auxiliary bootstrap weight distributions, mean 0 and variance 1.  The
// support is ordered so that entry 0 is +1 and sign-flipped values sit in
// adjacent pairs; enumeration index 0 is then the all-ones draw and the
// enumerated replicate set is closed under sign flips.
struct AuxDistribution {
  AuxKind kind;
  std::vector<double> support;

  static const AuxDistribution& get(AuxKind kind) {
    static const AuxDistribution rademacher{AuxKind::Rademacher, {1.0, -1.0}};
    static const AuxDistribution webb{AuxKind::Webb6,
                                      {1.0, -1.0, 0.7071067811865475244, -0.7071067811865475244,
                                       1.2247448713915890491, -1.2247448713915890491}};
    return kind == AuxKind::Rademacher ? rademacher : webb;
  }

  double draw(Rng& rng) const { return support[rng.below(support.size())]; }
};

// Rademacher works well unless G is small enough that 2^G bootstrap samples
// are too few; then Webb's six-point distribution is preferable.
inline std::pair<AuxKind, std::optional<std::string>> choose_aux(index_t g_count) {
  if (g_count <= 12)
    return {AuxKind::Webb6,
            "only " + std::to_string(g_count) +
                " clusters: using the Webb six-point distribution instead of Rademacher"};
  return {AuxKind::Rademacher, std::nullopt};
}

enum class Studentization { CV1, CV3 };

inline const char* to_string(Studentization s) {
  return s == Studentization::CV1 ? "CV1" : "CV3";
}

enum class BootVariant { WCR, WCU, WR, WU, Pairs };

inline const char* to_string(BootVariant v) {
  switch (v) {
    case BootVariant::WCR: return "WCR";
    case BootVariant::WCU: return "WCU";
    case BootVariant::WR: return "WR";
    case BootVariant::WU: return "WU";
    case BootVariant::Pairs: return "pairs";
  }
  return "?";
}

enum class PKind { Symmetric, EqualTail, Upper };

// Bootstrap P values from stored replicates.  Exact ties count as exceedances
// in the upper-tail indicator, so an enumerated symmetric P value (which
// always contains the all-ones tie under WCR) is never exactly zero.  The
// equal-tail P value is capped at 1.
inline double boot_p_value(double tau, const std::vector<double>& replicates, PKind kind) {
  if (replicates.empty()) throw validation_error("bootstrap P value needs at least one replicate");
  const double b = static_cast<double>(replicates.size());
  switch (kind) {
    case PKind::Upper: {
      std::size_t count = 0;
      for (const double t : replicates) count += (t >= tau);
      return static_cast<double>(count) / b;
    }
    case PKind::Symmetric: {
      std::size_t count = 0;
      const double at = std::fabs(tau);
      for (const double t : replicates) count += (std::fabs(t) >= at);
      return static_cast<double>(count) / b;
    }
    case PKind::EqualTail: {
      std::size_t above = 0, below = 0;
      for (const double t : replicates) {
        above += (t > tau);
        below += (t <= tau);
      }
      return std::min(1.0, 2.0 / b * static_cast<double>(std::min(above, below)));
    }
  }
  return 1.0;
}

struct BootstrapResult {
  double tau = 0.0;                     // observed studentized statistic
  double coef_observed = 0.0;           // a' beta_hat
  std::vector<double> replicates;       // tau*_b
  std::vector<double> coef_replicates;  // a' beta*_b
  double p_symmetric = 1.0;
  double p_equal_tail = 1.0;
  index_t b = 0;
  bool enumerated = false;
  std::uint64_t seed = 0;
  BootVariant variant = BootVariant::WCR;
  Studentization studentization = Studentization::CV1;
  AuxKind aux = AuxKind::Rademacher;
  index_t discarded = 0;  // pairs bootstrap: singular replicates
  std::vector<std::string> warnings;
};

struct WildOptions {
  AuxKind aux = AuxKind::Rademacher;
  index_t b = 9999;
  std::uint64_t seed = 1;
  Studentization studentization = Studentization::CV1;
  bool count_absorbed_in_k = true;
  unsigned threads = 1;
};

namespace detail {

inline double safe_studentize(double num, double var) {
  if (var > 0.0 && std::isfinite(var)) return num / std::sqrt(var);
  if (num > 0.0) return std::numeric_limits<double>::infinity();
  if (num < 0.0) return -std::numeric_limits<double>::infinity();
  return 0.0;
}

// support^count with saturation, for the enumeration trigger.
inline std::uint64_t pow_saturating(std::uint64_t base, index_t count) {
  std::uint64_t out = 1;
  for (index_t i = 0; i < count; ++i) {
    if (out > std::numeric_limits<std::uint64_t>::max() / base)
      return std::numeric_limits<std::uint64_t>::max();
    out *= base;
  }
  return out;
}

// Everything the per-replicate statistic needs, cached once.  The raw data
// never enters the replicate loop: a cluster-level replicate costs O(G k)
// and an observation-level one O(N k).
//
// With draw vector v, bootstrap coefficient gap m = scores' v and
//   numerator          = w' m = num_weights . v,
//   CV1 score residual = v_g q_g - t_g' (X'X)^{-1} m        (cluster g),
//   CV3 deviation      = alpha_g' (m - m_g) - w' m          (cluster g),
// where m_g is cluster g's own contribution to m.
struct WildKernel {
  Eigen::VectorXd num_weights;  // per draw unit: w' score row
  Eigen::MatrixXd scores;       // draw-level score rows (G x k or N x k)
  Eigen::MatrixXd t_rows;       // G x k, row g = (XtX_g w)'
  Eigen::MatrixXd xtx_inv;
  Eigen::VectorXd w;            // (X'X)^{-1} a
  Eigen::MatrixXd alpha;        // G x k, row g = (X'X - XtX_g)^{-1} a  (CV3)
  Eigen::VectorXd phi;          // G: alpha_g . s_g (cluster-level CV3)
  double c1 = 1.0;              // CV1 small-sample factor
  double c3 = 1.0;              // (G-1)/G
  bool cv3 = false;
  bool obs_level = false;
  const ClusterPartition* clusters = nullptr;

  double variance(const Eigen::VectorXd& v) const {
    const Eigen::VectorXd m = scores.transpose() * v;
    if (!obs_level) {
      if (!cv3) {
        const Eigen::VectorXd delta = xtx_inv * m;
        return c1 * (v.cwiseProduct(num_weights) - t_rows * delta).squaredNorm();
      }
      const Eigen::VectorXd am = alpha * m;
      const double wm = w.dot(m);
      double ss = 0.0;
      for (index_t g = 0; g < alpha.rows(); ++g) {
        const double tt = am(g) - v(g) * phi(g) - wm;
        ss += tt * tt;
      }
      return c3 * ss;
    }
    const index_t g_count = clusters->g_count();
    if (!cv3) {
      const Eigen::VectorXd delta = xtx_inv * m;
      double ss = 0.0;
      for (index_t g = 0; g < g_count; ++g) {
        double cluster_num = 0.0;
        for (const index_t i : clusters->members[static_cast<std::size_t>(g)])
          cluster_num += v(i) * num_weights(i);
        const double term = cluster_num - t_rows.row(g).dot(delta);
        ss += term * term;
      }
      return c1 * ss;
    }
    const double wm = w.dot(m);
    double ss = 0.0;
    Eigen::VectorXd mg(m.size());
    for (index_t g = 0; g < g_count; ++g) {
      mg.setZero();
      for (const index_t i : clusters->members[static_cast<std::size_t>(g)])
        mg.noalias() += scores.row(i).transpose() * v(i);
      const double tt = alpha.row(g).dot(m - mg) - wm;
      ss += tt * tt;
    }
    return c3 * ss;
  }

  double statistic(const Eigen::VectorXd& v) const {
    return safe_studentize(num_weights.dot(v), variance(v));
  }
};

inline WildKernel make_kernel(const RegressionFit& fit, const Eigen::VectorXd& a,
                              Eigen::MatrixXd score_rows, bool obs_level,
                              const WildOptions& opts) {
  WildKernel kernel;
  const index_t g_count = fit.g_count();
  const double n = static_cast<double>(fit.n_obs());
  const double g = static_cast<double>(g_count);
  const double k_dof = static_cast<double>(fit.dof_k(opts.count_absorbed_in_k));

  kernel.obs_level = obs_level;
  kernel.clusters = fit.clusters.get();
  kernel.xtx_inv = fit.xtx_inv;
  kernel.w = fit.xtx_inv * a;
  kernel.c1 = g * (n - 1.0) / ((g - 1.0) * (n - k_dof));
  kernel.c3 = (g - 1.0) / g;
  kernel.cv3 = opts.studentization == Studentization::CV3;

  kernel.t_rows.resize(g_count, fit.n_regressors());
  for (index_t gg = 0; gg < g_count; ++gg)
    kernel.t_rows.row(gg) =
        (fit.per_cluster[static_cast<std::size_t>(gg)].xtx * kernel.w).transpose();

  if (kernel.cv3) {
    kernel.alpha.resize(g_count, fit.n_regressors());
    for (index_t gg = 0; gg < g_count; ++gg) {
      Eigen::LLT<Eigen::MatrixXd> llt(fit.xtx - fit.per_cluster[static_cast<std::size_t>(gg)].xtx);
      if (llt.info() != Eigen::Success || llt.rcond() < 1e-12)
        throw numeric_error(
            "CV3 studentization: deleting cluster '" +
            fit.clusters->labels[static_cast<std::size_t>(gg)] + "' leaves a singular regression");
      kernel.alpha.row(gg) = llt.solve(a).transpose();
    }
  }

  kernel.scores = std::move(score_rows);
  kernel.num_weights = kernel.scores * kernel.w;
  if (kernel.cv3 && !obs_level) {
    kernel.phi.resize(g_count);
    for (index_t gg = 0; gg < g_count; ++gg)
      kernel.phi(gg) = kernel.alpha.row(gg).dot(kernel.scores.row(gg));
  }
  return kernel;
}

// Score rows for the ordinary wild bootstrap: one row x_i' u_i per observation.
inline Eigen::MatrixXd obs_score_rows(const RegressionFit& fit, const Eigen::VectorXd& residuals) {
  const index_t n = fit.n_obs();
  Eigen::MatrixXd rows(n, fit.n_regressors());
  for (index_t i = 0; i < n; ++i) rows.row(i) = fit.data->X.row(i) * residuals(i);
  return rows;
}

inline void run_wild(BootstrapResult& result, const WildKernel& kernel, index_t draw_count,
                     const WildOptions& opts, double coef_base) {
  if (opts.b < 1) throw validation_error("bootstrap needs B >= 1");
  const auto& aux = AuxDistribution::get(opts.aux);
  const std::uint64_t total =
      pow_saturating(static_cast<std::uint64_t>(aux.support.size()), draw_count);

  result.enumerated = total <= static_cast<std::uint64_t>(opts.b);
  result.b = result.enumerated ? static_cast<index_t>(total) : opts.b;
  result.replicates.resize(static_cast<std::size_t>(result.b));
  result.coef_replicates.resize(static_cast<std::size_t>(result.b));

  const std::size_t support_size = aux.support.size();
  parallel_for(static_cast<std::size_t>(result.b), opts.threads, [&](std::size_t rep) {
    Eigen::VectorXd v(draw_count);
    if (result.enumerated) {
      std::uint64_t digits = rep;
      for (index_t i = 0; i < draw_count; ++i) {
        v(i) = aux.support[digits % support_size];
        digits /= support_size;
      }
    } else {
      Rng rng(opts.seed, rep);
      for (index_t i = 0; i < draw_count; ++i) v(i) = aux.draw(rng);
    }
    result.replicates[rep] = kernel.statistic(v);
    result.coef_replicates[rep] = coef_base + kernel.num_weights.dot(v);
  });

  result.p_symmetric = boot_p_value(result.tau, result.replicates, PKind::Symmetric);
  result.p_equal_tail = boot_p_value(result.tau, result.replicates, PKind::EqualTail);
}

inline void check_b_advisory(index_t b, std::vector<std::string>& warnings) {
  const double target = 0.05 * (static_cast<double>(b) + 1.0);
  if (std::fabs(target - std::round(target)) > 1e-9)
    warnings.push_back("0.05 (B+1) is not an integer with B = " + std::to_string(b) +
                       "; B of 999, 9999, or 99999 gives cleaner rejection rules");
}

inline const RestrictedFit& require_restricted(const RegressionFit& fit) {
  if (!fit.restricted)
    throw validation_error("restricted wild bootstrap needs a fit with a restricted part");
  if (fit.restricted->restriction.n_restrictions() != 1)
    throw validation_error("the wild bootstrap tests a single linear combination; r must be 1");
  return *fit.restricted;
}

inline BootstrapResult init_result(BootVariant variant, const WildOptions& opts) {
  BootstrapResult result;
  result.variant = variant;
  result.studentization = opts.studentization;
  result.aux = opts.aux;
  result.seed = opts.seed;
  check_b_advisory(opts.b, result.warnings);
  return result;
}

}  // namespace detail

// Restricted wild cluster bootstrap (WCR).  Bootstrap scores are weighted
// restricted scores, v_g s_tilde_g.  The observed statistic is evaluated
// through the identical kernel at v = all ones, so the all-ones enumeration
// draw reproduces it bit for bit.
inline BootstrapResult wcr_test(const RegressionFit& fit, const WildOptions& opts) {
  const RestrictedFit& rf = detail::require_restricted(fit);
  const Eigen::VectorXd a = rf.restriction.R.row(0).transpose();
  const auto kernel = detail::make_kernel(fit, a, rf.scores, false, opts);

  BootstrapResult result = detail::init_result(BootVariant::WCR, opts);
  result.coef_observed = a.dot(fit.beta);
  result.tau = kernel.statistic(Eigen::VectorXd::Ones(fit.g_count()));
  detail::run_wild(result, kernel, fit.g_count(), opts, a.dot(rf.beta));
  return result;
}

// Unrestricted wild cluster bootstrap (WCU): weighted unrestricted scores,
// replicate statistics recentered at beta_hat.
inline BootstrapResult wcu_test(const RegressionFit& fit, const Eigen::VectorXd& a, double beta0,
                                const WildOptions& opts) {
  if (a.size() != fit.n_regressors())
    throw validation_error("wcu_test: direction has wrong length");
  const auto kernel = detail::make_kernel(fit, a, fit.score_matrix(), false, opts);

  BootstrapResult result = detail::init_result(BootVariant::WCU, opts);
  result.coef_observed = a.dot(fit.beta);
  result.tau = detail::safe_studentize(a.dot(fit.beta) - beta0,
                                       kernel.variance(Eigen::VectorXd::Ones(fit.g_count())));
  detail::run_wild(result, kernel, fit.g_count(), opts, a.dot(fit.beta));
  return result;
}

// Ordinary wild bootstrap, restricted (WR): one draw per observation,
// statistics still studentized with the cluster CRVE.
inline BootstrapResult wr_test(const RegressionFit& fit, const WildOptions& opts) {
  const RestrictedFit& rf = detail::require_restricted(fit);
  const Eigen::VectorXd a = rf.restriction.R.row(0).transpose();
  const auto kernel =
      detail::make_kernel(fit, a, detail::obs_score_rows(fit, rf.residuals), true, opts);

  BootstrapResult result = detail::init_result(BootVariant::WR, opts);
  result.coef_observed = a.dot(fit.beta);
  result.tau = kernel.statistic(Eigen::VectorXd::Ones(fit.n_obs()));
  detail::run_wild(result, kernel, fit.n_obs(), opts, a.dot(rf.beta));
  return result;
}

// Ordinary wild bootstrap, unrestricted (WU).
inline BootstrapResult wu_test(const RegressionFit& fit, const Eigen::VectorXd& a, double beta0,
                               const WildOptions& opts) {
  if (a.size() != fit.n_regressors())
    throw validation_error("wu_test: direction has wrong length");
  const auto kernel =
      detail::make_kernel(fit, a, detail::obs_score_rows(fit, fit.residuals), true, opts);

  BootstrapResult result = detail::init_result(BootVariant::WU, opts);
  result.coef_observed = a.dot(fit.beta);
  result.tau = detail::safe_studentize(a.dot(fit.beta) - beta0,
                                       kernel.variance(Eigen::VectorXd::Ones(fit.n_obs())));
  detail::run_wild(result, kernel, fit.n_obs(), opts, a.dot(fit.beta));
  return result;
}

}  // namespace cri
