#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cri/distributions.hpp"
#include "cri/wild.hpp"

namespace cri {

enum class CiMethod { Inversion, BootstrapSe, PercentileT };

inline const char* to_string(CiMethod m) {
  switch (m) {
    case CiMethod::Inversion: return "inversion";
    case CiMethod::BootstrapSe: return "bootstrap-se";
    case CiMethod::PercentileT: return "percentile-t";
  }
  return "?";
}

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  CiMethod method = CiMethod::Inversion;
  index_t iterations = 0;  // inversion only
};

// beta_hat +/- t_{1-alpha/2}(dof) times the standard deviation of the
// bootstrap coefficient estimates (an unrestricted-bootstrap interval).
inline ConfidenceInterval ci_bootstrap_se(const BootstrapResult& boot, double dof, double alpha) {
  const auto& coefs = boot.coef_replicates;
  if (coefs.size() < 2) throw validation_error("bootstrap-se interval needs B >= 2");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw validation_error("alpha must lie in (0, 1]");
  double mean = 0.0;
  for (const double c : coefs) mean += c;
  mean /= static_cast<double>(coefs.size());
  double ss = 0.0;
  for (const double c : coefs) ss += (c - mean) * (c - mean);
  const double sd = std::sqrt(ss / static_cast<double>(coefs.size() - 1));
  const double q = alpha == 1.0 ? 0.0 : student_t_quantile(1.0 - 0.5 * alpha, dof);

  ConfidenceInterval ci;
  ci.method = CiMethod::BootstrapSe;
  ci.level = 1.0 - alpha;
  ci.lower = boot.coef_observed - q * sd;
  ci.upper = boot.coef_observed + q * sd;
  return ci;
}

// Studentized (percentile-t) interval: [beta - s c*_{1-a/2}, beta - s c*_{a/2}]
// with c*_z the z quantile of the sorted bootstrap t statistics, order
// statistic number z (B+1) (floored and clamped when not an integer).
inline ConfidenceInterval ci_percentile_t(const BootstrapResult& boot, double std_error,
                                          double alpha) {
  if (boot.replicates.empty()) throw validation_error("percentile-t interval needs replicates");
  if (!(alpha > 0.0 && alpha < 1.0)) throw validation_error("alpha must lie in (0, 1)");
  std::vector<double> sorted = boot.replicates;
  std::sort(sorted.begin(), sorted.end());
  const double b1 = static_cast<double>(sorted.size()) + 1.0;
  const auto order_stat = [&](double z) {
    auto idx = static_cast<std::ptrdiff_t>(std::floor(z * b1));
    idx = std::clamp<std::ptrdiff_t>(idx, 1, static_cast<std::ptrdiff_t>(sorted.size()));
    return sorted[static_cast<std::size_t>(idx - 1)];
  };
  ConfidenceInterval ci;
  ci.method = CiMethod::PercentileT;
  ci.level = 1.0 - alpha;
  ci.lower = boot.coef_observed - std_error * order_stat(1.0 - 0.5 * alpha);
  ci.upper = boot.coef_observed - std_error * order_stat(0.5 * alpha);
  return ci;
}

struct InversionOptions {
  WildOptions wild;
  double alpha = 0.05;
  index_t max_expansions = 60;
};

namespace detail {

// Equal-tail WCR P value with the null beta_j = value imposed on the
// bootstrap DGP.  The v draws are regenerated from the same seed for every
// candidate, which keeps the objective a fixed step function of the value.
inline double inversion_p(const RegressionFit& fit, index_t j, double value,
                          const WildOptions& wild) {
  const auto restricted =
      add_restriction(fit, Restriction::coefficient(j, fit.n_regressors(), value));
  return wcr_test(restricted, wild).p_equal_tail;
}

}  // namespace detail

// Confidence interval by test inversion: the endpoints solve
// P*_et(t(beta_j = c)) = alpha.  Bisection against a step function; the
// returned endpoint sits on the inner (P >= alpha) side of the alpha
// crossing.  Brackets start from the Wald interval +/- 3 CV1 standard errors.
inline ConfidenceInterval ci_inversion(const RegressionFit& fit, index_t j,
                                       const InversionOptions& opts) {
  if (j < 0 || j >= fit.n_regressors())
    throw validation_error("ci_inversion: coefficient index out of range");
  const double alpha = opts.alpha;
  if (!(alpha > 0.0 && alpha < 1.0)) throw validation_error("alpha must lie in (0, 1)");

  const auto cov = cv1(fit);
  const double se = cov.se(j);
  if (!(se > 0.0) || !std::isfinite(se))
    throw numeric_error("ci_inversion: the coefficient has no usable variance");
  const double center = fit.beta(j);

  ConfidenceInterval ci;
  ci.method = CiMethod::Inversion;
  ci.level = 1.0 - alpha;

  const auto p_at = [&](double value) {
    ++ci.iterations;
    return detail::inversion_p(fit, j, value, opts.wild);
  };

  // one endpoint per direction: -1 lower, +1 upper
  const auto solve_endpoint = [&](double direction) {
    double inner = center;  // P >= alpha here
    double p_inner = 1.0;
    double outer = center + direction * 3.0 * se;
    index_t expansions = 0;
    for (double p = p_at(outer); p >= alpha; p = p_at(outer)) {
      inner = outer;
      p_inner = p;
      outer = center + 2.0 * (outer - center);
      if (++expansions > opts.max_expansions)
        throw numeric_error("ci_inversion: interval endpoint not found after bracket expansion");
    }
    // bisect: inner has P >= alpha, outer has P < alpha; keep going past the
    // width target until the inner P value sits on the step adjacent to the
    // alpha crossing
    const double b = static_cast<double>(opts.wild.b);
    index_t extra = 0;
    while (std::fabs(outer - inner) > 1e-6 * se ||
           (std::fabs(p_inner - alpha) > 1.0 / b && extra < 40)) {
      if (std::fabs(outer - inner) <= 1e-6 * se) ++extra;
      const double mid = 0.5 * (inner + outer);
      const double p = p_at(mid);
      if (p >= alpha) {
        inner = mid;
        p_inner = p;
      } else {
        outer = mid;
      }
    }
    return inner;
  };

  ci.lower = solve_endpoint(-1.0);
  ci.upper = solve_endpoint(+1.0);
  return ci;
}

}  // namespace cri
