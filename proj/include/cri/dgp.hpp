#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "cri/dataset.hpp"
#include "cri/partition.hpp"
#include "cri/rng.hpp"

namespace cri {

enum class DgpKind { Iid, RandomEffects, Factor };
enum class SizePattern { Equal, Lognormal, OneDominant };
enum class PlaceboKind { ClusterDummy, ClusterNormal };

// Disturbance and design generator for the Monte Carlo harness.
//
// Disturbances: u_gi = lambda_gi eps_g + eps_gi with eps_g standard normal
// and eps_gi ~ N(0, omega^2).  The random-effects kind uses a constant
// loading lambda; the factor kind draws loadings uniformly on (0, 2 lambda),
// so cluster fixed effects cannot absorb the dependence.  Shocks can be
// switched to Student-t(5) to probe heavy tails.
struct DGPSpec {
  DgpKind kind = DgpKind::RandomEffects;
  double lambda = 1.0;
  double omega = 1.0;
  bool heavy_tails = false;

  index_t g_count = 50;
  index_t n_total = 1000;
  SizePattern pattern = SizePattern::Equal;
  double lognormal_sigma = 1.0;
  double dominant_share = 0.5;

  PlaceboKind placebo = PlaceboKind::ClusterDummy;
  double dummy_share = 0.5;     // share of clusters assigned the dummy
  index_t extra_covariates = 0;  // iid normal controls

  Eigen::VectorXd beta;  // true coefficients [const, placebo, extras...]; empty = zeros
};

namespace detail {

inline double shock(Rng& rng, bool heavy) {
  // t(5) rescaled to unit variance (var of t(5) is 5/3)
  return heavy ? rng.next_student_t(5) * 0.77459666924148337704 : rng.next_normal();
}

}  // namespace detail

// Cluster sizes for the requested pattern; deterministic given the stream.
inline std::vector<index_t> make_cluster_sizes(const DGPSpec& spec, Rng& rng) {
  if (spec.g_count < 1 || spec.n_total < spec.g_count)
    throw validation_error("cluster design needs G >= 1 and N >= G");
  std::vector<index_t> sizes(static_cast<std::size_t>(spec.g_count), 1);
  index_t left = spec.n_total - spec.g_count;
  switch (spec.pattern) {
    case SizePattern::Equal: {
      for (index_t i = 0; i < left; ++i)
        sizes[static_cast<std::size_t>(i % spec.g_count)] += 1;
      break;
    }
    case SizePattern::Lognormal: {
      std::vector<double> weights(static_cast<std::size_t>(spec.g_count));
      double total = 0.0;
      for (auto& w : weights) {
        w = std::exp(spec.lognormal_sigma * rng.next_normal());
        total += w;
      }
      index_t assigned = 0;
      for (std::size_t g = 0; g < weights.size(); ++g) {
        const auto extra = static_cast<index_t>(std::floor(weights[g] / total * static_cast<double>(left)));
        sizes[g] += extra;
        assigned += extra;
      }
      for (index_t i = assigned; i < left; ++i)
        sizes[static_cast<std::size_t>(i % spec.g_count)] += 1;
      break;
    }
    case SizePattern::OneDominant: {
      const auto big = std::min<index_t>(
          spec.n_total - spec.g_count + 1,
          static_cast<index_t>(std::llround(spec.dominant_share * static_cast<double>(spec.n_total))));
      sizes[0] = std::max<index_t>(big, 1);
      left = spec.n_total - sizes[0] - (spec.g_count - 1);
      for (index_t i = 0; i < left; ++i)
        sizes[static_cast<std::size_t>(1 + i % (spec.g_count - 1))] += 1;
      break;
    }
  }
  return sizes;
}

// Factor loadings per observation: constant for the random-effects model,
// uniform on (0, 2 lambda) for the factor model, zero for iid.
inline Eigen::VectorXd gen_loadings(const DGPSpec& spec, index_t n, Rng& rng) {
  Eigen::VectorXd loadings(n);
  switch (spec.kind) {
    case DgpKind::Iid: loadings.setZero(); break;
    case DgpKind::RandomEffects: loadings.setConstant(spec.lambda); break;
    case DgpKind::Factor:
      for (index_t i = 0; i < n; ++i) loadings(i) = 2.0 * spec.lambda * rng.next_double();
      break;
  }
  return loadings;
}

// u_gi = lambda_gi eps_g + eps_gi over the given partition.
inline Eigen::VectorXd gen_disturbances(const DGPSpec& spec, const ClusterPartition& part,
                                        const Eigen::VectorXd& loadings, Rng& rng) {
  Eigen::VectorXd u(part.n_obs());
  for (const auto& rows : part.members) {
    const double eps_g = detail::shock(rng, spec.heavy_tails);
    for (const index_t i : rows)
      u(i) = loadings(i) * eps_g + spec.omega * detail::shock(rng, spec.heavy_tails);
  }
  return u;
}

inline Eigen::VectorXd gen_disturbances(const DGPSpec& spec, const ClusterPartition& part,
                                        std::uint64_t seed) {
  Rng rng(seed, 0x6c6f6164);  // loadings stream
  const Eigen::VectorXd loadings = gen_loadings(spec, part.n_obs(), rng);
  Rng shock_rng(seed, 0x73686f63);
  return gen_disturbances(spec, part, loadings, shock_rng);
}

// Analytic within-cluster covariance of demeaned factor-model disturbances
// for one cluster: (l_i - lbar)(l_j - lbar) + omega^2 (1{i=j} - 1/N_g).
// Nonzero off-diagonals unless the loadings are constant, which is why
// cluster fixed effects do not remove factor dependence.
inline Eigen::MatrixXd demeaned_covariance(const Eigen::VectorXd& loadings, double omega) {
  const index_t n = loadings.size();
  if (n < 1) throw validation_error("demeaned_covariance: empty cluster");
  const double mean = loadings.mean();
  Eigen::MatrixXd cov(n, n);
  for (index_t i = 0; i < n; ++i)
    for (index_t j = 0; j < n; ++j)
      cov(i, j) = (loadings(i) - mean) * (loadings(j) - mean) +
                  omega * omega * ((i == j ? 1.0 : 0.0) - 1.0 / static_cast<double>(n));
  return cov;
}

// Stationary AR(1) panel: one series per cluster over `periods` steps,
// v_{s,0} ~ N(0, 1/(1-rho^2)), v_{s,t} = rho v_{s,t-1} + e_{s,t}.
inline Eigen::MatrixXd gen_ar1_panel(index_t series, index_t periods, double rho, Rng& rng) {
  if (!(rho >= 0.0 && rho < 1.0)) throw validation_error("AR(1) placebo needs rho in [0, 1)");
  Eigen::MatrixXd v(series, periods);
  const double sd0 = 1.0 / std::sqrt(1.0 - rho * rho);
  for (index_t s = 0; s < series; ++s) {
    v(s, 0) = sd0 * rng.next_normal();
    for (index_t t = 1; t < periods; ++t) v(s, t) = rho * v(s, t - 1) + rng.next_normal();
  }
  return v;
}

// x_i = delta v_{s(i), t(i)} + (1 - delta) eps_i: correlated within clusters
// through the AR(1) component, iid when rho = 0 or delta = 0.
inline Eigen::VectorXd gen_ar1_blend(const ClusterPartition& clusters,
                                     const std::vector<index_t>& period_of_obs, index_t periods,
                                     double rho, double delta, Rng& rng) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw validation_error("AR(1) placebo needs delta in [0, 1]");
  const Eigen::MatrixXd v = gen_ar1_panel(clusters.g_count(), periods, rho, rng);
  Eigen::VectorXd x(clusters.n_obs());
  for (index_t i = 0; i < clusters.n_obs(); ++i) {
    const index_t s = clusters.assignment[static_cast<std::size_t>(i)];
    x(i) = delta * v(s, period_of_obs[static_cast<std::size_t>(i)]) +
           (1.0 - delta) * rng.next_normal();
  }
  return x;
}

struct McProblem {
  Dataset data;
  ClusterPartition clusters;
  index_t placebo_column = 1;  // the coefficient under test
};

// One simulated dataset: intercept, a placebo regressor that is invariant
// within clusters, optional iid controls, disturbances from the spec.
inline McProblem make_mc_problem(const DGPSpec& spec, std::uint64_t seed) {
  Rng design_rng(seed, 0x64657369);
  const auto sizes = make_cluster_sizes(spec, design_rng);

  McProblem problem;
  {
    std::vector<std::string> labels;
    for (std::size_t g = 0; g < sizes.size(); ++g)
      for (index_t i = 0; i < sizes[g]; ++i) labels.push_back("g" + std::to_string(g));
    problem.clusters = build_partition(labels);
  }
  const index_t n = problem.clusters.n_obs();
  const index_t k = 2 + spec.extra_covariates;

  problem.data.X.resize(n, k);
  problem.data.X.col(0).setOnes();
  problem.data.names = {"const", "placebo"};
  switch (spec.placebo) {
    case PlaceboKind::ClusterDummy: {
      // the first ceil(share G) clusters in a random order carry the dummy
      std::vector<index_t> order(static_cast<std::size_t>(spec.g_count));
      for (index_t g = 0; g < spec.g_count; ++g) order[static_cast<std::size_t>(g)] = g;
      for (index_t g = spec.g_count - 1; g > 0; --g)
        std::swap(order[static_cast<std::size_t>(g)],
                  order[static_cast<std::size_t>(design_rng.below(static_cast<std::uint64_t>(g + 1)))]);
      const auto treated =
          static_cast<index_t>(std::llround(spec.dummy_share * static_cast<double>(spec.g_count)));
      std::vector<char> is_treated(static_cast<std::size_t>(spec.g_count), 0);
      for (index_t j = 0; j < treated; ++j) is_treated[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])] = 1;
      for (index_t i = 0; i < n; ++i)
        problem.data.X(i, 1) = is_treated[static_cast<std::size_t>(
            problem.clusters.assignment[static_cast<std::size_t>(i)])];
      break;
    }
    case PlaceboKind::ClusterNormal: {
      Eigen::VectorXd level(spec.g_count);
      for (index_t g = 0; g < spec.g_count; ++g) level(g) = design_rng.next_normal();
      for (index_t i = 0; i < n; ++i)
        problem.data.X(i, 1) = level(problem.clusters.assignment[static_cast<std::size_t>(i)]);
      break;
    }
  }
  for (index_t c = 0; c < spec.extra_covariates; ++c) {
    for (index_t i = 0; i < n; ++i) problem.data.X(i, 2 + c) = design_rng.next_normal();
    problem.data.names.push_back("z" + std::to_string(c + 1));
  }

  Eigen::VectorXd beta = spec.beta.size() == k ? spec.beta : Eigen::VectorXd::Zero(k);
  problem.data.y = problem.data.X * beta + gen_disturbances(spec, problem.clusters, seed);
  return problem;
}

}  // namespace cri
