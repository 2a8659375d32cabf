#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <unordered_set>
#include <vector>

#include "cri/crve.hpp"
#include "cri/ols.hpp"
#include "cri/parallel.hpp"
#include "cri/rng.hpp"
#include "cri/wild.hpp"

namespace cri {

struct AssignmentCount {
  std::uint64_t value = 0;
  bool overflow = false;  // exceeds 64 bits; sampling mode is required
};

// Binomial coefficient C(g, g1) in exact integer arithmetic with overflow
// detection (128-bit intermediate products).
inline AssignmentCount count_assignments(index_t g, index_t g1) {
  if (g1 < 1 || g1 > g) throw validation_error("count_assignments: need 1 <= G1 <= G");
  const std::uint64_t kk = static_cast<std::uint64_t>(std::min(g1, g - g1));
  unsigned __int128 c = 1;
  for (std::uint64_t i = 1; i <= kk; ++i) {
    c = c * static_cast<unsigned __int128>(static_cast<std::uint64_t>(g) - kk + i);
    c /= i;  // exact: C(n, i) is integral
    if (c > static_cast<unsigned __int128>(UINT64_MAX)) return {UINT64_MAX, true};
  }
  return {static_cast<std::uint64_t>(c), false};
}

enum class RiStatistic { Beta, T };

struct RIResult {
  double observed = 0.0;          // beta_hat_d or its cluster-robust t
  std::vector<double> replicates;  // one per usable re-randomization
  double p1 = 1.0;
  double p2 = 1.0;
  index_t s = 0;                  // usable re-randomizations
  bool enumerated = false;
  RiStatistic statistic_kind = RiStatistic::T;
  bool two_sided = true;
  index_t skipped = 0;            // singular re-randomizations
  bool sampled_with_replacement = false;
  bool crve_unreliable = false;   // one treated or one control cluster
  std::uint64_t seed = 0;
};

// Treatment layout: which clusters are treated, and for DiD designs a start
// period per treated cluster (treatment is on from the start period through
// the last).  Without periods the whole cluster is treated.
struct TreatmentSpec {
  std::vector<index_t> treated_clusters;        // observed assignment
  std::vector<index_t> period_of_obs;           // empty unless DiD
  index_t periods = 0;
  std::vector<index_t> start_periods;           // aligned with treated_clusters
  bool redraw_starts = false;                   // redraw starts per re-randomization
};

struct RiOptions {
  RiStatistic statistic = RiStatistic::T;
  bool two_sided = true;
  Studentization studentization = Studentization::CV1;
  index_t b = 9999;  // maximum re-randomizations to evaluate
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool count_absorbed_in_k = true;
};

namespace detail {

inline Eigen::VectorXd treatment_column(const ClusterPartition& clusters,
                                        const std::vector<index_t>& treated,
                                        const std::vector<index_t>& starts,
                                        const std::vector<index_t>& period_of_obs) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(clusters.n_obs());
  for (std::size_t j = 0; j < treated.size(); ++j) {
    for (const index_t i : clusters.members[static_cast<std::size_t>(treated[j])]) {
      if (period_of_obs.empty() ||
          period_of_obs[static_cast<std::size_t>(i)] >= starts[j])
        d(i) = 1.0;
    }
  }
  return d;
}

// statistic for one assignment; nullopt when the augmented regression is singular
inline std::optional<double> ri_statistic(const Dataset& base, const ClusterPartition& clusters,
                                          const Eigen::VectorXd& d, const RiOptions& opts) {
  Dataset augmented;
  augmented.y = base.y;
  augmented.X.resize(base.n_obs(), base.n_regressors() + 1);
  augmented.X.leftCols(base.n_regressors()) = base.X;
  augmented.X.col(base.n_regressors()) = d;
  augmented.names = base.names;
  augmented.names.push_back("treatment");
  augmented.absorbed_count = base.absorbed_count;
  try {
    const auto fit = fit_ols(augmented, clusters);
    const index_t j = base.n_regressors();
    if (opts.statistic == RiStatistic::Beta) return fit.beta(j);
    CrveOptions copts;
    copts.count_absorbed_in_k = opts.count_absorbed_in_k;
    const auto cov = opts.studentization == Studentization::CV1 ? cv1(fit, copts) : cv3(fit);
    const double var = cov.matrix(j, j);
    return safe_studentize(fit.beta(j), var);
  } catch (const numeric_error&) {
    return std::nullopt;
  }
}

inline bool next_combination(std::vector<index_t>& comb, index_t g) {
  const auto g1 = static_cast<index_t>(comb.size());
  index_t i = g1 - 1;
  while (i >= 0 && comb[static_cast<std::size_t>(i)] == g - g1 + i) --i;
  if (i < 0) return false;
  ++comb[static_cast<std::size_t>(i)];
  for (index_t j = i + 1; j < g1; ++j)
    comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
  return true;
}

inline std::uint64_t subset_hash(const std::vector<index_t>& sorted_subset) {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (const index_t v : sorted_subset)
    h = mix64(h ^ (static_cast<std::uint64_t>(v) + 0x165667b19e3779f9ULL));
  return h;
}

}  // namespace detail

// Randomization inference for cluster-level (or DiD-style) treatment.  The
// observed statistic is compared against its distribution over counterfactual
// assignments of G1 treated clusters: all of them when that is affordable,
// otherwise a random sample (without replacement while the assignment count
// fits in 64 bits, with replacement beyond that).  P values:
//   P1 = (1/S) sum 1(tau*_j >= tau),   P2 = (1 + S P1) / (S + 1).
inline RIResult ri_test(const Dataset& data, const ClusterPartition& clusters,
                        const TreatmentSpec& treatment, const RiOptions& opts) {
  data.validate();
  if (clusters.n_obs() != data.n_obs())
    throw validation_error("ri_test: partition does not match the data");
  const index_t g = clusters.g_count();
  const auto g1 = static_cast<index_t>(treatment.treated_clusters.size());
  if (g1 < 1 || g - g1 < 1)
    throw validation_error("ri_test: need at least one treated and one control cluster");
  for (const index_t c : treatment.treated_clusters)
    if (c < 0 || c >= g) throw validation_error("ri_test: treated cluster index out of range");
  const bool did = !treatment.period_of_obs.empty();
  if (did) {
    if (static_cast<index_t>(treatment.period_of_obs.size()) != data.n_obs())
      throw validation_error("ri_test: period map does not cover the data");
    if (treatment.start_periods.size() != treatment.treated_clusters.size())
      throw validation_error("ri_test: one start period per treated cluster required");
    if (treatment.periods < 2) throw validation_error("ri_test: DiD needs at least two periods");
  }
  if (opts.b < 1) throw validation_error("ri_test: need B >= 1");

  RIResult result;
  result.statistic_kind = opts.statistic;
  result.two_sided = opts.two_sided;
  result.seed = opts.seed;
  result.crve_unreliable = opts.statistic == RiStatistic::T && (g1 == 1 || g - g1 == 1);

  // observed statistic
  std::vector<index_t> observed_sorted = treatment.treated_clusters;
  std::sort(observed_sorted.begin(), observed_sorted.end());
  {
    const auto d = detail::treatment_column(clusters, treatment.treated_clusters,
                                            treatment.start_periods, treatment.period_of_obs);
    const auto stat = detail::ri_statistic(data, clusters, d, opts);
    if (!stat)
      throw numeric_error("ri_test: the observed assignment gives a singular regression");
    result.observed = *stat;
  }

  const auto count = count_assignments(g, g1);
  const std::uint64_t s_total = count.overflow ? UINT64_MAX : count.value - 1;
  const bool enumerate =
      !count.overflow && !treatment.redraw_starts && s_total <= static_cast<std::uint64_t>(opts.b);
  result.enumerated = enumerate;

  // build the list of assignments (treated subsets + start periods)
  std::vector<std::vector<index_t>> subsets;
  std::vector<std::vector<index_t>> starts;
  const auto starts_for = [&](const std::vector<index_t>& subset, Rng& rng) {
    if (!did) return std::vector<index_t>(subset.size(), 0);
    if (!treatment.redraw_starts) return treatment.start_periods;
    std::vector<index_t> out(subset.size());
    for (auto& sp : out)
      sp = 1 + static_cast<index_t>(rng.below(static_cast<std::uint64_t>(treatment.periods - 1)));
    return out;
  };

  if (enumerate) {
    std::vector<index_t> comb(static_cast<std::size_t>(g1));
    for (index_t j = 0; j < g1; ++j) comb[static_cast<std::size_t>(j)] = j;
    Rng dummy(0);
    do {
      if (comb != observed_sorted) {
        subsets.push_back(comb);
        starts.push_back(starts_for(comb, dummy));
      }
    } while (detail::next_combination(comb, g));
  } else {
    // draw distinct subsets through a hash set while the total count fits;
    // astronomically many assignments make collisions irrelevant, so fall
    // back to with-replacement draws
    const bool with_replacement = count.overflow;
    result.sampled_with_replacement = with_replacement;
    std::unordered_set<std::uint64_t> seen;
    if (!with_replacement) seen.insert(detail::subset_hash(observed_sorted));
    Rng rng(opts.seed, 0x7269);
    const std::uint64_t want =
        std::min<std::uint64_t>(static_cast<std::uint64_t>(opts.b), s_total);
    std::vector<index_t> pool(static_cast<std::size_t>(g));
    for (index_t j = 0; j < g; ++j) pool[static_cast<std::size_t>(j)] = j;
    while (subsets.size() < want) {
      for (index_t j = 0; j < g1; ++j) {
        const auto pick = j + static_cast<index_t>(rng.below(static_cast<std::uint64_t>(g - j)));
        std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick)]);
      }
      std::vector<index_t> subset(pool.begin(), pool.begin() + g1);
      std::sort(subset.begin(), subset.end());
      if (!with_replacement) {
        if (!seen.insert(detail::subset_hash(subset)).second) continue;
      } else if (subset == observed_sorted) {
        continue;
      }
      subsets.push_back(subset);
      starts.push_back(starts_for(subset, rng));
    }
  }

  // evaluate all assignments; singular ones are skipped and counted
  std::vector<double> stats(subsets.size());
  std::vector<unsigned char> ok(subsets.size(), 0);
  parallel_for(subsets.size(), opts.threads, [&](std::size_t idx) {
    const auto d = detail::treatment_column(clusters, subsets[idx], starts[idx],
                                            treatment.period_of_obs);
    const auto stat = detail::ri_statistic(data, clusters, d, opts);
    if (stat) {
      stats[idx] = *stat;
      ok[idx] = 1;
    }
  });
  for (std::size_t idx = 0; idx < subsets.size(); ++idx) {
    if (ok[idx])
      result.replicates.push_back(stats[idx]);
    else
      ++result.skipped;
  }
  result.s = static_cast<index_t>(result.replicates.size());
  if (result.s == 0) throw numeric_error("ri_test: no usable re-randomizations");

  const double target = opts.two_sided ? std::fabs(result.observed) : result.observed;
  index_t exceed = 0;
  for (const double t : result.replicates)
    exceed += ((opts.two_sided ? std::fabs(t) : t) >= target);
  const double s = static_cast<double>(result.s);
  result.p1 = static_cast<double>(exceed) / s;
  result.p2 = (1.0 + s * result.p1) / (s + 1.0);
  return result;
}

}  // namespace cri
