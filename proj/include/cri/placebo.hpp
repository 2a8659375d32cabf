#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cri/dgp.hpp"
#include "cri/methods.hpp"
#include "cri/transform.hpp"

namespace cri {

enum class PlaceboDesign { DidDummy, Ar1Blend };

// How the artificial regressor is generated, at the level of the `placebo`
// partition (e.g. states) over ordered periods (e.g. years).
struct PlaceboSpec {
  PlaceboDesign design = PlaceboDesign::DidDummy;
  index_t treated_count = 25;  // DiD: clusters switched on at a random start period
  double rho = 0.5;            // AR(1) blend parameters
  double delta = 0.9;
};

struct PlaceboMethod {
  MethodKind kind = MethodKind::CV1T;
  std::string level;  // key into the partitions map; empty for HC1
  WildOptions wild;
};

struct RejectionRow {
  std::string method;
  std::string level;
  double reject_pct = 0.0;
  double mc_se_pct = 0.0;
  index_t reps = 0;
};

struct PlaceboReport {
  std::vector<RejectionRow> rows;
  index_t redrawn = 0;  // replications redrawn for collinear placebo columns
};

struct PlaceboOptions {
  double level = 0.05;
  index_t reps = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  index_t max_redraws = 200;
};

// Placebo-regression experiment on a fixed dataset: per replication, generate
// an artificial regressor, append it, absorb fixed effects if requested, and
// record whether each method rejects its zero coefficient at the given level.
//
// `placebo_clusters` is the partition the artificial regressor varies over;
// `period_of_obs` maps observations to ordered period codes 0..periods-1
// (DiD starts exclude period 0 to avoid collinearity with unit fixed
// effects).  Collinear draws are redrawn and counted.
inline PlaceboReport placebo_experiment(const Dataset& base,
                                        const ClusterPartition& placebo_clusters,
                                        const std::vector<index_t>& period_of_obs, index_t periods,
                                        const std::map<std::string, ClusterPartition>& partitions,
                                        const ClusterPartition* absorb, const PlaceboSpec& spec,
                                        const std::vector<PlaceboMethod>& methods,
                                        const PlaceboOptions& opts) {
  base.validate();
  if (methods.empty()) throw validation_error("placebo experiment needs at least one method");
  if (opts.reps < 1) throw validation_error("placebo experiment needs reps >= 1");
  if (static_cast<index_t>(period_of_obs.size()) != base.n_obs())
    throw validation_error("placebo experiment: period map does not cover the data");
  if (spec.design == PlaceboDesign::DidDummy) {
    if (periods < 2) throw validation_error("DiD placebo needs at least two periods");
    if (spec.treated_count < 1 || spec.treated_count >= placebo_clusters.g_count())
      throw validation_error("DiD placebo needs 1 <= treated clusters < G");
  }
  for (const auto& method : methods)
    if (method.kind != MethodKind::HC1Normal && partitions.find(method.level) == partitions.end())
      throw validation_error("placebo method references unknown clustering level '" + method.level +
                             "'");

  const index_t n = base.n_obs();
  const index_t g_count = placebo_clusters.g_count();

  // one row of rejection flags per replication, reduced in index order
  std::vector<std::vector<unsigned char>> rejects(
      methods.size(), std::vector<unsigned char>(static_cast<std::size_t>(opts.reps), 0));
  std::vector<index_t> redraw_counts(static_cast<std::size_t>(opts.reps), 0);

  parallel_for(static_cast<std::size_t>(opts.reps), opts.threads, [&](std::size_t rep) {
    Rng rng(opts.seed, rep);
    for (index_t attempt = 0;; ++attempt) {
      if (attempt >= opts.max_redraws)
        throw numeric_error("placebo experiment: placebo column collinear in every redraw");

      Eigen::VectorXd x(n);
      if (spec.design == PlaceboDesign::DidDummy) {
        // choose treated clusters by partial shuffle, then a start period
        // uniform on {1, ..., periods-1} for each
        std::vector<index_t> order(static_cast<std::size_t>(g_count));
        for (index_t g = 0; g < g_count; ++g) order[static_cast<std::size_t>(g)] = g;
        for (index_t g = g_count - 1; g > 0; --g)
          std::swap(order[static_cast<std::size_t>(g)],
                    order[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(g + 1)))]);
        std::vector<index_t> start(static_cast<std::size_t>(g_count), periods);  // periods = never
        for (index_t j = 0; j < spec.treated_count; ++j)
          start[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])] =
              1 + static_cast<index_t>(rng.below(static_cast<std::uint64_t>(periods - 1)));
        for (index_t i = 0; i < n; ++i) {
          const index_t s = placebo_clusters.assignment[static_cast<std::size_t>(i)];
          x(i) = period_of_obs[static_cast<std::size_t>(i)] >= start[static_cast<std::size_t>(s)]
                     ? 1.0
                     : 0.0;
        }
      } else {
        x = gen_ar1_blend(placebo_clusters, period_of_obs, periods, spec.rho, spec.delta, rng);
      }

      Dataset augmented;
      augmented.y = base.y;
      augmented.X.resize(n, base.n_regressors() + 1);
      augmented.X.leftCols(base.n_regressors()) = base.X;
      augmented.X.col(base.n_regressors()) = x;
      augmented.names = base.names;
      augmented.names.push_back("placebo");
      augmented.absorbed_count = base.absorbed_count;

      try {
        index_t placebo_col = base.n_regressors();
        if (absorb != nullptr) {
          auto transformed = within_transform(augmented, *absorb);
          if (!transformed.dropped.empty()) throw numeric_error("placebo absorbed");
          augmented = std::move(transformed.data);
          placebo_col = augmented.column("placebo");
        }
        const auto shared = std::make_shared<const Dataset>(std::move(augmented));

        std::map<std::string, RegressionFit> fits;
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
          const auto& method = methods[mi];
          const std::string key = method.kind == MethodKind::HC1Normal ? "" : method.level;
          auto it = fits.find(key);
          if (it == fits.end()) {
            const ClusterPartition& part = method.kind == MethodKind::HC1Normal
                                               ? placebo_clusters
                                               : partitions.at(method.level);
            it = fits.emplace(key, fit_ols(shared, std::make_shared<const ClusterPartition>(part)))
                     .first;
          }
          WildOptions wild = method.wild;
          wild.seed = Rng(opts.seed, rep).next_u64();  // replication-specific stream
          const double p = method_p_value(it->second, method.kind, placebo_col, 0.0, wild);
          rejects[mi][rep] = p < opts.level ? 1 : 0;
        }
        redraw_counts[rep] = attempt;
        return;
      } catch (const numeric_error&) {
        continue;  // collinear draw; redraw
      }
    }
  });

  PlaceboReport report;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    index_t hits = 0;
    for (const auto flag : rejects[mi]) hits += flag;
    const double phat = static_cast<double>(hits) / static_cast<double>(opts.reps);
    RejectionRow row;
    row.method = to_string(methods[mi].kind);
    row.level = methods[mi].kind == MethodKind::HC1Normal ? "none" : methods[mi].level;
    row.reject_pct = 100.0 * phat;
    row.mc_se_pct = 100.0 * std::sqrt(phat * (1.0 - phat) / static_cast<double>(opts.reps));
    row.reps = opts.reps;
    report.rows.push_back(row);
  }
  for (const auto r : redraw_counts) report.redrawn += r;
  return report;
}

}  // namespace cri
