#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cri/dgp.hpp"
#include "cri/methods.hpp"
#include "cri/parallel.hpp"

namespace cri {

struct McMethod {
  MethodKind kind = MethodKind::CV1T;
  bool clustered = true;  // false: fit carries the cluster partition but the
                          // estimator ignores it (HC1)
  WildOptions wild;
};

struct MonteCarloReport {
  struct Row {
    std::string method;
    double reject_pct = 0.0;
    double mc_se_pct = 0.0;
  };
  std::vector<Row> rows;
  index_t reps = 0;
  double level = 0.05;
};

struct McOptions {
  double level = 0.05;
  index_t reps = 2000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

// Size experiment: simulate the DGP with the placebo coefficient at zero,
// test it per method, and report rejection percentages with binomial Monte
// Carlo standard errors.  Replications use per-index seed streams, so the
// report is deterministic under any thread count.
inline MonteCarloReport run_size_experiment(const DGPSpec& spec,
                                            const std::vector<McMethod>& methods,
                                            const McOptions& opts) {
  if (methods.empty()) throw validation_error("size experiment needs at least one method");
  if (opts.reps < 1) throw validation_error("size experiment needs reps >= 1");

  std::vector<std::vector<unsigned char>> rejects(
      methods.size(), std::vector<unsigned char>(static_cast<std::size_t>(opts.reps), 0));

  parallel_for(static_cast<std::size_t>(opts.reps), opts.threads, [&](std::size_t rep) {
    const std::uint64_t rep_seed = Rng(opts.seed, rep).next_u64();
    const auto problem = make_mc_problem(spec, rep_seed);
    const auto fit = fit_ols(problem.data, problem.clusters);
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      WildOptions wild = methods[mi].wild;
      wild.seed = rep_seed ^ 0x626f6f74;
      const double p = method_p_value(fit, methods[mi].kind, problem.placebo_column, 0.0, wild);
      rejects[mi][rep] = p < opts.level ? 1 : 0;
    }
  });

  MonteCarloReport report;
  report.reps = opts.reps;
  report.level = opts.level;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    index_t hits = 0;
    for (const auto flag : rejects[mi]) hits += flag;
    const double phat = static_cast<double>(hits) / static_cast<double>(opts.reps);
    MonteCarloReport::Row row;
    row.method = to_string(methods[mi].kind);
    row.reject_pct = 100.0 * phat;
    row.mc_se_pct = 100.0 * std::sqrt(phat * (1.0 - phat) / static_cast<double>(opts.reps));
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace cri
