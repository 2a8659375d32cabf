#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cri/common.hpp"

namespace cri {

// Disjoint assignment of N observations to G clusters.  Clusters are indexed
// in order of first appearance in the data, and every per-cluster output in
// this library follows that order.
struct ClusterPartition {
  std::vector<index_t> assignment;          // observation -> cluster index
  std::vector<std::vector<index_t>> members;  // cluster index -> observation rows
  std::vector<std::string> labels;          // cluster index -> original label

  index_t n_obs() const { return static_cast<index_t>(assignment.size()); }
  index_t g_count() const { return static_cast<index_t>(members.size()); }
  index_t size_of(index_t g) const { return static_cast<index_t>(members[static_cast<std::size_t>(g)].size()); }

  std::vector<index_t> sizes() const {
    std::vector<index_t> out(members.size());
    for (std::size_t g = 0; g < members.size(); ++g)
      out[g] = static_cast<index_t>(members[g].size());
    return out;
  }
};

inline ClusterPartition build_partition(const std::vector<std::string>& labels) {
  if (labels.empty()) throw validation_error("cannot build a cluster partition from no labels");
  ClusterPartition part;
  part.assignment.resize(labels.size());
  std::unordered_map<std::string, index_t> ids;
  ids.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = ids.emplace(labels[i], static_cast<index_t>(part.members.size()));
    if (inserted) {
      part.members.emplace_back();
      part.labels.push_back(labels[i]);
    }
    part.assignment[i] = it->second;
    part.members[static_cast<std::size_t>(it->second)].push_back(static_cast<index_t>(i));
  }
  return part;
}

// One observation per cluster; used for heteroskedasticity-only estimators.
inline ClusterPartition singleton_partition(index_t n) {
  if (n < 1) throw validation_error("singleton partition needs at least one observation");
  ClusterPartition part;
  part.assignment.resize(static_cast<std::size_t>(n));
  part.members.resize(static_cast<std::size_t>(n));
  part.labels.resize(static_cast<std::size_t>(n));
  for (index_t i = 0; i < n; ++i) {
    part.assignment[static_cast<std::size_t>(i)] = i;
    part.members[static_cast<std::size_t>(i)] = {i};
    part.labels[static_cast<std::size_t>(i)] = std::to_string(i);
  }
  return part;
}

// True iff every fine cluster lies inside a single coarse cluster.
inline bool is_nested(const ClusterPartition& fine, const ClusterPartition& coarse) {
  if (fine.n_obs() != coarse.n_obs())
    throw validation_error("is_nested: partitions cover different numbers of observations");
  for (const auto& rows : fine.members) {
    const index_t parent = coarse.assignment[static_cast<std::size_t>(rows.front())];
    for (const index_t i : rows)
      if (coarse.assignment[static_cast<std::size_t>(i)] != parent) return false;
  }
  return true;
}

// Two clustering dimensions plus their intersection (the coarsest common
// refinement), as needed for two-way variance estimators.
struct CrossedPartition {
  ClusterPartition dim_a;
  ClusterPartition dim_b;
  ClusterPartition intersection;
};

inline CrossedPartition build_crossed(ClusterPartition a, ClusterPartition b) {
  if (a.n_obs() != b.n_obs())
    throw validation_error("crossed partition: dimensions cover different numbers of observations");
  const index_t n = a.n_obs();
  std::vector<std::string> cell_labels(static_cast<std::size_t>(n));
  for (index_t i = 0; i < n; ++i) {
    const auto ai = a.assignment[static_cast<std::size_t>(i)];
    const auto bi = b.assignment[static_cast<std::size_t>(i)];
    cell_labels[static_cast<std::size_t>(i)] =
        a.labels[static_cast<std::size_t>(ai)] + '\x1f' + b.labels[static_cast<std::size_t>(bi)];
  }
  CrossedPartition out;
  out.intersection = build_partition(cell_labels);
  out.dim_a = std::move(a);
  out.dim_b = std::move(b);
  return out;
}

}  // namespace cri
