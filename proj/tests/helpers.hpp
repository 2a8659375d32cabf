#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cri/dataset.hpp"
#include "cri/ols.hpp"
#include "cri/partition.hpp"
#include "cri/rng.hpp"

namespace test_helpers {

// Random well-conditioned regression instance: intercept plus k-1 normal
// columns, disturbances with a cluster component so scores are clustered.
inline cri::Dataset random_dataset(cri::Rng& rng, cri::index_t n, cri::index_t k,
                                   const cri::ClusterPartition& part, double cluster_sd = 1.0) {
  cri::Dataset data;
  data.X.resize(n, k);
  data.X.col(0).setOnes();
  data.names.push_back("const");
  for (cri::index_t j = 1; j < k; ++j) {
    for (cri::index_t i = 0; i < n; ++i) data.X(i, j) = rng.next_normal();
    data.names.push_back("x" + std::to_string(j));
  }
  Eigen::VectorXd beta(k);
  for (cri::index_t j = 0; j < k; ++j) beta(j) = rng.next_normal();
  std::vector<double> shocks(static_cast<std::size_t>(part.g_count()));
  for (auto& s : shocks) s = cluster_sd * rng.next_normal();
  data.y.resize(n);
  for (cri::index_t i = 0; i < n; ++i)
    data.y(i) = data.X.row(i).dot(beta) +
                shocks[static_cast<std::size_t>(part.assignment[static_cast<std::size_t>(i)])] +
                rng.next_normal();
  return data;
}

// Partition with the given cluster sizes, labels "g0", "g1", ...
inline cri::ClusterPartition sized_partition(const std::vector<cri::index_t>& sizes) {
  std::vector<std::string> labels;
  for (std::size_t g = 0; g < sizes.size(); ++g)
    for (cri::index_t i = 0; i < sizes[g]; ++i) labels.push_back("g" + std::to_string(g));
  return cri::build_partition(labels);
}

// Partition with roughly equal random cluster sizes (at least min_size each).
inline cri::ClusterPartition random_partition(cri::Rng& rng, cri::index_t n, cri::index_t g_count,
                                              cri::index_t min_size = 1) {
  std::vector<cri::index_t> sizes(static_cast<std::size_t>(g_count), min_size);
  cri::index_t left = n - min_size * g_count;
  for (cri::index_t i = 0; i < left; ++i)
    sizes[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(g_count)))]++;
  return sized_partition(sizes);
}

}  // namespace test_helpers
