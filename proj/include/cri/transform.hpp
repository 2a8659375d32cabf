#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cri/dataset.hpp"
#include "cri/partition.hpp"

namespace cri {

struct WithinTransformResult {
  Dataset data;
  index_t absorbed_count = 0;
  std::vector<std::string> dropped;  // columns absorbed into the fixed effects
};

// Replaces y and every regressor column by deviations from its fixed-effect
// cluster mean, absorbing one set of fixed-effect dummies.  Columns that are
// constant within every cluster become numerically zero and are dropped.
inline WithinTransformResult within_transform(const Dataset& data, const ClusterPartition& fe) {
  data.validate();
  if (fe.n_obs() != data.n_obs())
    throw validation_error("within_transform: partition does not match dataset rows");

  Eigen::VectorXd y = data.y;
  Eigen::MatrixXd X = data.X;
  for (const auto& rows : fe.members) {
    const double inv = 1.0 / static_cast<double>(rows.size());
    double y_mean = 0.0;
    Eigen::RowVectorXd x_mean = Eigen::RowVectorXd::Zero(X.cols());
    for (const index_t i : rows) {
      y_mean += y(i);
      x_mean += X.row(i);
    }
    y_mean *= inv;
    x_mean *= inv;
    for (const index_t i : rows) {
      y(i) -= y_mean;
      X.row(i) -= x_mean;
    }
  }

  WithinTransformResult out;
  out.absorbed_count = fe.g_count();
  std::vector<index_t> keep;
  for (index_t j = 0; j < X.cols(); ++j) {
    const double scale = data.X.col(j).cwiseAbs().maxCoeff();
    if (X.col(j).cwiseAbs().maxCoeff() < 1e-10 * std::max(scale, 1e-300))
      out.dropped.push_back(data.names[static_cast<std::size_t>(j)]);
    else
      keep.push_back(j);
  }
  if (keep.empty())
    throw validation_error("within_transform: all regressors are absorbed by the fixed effects");

  out.data.y = std::move(y);
  out.data.X.resize(X.rows(), static_cast<index_t>(keep.size()));
  out.data.names.reserve(keep.size());
  for (std::size_t jj = 0; jj < keep.size(); ++jj) {
    out.data.X.col(static_cast<index_t>(jj)) = X.col(keep[jj]);
    out.data.names.push_back(data.names[static_cast<std::size_t>(keep[jj])]);
  }
  out.data.absorbed_count = data.absorbed_count + out.absorbed_count;
  out.data.validate();
  return out;
}

}  // namespace cri
