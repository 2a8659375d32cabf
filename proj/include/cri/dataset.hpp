#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <string>
#include <unordered_set>
#include <vector>

#include "cri/common.hpp"

namespace cri {

// Outcome vector plus named regressor matrix for unweighted OLS.
// `absorbed_count` records how many fixed-effect groups were swept out by a
// within transform; degrees-of-freedom corrections may add it to the column
// count.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<std::string> names;
  index_t absorbed_count = 0;

  index_t n_obs() const { return y.size(); }
  index_t n_regressors() const { return X.cols(); }

  index_t column(const std::string& name) const {
    for (index_t j = 0; j < static_cast<index_t>(names.size()); ++j)
      if (names[static_cast<std::size_t>(j)] == name) return j;
    throw validation_error("unknown regressor column '" + name + "'");
  }

  void validate() const {
    const index_t n = y.size();
    const index_t k = X.cols();
    if (n == 0) throw validation_error("dataset has no observations");
    if (k < 1) throw validation_error("dataset needs at least one regressor");
    if (X.rows() != n) throw validation_error("outcome and regressor row counts differ");
    if (static_cast<index_t>(names.size()) != k)
      throw validation_error("regressor name count does not match column count");
    if (n <= k + absorbed_count)
      throw validation_error("not enough observations: N must exceed k plus absorbed effects");
    if (!y.allFinite() || !X.allFinite())
      throw validation_error("dataset contains non-finite values");
    std::unordered_set<std::string> seen;
    for (const auto& nm : names)
      if (!seen.insert(nm).second)
        throw validation_error("duplicate regressor column name '" + nm + "'");
  }
};

}  // namespace cri
