#pragma once

#include <cmath>
#include <string>

#include "steepest/error.hpp"
#include "steepest/param_vector.hpp"

namespace steepest {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Labeled binary examples, one row of X per example, labels in {-1, +1}.
struct Dataset {
  RowMatrix x;
  Eigen::VectorXi y;
  std::string meta;

  Eigen::Index size() const { return x.rows(); }
  Eigen::Index dim() const { return x.cols(); }

  void validate() const {
    if (x.rows() < 1) throw DomainError("Dataset: no examples");
    if (y.size() != x.rows()) {
      throw ShapeError("Dataset: " + std::to_string(y.size()) + " labels for " + std::to_string(x.rows()) +
                       " examples");
    }
    if (!x.allFinite()) throw DomainError("Dataset: non-finite feature");
    for (Eigen::Index i = 0; i < y.size(); ++i)
      if (y(i) != 1 && y(i) != -1) throw DomainError("Dataset: label at row " + std::to_string(i) + " is not +-1");
  }
};

}  // namespace steepest
