#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "steepest/error.hpp"
#include "steepest/param_vector.hpp"

namespace steepest {

// Singular values at or below this fraction of the largest are dropped.
inline constexpr double kRankTolerance = 1e-12;

struct ThinSvd {
  Matrix u;       // rows x r, orthonormal columns
  Vector sigma;   // r singular values, descending
  Matrix v;       // cols x r, orthonormal columns

  Eigen::Index rank() const { return sigma.size(); }
  Matrix reconstruct() const { return u * sigma.asDiagonal() * v.transpose(); }
};

// Rank-truncated thin SVD, M = U diag(sigma) V^T.
inline ThinSvd thin_svd(const Matrix& m) {
  if (!m.allFinite()) throw DomainError("thin_svd: matrix has non-finite entries");
  ThinSvd out;
  if (m.size() == 0) {
    out.u.resize(m.rows(), 0);
    out.v.resize(m.cols(), 0);
    return out;
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw ConvergenceError("thin_svd: Jacobi SVD did not converge");
  const Vector& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > kRankTolerance * smax && s(r) > 0.0) ++r;
  out.sigma = s.head(r);
  out.u = svd.matrixU().leftCols(r);
  out.v = svd.matrixV().leftCols(r);
  return out;
}

struct SymmetricEigen {
  Vector values;   // ascending
  Matrix vectors;  // columns are eigenvectors
};

inline SymmetricEigen symmetric_eigen(const Matrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("symmetric_eigen: matrix is not square");
  if (!a.allFinite()) throw DomainError("symmetric_eigen: matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) throw ConvergenceError("symmetric_eigen: eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

// A^{-1/p} for symmetric positive semidefinite A. Eigenvalues at or below
// kRankTolerance * lambda_max map to zero (pseudo-inverse).
inline Matrix inverse_root(const Matrix& a, double p) {
  const SymmetricEigen es = symmetric_eigen(a);
  const Eigen::Index n = es.values.size();
  const double lmax = n > 0 ? es.values.cwiseAbs().maxCoeff() : 0.0;
  Vector d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double l = es.values(i);
    d(i) = (l > kRankTolerance * lmax && l > 0.0) ? std::pow(l, -1.0 / p) : 0.0;
  }
  return es.vectors * d.asDiagonal() * es.vectors.transpose();
}

}  // namespace steepest
