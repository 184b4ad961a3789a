#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "steepest/dataset.hpp"
#include "steepest/error.hpp"
#include "steepest/param_vector.hpp"
#include "steepest/rng.hpp"

namespace steepest {

enum class ModelKind { Linear, TwoLayerRelu };

// Bias-free homogeneous classifiers.
//   Linear:        f(x) = <theta, x>, one block of shape d x 1.
//   TwoLayerRelu:  f(x) = sum_j u_j relu(<w_j, x>), blocks W (k' x d), u (k' x 1).
struct ModelSpec {
  ModelKind kind = ModelKind::TwoLayerRelu;
  Eigen::Index input_dim = 1;
  Eigen::Index width = 1;
  bool freeze_second_layer = false;

  // Homogeneity degree L: f(x; c theta) = c^L f(x; theta) for c > 0.
  int degree() const {
    if (kind == ModelKind::Linear) return 1;
    return freeze_second_layer ? 1 : 2;
  }

  void validate() const {
    if (input_dim < 1) throw ConfigError("ModelSpec: input_dim must be positive");
    if (kind == ModelKind::TwoLayerRelu && width < 1) throw ConfigError("ModelSpec: width must be positive");
  }
};

inline std::string to_string(ModelKind k) { return k == ModelKind::Linear ? "linear" : "two_layer_relu"; }

enum class InitScheme { LayerUniform, CoordinateUniform };

struct InitSpec {
  double scale = 0.01;
  InitScheme scheme = InitScheme::LayerUniform;
  std::uint64_t seed = 0;
};

inline void check_params(const ModelSpec& model, const ParamVector& theta) {
  if (model.kind == ModelKind::Linear) {
    if (theta.num_blocks() != 1 || theta.block(0).rows() != model.input_dim || theta.block(0).cols() != 1) {
      throw ShapeError("Linear model: expected one block of shape " + std::to_string(model.input_dim) + "x1");
    }
    return;
  }
  if (theta.num_blocks() != 2) throw ShapeError("TwoLayerRelu: expected 2 blocks (W, u)");
  if (theta.block(0).rows() != model.width || theta.block(0).cols() != model.input_dim) {
    throw ShapeError("TwoLayerRelu: block 0 (W) is " + std::to_string(theta.block(0).rows()) + "x" +
                     std::to_string(theta.block(0).cols()) + ", expected " + std::to_string(model.width) + "x" +
                     std::to_string(model.input_dim));
  }
  if (theta.block(1).rows() != model.width || theta.block(1).cols() != 1) {
    throw ShapeError("TwoLayerRelu: block 1 (u) must be " + std::to_string(model.width) + "x1");
  }
}

template <typename Derived>
inline void check_input(const ModelSpec& model, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != model.input_dim) {
    throw ShapeError("input has dimension " + std::to_string(x.size()) + ", model expects " +
                     std::to_string(model.input_dim));
  }
}

namespace detail {

// Sums in index order; Eigen's dot may vectorize differently across builds.
template <typename A, typename B>
inline double ordered_dot(const A& a, const B& b) {
  double s = 0.0;
  for (Eigen::Index l = 0; l < a.size(); ++l) s += a(l) * b(l);
  return s;
}

}  // namespace detail

template <typename Derived>
double forward(const ModelSpec& model, const ParamVector& theta, const Eigen::MatrixBase<Derived>& x) {
  check_params(model, theta);
  check_input(model, x);
  if (model.kind == ModelKind::Linear) return detail::ordered_dot(theta.block(0).col(0), x);
  const Matrix& w = theta.block(0);
  const Matrix& u = theta.block(1);
  double f = 0.0;
  for (Eigen::Index j = 0; j < model.width; ++j) {
    const double z = detail::ordered_dot(w.row(j), x);
    if (z > 0.0) f += u(j, 0) * z;
  }
  return f;
}

// One Clarke subgradient of f(x; .) using relu'(0) := 0. Frozen blocks get a
// zero block since they are not parameters.
template <typename Derived>
ParamVector network_subgradient(const ModelSpec& model, const ParamVector& theta,
                                const Eigen::MatrixBase<Derived>& x) {
  check_params(model, theta);
  check_input(model, x);
  ParamVector h = ParamVector::zeros_like(theta);
  if (model.kind == ModelKind::Linear) {
    h.block(0).col(0) = x.transpose().reshaped();
    return h;
  }
  const Matrix& w = theta.block(0);
  const Matrix& u = theta.block(1);
  for (Eigen::Index j = 0; j < model.width; ++j) {
    const double z = detail::ordered_dot(w.row(j), x);
    if (z > 0.0) {
      if (!theta.frozen(0)) h.block(0).row(j) = u(j, 0) * x.reshaped().transpose();
      if (!theta.frozen(1)) h.block(1)(j, 0) = z;
    }
  }
  return h;
}

// |<theta, h> - L f(x; theta)|; zero up to rounding for homogeneous f.
template <typename Derived>
double euler_identity_check(const ModelSpec& model, const ParamVector& theta, const Eigen::MatrixBase<Derived>& x) {
  const double f = forward(model, theta, x);
  const ParamVector h = network_subgradient(model, theta, x);
  return std::abs(dot(theta, h) - model.degree() * f);
}

// Outputs f(x_i; theta) for every row of X.
inline Vector forward_batch(const ModelSpec& model, const ParamVector& theta, const RowMatrix& x) {
  check_params(model, theta);
  if (x.cols() != model.input_dim) throw ShapeError("forward_batch: dataset dimension mismatch");
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = forward(model, theta, x.row(i));
  return out;
}

// sum_i coeff_i * h_i with h_i the fixed-selection subgradient at x_i,
// accumulated in increasing i.
inline ParamVector weighted_subgradient_sum(const ModelSpec& model, const ParamVector& theta, const RowMatrix& x,
                                            const Vector& coeff) {
  check_params(model, theta);
  if (x.cols() != model.input_dim) throw ShapeError("weighted_subgradient_sum: dataset dimension mismatch");
  if (coeff.size() != x.rows()) throw ShapeError("weighted_subgradient_sum: coefficient count mismatch");
  ParamVector g = ParamVector::zeros_like(theta);
  if (model.kind == ModelKind::Linear) {
    auto col = g.block(0).col(0);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index l = 0; l < x.cols(); ++l) col(l) += coeff(i) * x(i, l);
    return g;
  }
  const Matrix& w = theta.block(0);
  const Matrix& u = theta.block(1);
  Matrix& gw = g.block(0);
  Matrix& gu = g.block(1);
  const bool train_w = !theta.frozen(0), train_u = !theta.frozen(1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double c = coeff(i);
    if (c == 0.0) continue;
    for (Eigen::Index j = 0; j < model.width; ++j) {
      const double z = detail::ordered_dot(w.row(j), x.row(i));
      if (z <= 0.0) continue;
      if (train_w) {
        const double a = c * u(j, 0);
        for (Eigen::Index l = 0; l < x.cols(); ++l) gw(j, l) += a * x(i, l);
      }
      if (train_u) gu(j, 0) += c * z;
    }
  }
  return g;
}

// Deterministic draw. LayerUniform: w ~ U[-a/d, a/d], u ~ U[-a/k', a/k'].
// CoordinateUniform: both layers ~ U[-a/k', a/k']. Linear: U[-a/d, a/d].
// W is drawn row by row, then u.
inline ParamVector init_params(const ModelSpec& model, const InitSpec& init) {
  model.validate();
  if (!(init.scale > 0.0)) throw ConfigError("InitSpec: scale must be positive");
  Xoshiro256pp rng(init.seed);
  const double d = static_cast<double>(model.input_dim);
  if (model.kind == ModelKind::Linear) {
    Matrix t(model.input_dim, 1);
    for (Eigen::Index l = 0; l < model.input_dim; ++l) t(l, 0) = rng.uniform(-init.scale / d, init.scale / d);
    return ParamVector({t});
  }
  const double k = static_cast<double>(model.width);
  const double wr = init.scheme == InitScheme::LayerUniform ? init.scale / d : init.scale / k;
  const double ur = init.scale / k;
  Matrix w(model.width, model.input_dim);
  for (Eigen::Index j = 0; j < model.width; ++j)
    for (Eigen::Index l = 0; l < model.input_dim; ++l) w(j, l) = rng.uniform(-wr, wr);
  Matrix u(model.width, 1);
  for (Eigen::Index j = 0; j < model.width; ++j) u(j, 0) = rng.uniform(-ur, ur);
  return ParamVector({w, u}, {false, model.freeze_second_layer});
}

}  // namespace steepest
