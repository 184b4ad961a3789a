#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "steepest/error.hpp"
#include "steepest/linalg.hpp"
#include "steepest/norms.hpp"
#include "steepest/param_vector.hpp"

namespace steepest {

enum class OptimizerKind { Steepest, Adam, Shampoo };

struct OptimizerSpec;

// Switch to another optimizer at the first separated step.
struct SwitchRule {
  std::shared_ptr<const OptimizerSpec> to;
};

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::Steepest;
  NormSpec norm = NormSpec::l2();
  bool normalized = false;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double shampoo_eps = 0.0;
  double step_size = 1e-3;
  std::optional<SwitchRule> switch_rule;

  static OptimizerSpec steepest(NormSpec norm, double eta, bool normalized = false) {
    OptimizerSpec s;
    s.norm = std::move(norm);
    s.step_size = eta;
    s.normalized = normalized;
    return s;
  }
  static OptimizerSpec adam(double eta, double b1, double b2, double eps) {
    OptimizerSpec s;
    s.kind = OptimizerKind::Adam;
    s.step_size = eta;
    s.beta1 = b1;
    s.beta2 = b2;
    s.adam_eps = eps;
    return s;
  }
  static OptimizerSpec shampoo(double eta, double eps_reg = 0.0) {
    OptimizerSpec s;
    s.kind = OptimizerKind::Shampoo;
    s.step_size = eta;
    s.shampoo_eps = eps_reg;
    return s;
  }

  void validate() const {
    if (!(step_size > 0.0) || !std::isfinite(step_size)) throw ConfigError("optimizer: step size must be positive");
    if (kind == OptimizerKind::Adam) {
      if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw ConfigError("optimizer: Adam betas must lie in [0, 1)");
      if (!(adam_eps >= 0.0)) throw ConfigError("optimizer: Adam epsilon must be >= 0");
    }
    if (kind == OptimizerKind::Shampoo && !(shampoo_eps >= 0.0))
      throw ConfigError("optimizer: Shampoo epsilon must be >= 0");
    if (switch_rule) {
      if (!switch_rule->to) throw ConfigError("optimizer: switch rule without a target");
      if (switch_rule->to->switch_rule) throw ConfigError("optimizer: chained switch rules are not supported");
      switch_rule->to->validate();
    }
  }
};

inline std::string describe(const OptimizerSpec& s) {
  switch (s.kind) {
    case OptimizerKind::Steepest: return std::string(s.normalized ? "normalized " : "") + "steepest[" + to_string(s.norm) + "]";
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::Shampoo: return "shampoo";
  }
  return "?";
}

struct OptimizerState {
  std::int64_t t = 0;
  ParamVector m;                 // Adam first moment
  ParamVector v;                 // Adam second moment
  std::vector<Matrix> left;      // Shampoo L per block
  std::vector<Matrix> right;     // Shampoo R per block
  bool switched = false;

  void reset() { *this = OptimizerState{}; }
};

// theta + eta * delta, delta the steepest direction for g (rescaled to unit
// norm when `normalized`). Frozen blocks never move.
inline ParamVector step_steepest(const ParamVector& theta, const ParamVector& g, const OptimizerSpec& spec) {
  if (!g.all_finite()) throw DomainError("step_steepest: non-finite gradient");
  theta.require_same_shape(g, "step_steepest");
  ParamVector delta = steepest_direction(spec.norm, g);
  if (spec.normalized) {
    const double dn = dual_norm_value(spec.norm, g);
    if (dn == 0.0) return theta;
    delta *= 1.0 / dn;
  }
  ParamVector out = theta;
  out.axpy(spec.step_size, delta);
  return out;
}

// Bias-corrected Adam. A coordinate with m_hat = 0 and sqrt(v_hat) + eps = 0
// does not move.
inline ParamVector step_adam(const ParamVector& theta, const ParamVector& g, OptimizerState& state,
                             const OptimizerSpec& spec) {
  if (!g.all_finite()) throw DomainError("step_adam: non-finite gradient");
  theta.require_same_shape(g, "step_adam");
  if (state.t == std::numeric_limits<std::int64_t>::max()) throw DomainError("step_adam: step counter overflow");
  if (state.m.num_blocks() == 0) {
    state.m = ParamVector::zeros_like(theta);
    state.v = ParamVector::zeros_like(theta);
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(spec.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(spec.beta2, static_cast<double>(state.t));
  ParamVector out = theta;
  for (std::size_t b = 0; b < theta.num_blocks(); ++b) {
    if (theta.frozen(b)) continue;
    Matrix& m = state.m.block(b);
    Matrix& v = state.v.block(b);
    const Matrix& gb = g.block(b);
    Matrix& ob = out.block(b);
    for (Eigen::Index k = 0; k < gb.size(); ++k) {
      const double gk = gb.data()[k];
      m.data()[k] = spec.beta1 * m.data()[k] + (1.0 - spec.beta1) * gk;
      v.data()[k] = spec.beta2 * v.data()[k] + (1.0 - spec.beta2) * gk * gk;
      const double mhat = m.data()[k] / c1;
      const double den = std::sqrt(v.data()[k] / c2) + spec.adam_eps;
      if (den == 0.0) continue;
      ob.data()[k] -= spec.step_size * mhat / den;
    }
  }
  return out;
}

// Shampoo without momentum: L += G G^T, R += G^T G, W -= eta L^{-1/4} G R^{-1/4}
// per trainable block, with eps_reg * I added to each accumulator on first use.
inline ParamVector step_shampoo(const ParamVector& theta, const ParamVector& g, OptimizerState& state,
                                const OptimizerSpec& spec) {
  if (!g.all_finite()) throw DomainError("step_shampoo: non-finite gradient");
  theta.require_same_shape(g, "step_shampoo");
  const std::size_t nb = theta.num_blocks();
  if (state.left.size() != nb) {
    state.left.assign(nb, Matrix());
    state.right.assign(nb, Matrix());
    for (std::size_t b = 0; b < nb; ++b) {
      const Matrix& w = theta.block(b);
      state.left[b] = spec.shampoo_eps * Matrix::Identity(w.rows(), w.rows());
      state.right[b] = spec.shampoo_eps * Matrix::Identity(w.cols(), w.cols());
    }
  }
  ++state.t;
  ParamVector out = theta;
  for (std::size_t b = 0; b < nb; ++b) {
    if (theta.frozen(b)) continue;
    const Matrix& gb = g.block(b);
    state.left[b] += gb * gb.transpose();
    state.right[b] += gb.transpose() * gb;
    // Symmetrize to keep the eigensolver input exactly symmetric.
    state.left[b] = 0.5 * (state.left[b] + state.left[b].transpose()).eval();
    state.right[b] = 0.5 * (state.right[b] + state.right[b].transpose()).eval();
    const Matrix update = inverse_root(state.left[b], 4.0) * gb * inverse_root(state.right[b], 4.0);
    out.block(b) -= spec.step_size * update;
  }
  return out;
}

// Dispatches on spec.kind.
inline ParamVector optimizer_step(const ParamVector& theta, const ParamVector& g, OptimizerState& state,
                                  const OptimizerSpec& spec) {
  switch (spec.kind) {
    case OptimizerKind::Steepest: ++state.t; return step_steepest(theta, g, spec);
    case OptimizerKind::Adam: return step_adam(theta, g, state, spec);
    case OptimizerKind::Shampoo: return step_shampoo(theta, g, state, spec);
  }
  return theta;
}

// The spec in force after this step. On the first separated step of a run
// with a switch rule, returns the target spec and resets the accumulators;
// afterwards it keeps returning the target.
inline OptimizerSpec apply_switch(const OptimizerSpec& spec, OptimizerState& state, bool separated) {
  if (!spec.switch_rule) return spec;
  if (state.switched) return *spec.switch_rule->to;
  if (!separated) return spec;
  state.reset();
  state.switched = true;
  return *spec.switch_rule->to;
}

}  // namespace steepest
