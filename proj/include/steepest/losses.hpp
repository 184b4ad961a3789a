#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "steepest/dataset.hpp"
#include "steepest/error.hpp"
#include "steepest/models.hpp"
#include "steepest/param_vector.hpp"

namespace steepest {

// Exponentially tailed losses l(u) = exp(-Phi(u)) on the output margin u = y f(x).
//   Exponential: Phi(u) = u.
//   Logistic:    Phi(u) = -log log(1 + e^{-u}).
enum class LossKind { Exponential, Logistic };

struct LossSpec {
  LossKind kind = LossKind::Exponential;
};

inline std::string to_string(LossKind k) { return k == LossKind::Exponential ? "exponential" : "logistic"; }

namespace detail {

// log(1 + e^x) without overflow.
inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// log l(u) for the logistic loss, l(u) = log(1 + e^{-u}). For u > 0 it is
// written as -u + log(log1p(t) / t), t = e^{-u}, which survives t underflowing.
inline double logistic_log_l(double u) {
  if (u <= 0.0) return std::log(softplus(-u));
  const double t = std::exp(-u);
  const double ratio = t > 0.0 ? std::log1p(t) / t : 1.0;
  return -u + std::log(ratio);
}

inline double log_sum_exp(const Vector& a) {
  const double mx = a.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += std::exp(a(i) - mx);
  return mx + std::log(s);
}

}  // namespace detail

inline double phi(const LossSpec& loss, double u) {
  return loss.kind == LossKind::Exponential ? u : -detail::logistic_log_l(u);
}

// log Phi'(u). Logistic: Phi'(u) = sigmoid(-u) / l(u).
inline double log_phi_prime(const LossSpec& loss, double u) {
  if (loss.kind == LossKind::Exponential) return 0.0;
  return -detail::softplus(u) - detail::logistic_log_l(u);
}

inline double phi_prime(const LossSpec& loss, double u) { return std::exp(log_phi_prime(loss, u)); }

// log of the per-example loss-gradient weight e^{-Phi(u)} Phi'(u).
inline double log_weight(const LossSpec& loss, double u) {
  if (loss.kind == LossKind::Exponential) return -u;
  return -detail::softplus(u);
}

// log L for L = sum_i e^{-Phi(q_i)}, by max-shifted log-sum-exp.
inline double log_loss(const LossSpec& loss, const Vector& q) {
  if (q.size() < 1) throw DomainError("log_loss: empty margin vector");
  if (!q.allFinite()) throw DomainError("log_loss: non-finite margin");
  Vector a(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) a(i) = -phi(loss, q(i));
  return detail::log_sum_exp(a);
}

// Phi^{-1}. Logistic: -log(e^{e^{-v}} - 1); above v = 30 the expansion
// v - log1p(z/2 + z^2/6), z = e^{-v}, avoids the cancellation in expm1.
inline double phi_inverse(const LossSpec& loss, double v) {
  if (std::isnan(v)) throw DomainError("phi_inverse: NaN argument");
  if (loss.kind == LossKind::Exponential) return v;
  if (std::isinf(v)) return v;
  if (v > 30.0) {
    const double z = std::exp(-v);
    return v - std::log1p(z * (0.5 + z / 6.0));
  }
  const double z = std::exp(-v);
  if (z > 30.0) return -z - std::log1p(-std::exp(-z));
  return -std::log(std::expm1(z));
}

// log e^{-Phi(0)}: the log-loss below which every example is classified correctly.
inline double separation_threshold(const LossSpec& loss) {
  return loss.kind == LossKind::Exponential ? 0.0 : std::log(std::numbers::ln2);
}

// Output margins q_i = y_i f(x_i; theta).
inline Vector output_margins(const ModelSpec& model, const ParamVector& theta, const Dataset& data) {
  const Vector f = forward_batch(model, theta, data.x);
  Vector q(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) q(i) = data.y(i) * f(i);
  return q;
}

// Loss subgradient g = -sum_i e^{logw_i} y_i h_i, stored as g = e^{log_scale} * scaled
// with max_i (logw_i - log_scale) = 0, so directions stay representable long after
// every e^{logw_i} underflows.
struct LossGradient {
  ParamVector scaled;
  double log_scale = 0.0;
  Vector log_weights;
  Vector margins;
  double log_loss = 0.0;

  // The unscaled subgradient; underflows to zero (or overflows) when log_scale is extreme.
  ParamVector gradient() const { return std::exp(log_scale) * scaled; }
};

inline LossGradient loss_subgradient(const LossSpec& loss, const ModelSpec& model, const ParamVector& theta,
                                     const Dataset& data) {
  if (data.size() < 1) throw DomainError("loss_subgradient: empty dataset");
  LossGradient out;
  out.margins = output_margins(model, theta, data);
  if (!out.margins.allFinite()) throw DivergenceError("loss_subgradient: non-finite network output");
  out.log_loss = log_loss(loss, out.margins);
  const Eigen::Index m = data.size();
  out.log_weights.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) out.log_weights(i) = log_weight(loss, out.margins(i));
  out.log_scale = out.log_weights.maxCoeff();
  Vector coeff(m);
  for (Eigen::Index i = 0; i < m; ++i) coeff(i) = -std::exp(out.log_weights(i) - out.log_scale) * data.y(i);
  out.scaled = weighted_subgradient_sum(model, theta, data.x, coeff);
  return out;
}

}  // namespace steepest
