#pragma once

#include <cmath>
#include <numbers>
#include <optional>

#include "steepest/dataset.hpp"
#include "steepest/error.hpp"
#include "steepest/losses.hpp"
#include "steepest/models.hpp"
#include "steepest/norms.hpp"
#include "steepest/param_vector.hpp"

namespace steepest {

// Margins and related scalars at one parameter value.
//
// The loss subgradient used for the alignment (and for the KKT multipliers
// below) is the fixed-selection one (relu'(0) = 0), standing in for the
// minimum-dual-norm subgradient. The two coincide away from kinks.
struct MarginReport {
  double q_min = 0.0;
  double gamma_1 = 0.0;    // q_min / ||theta||_inf^L
  double gamma_2 = 0.0;    // q_min / ||theta||_2^L
  double gamma_inf = 0.0;  // q_min / ||theta||_1^L
  std::optional<double> gamma_sigma;  // q_min / ||theta||_spec^L
  double gamma_algo = 0.0;  // q_min / ||theta||^L in the algorithm norm
  double soft_margin = 0.0;  // Phi^{-1}(-log L) / ||theta||^L in the algorithm norm
  double log_loss = 0.0;
  double alignment = 0.0;  // <theta/||theta||, -g/||g||_*>
  bool separated = false;  // log L below the separation threshold
  double norm_l1 = 0.0, norm_l2 = 0.0, norm_linf = 0.0, norm_spec = 0.0, norm_algo = 0.0;
  int degree = 1;
  Eigen::Index num_examples = 0;
};

namespace detail {

inline double alignment_from(const NormSpec& norm, const ParamVector& theta, double theta_norm,
                             const ParamVector& g_scaled) {
  const double gd = dual_norm_value(norm, g_scaled);
  if (gd == 0.0 || theta_norm == 0.0) return 0.0;
  return -dot(theta, g_scaled) / (theta_norm * gd);
}

}  // namespace detail

inline MarginReport margin_report(const ModelSpec& model, const ParamVector& theta, const Dataset& data,
                                  const LossSpec& loss, const NormSpec& algo_norm, bool with_spectral = true) {
  if (theta.is_zero()) throw DomainError("margin_report: theta = 0");
  const LossGradient lg = loss_subgradient(loss, model, theta, data);
  MarginReport r;
  const int L = model.degree();
  r.degree = L;
  r.num_examples = data.size();
  r.q_min = lg.margins.minCoeff();
  r.log_loss = lg.log_loss;
  r.separated = lg.log_loss < separation_threshold(loss);
  r.norm_l1 = norm_value(NormSpec::l1(), theta);
  r.norm_l2 = norm_value(NormSpec::l2(), theta);
  r.norm_linf = norm_value(NormSpec::linf(), theta);
  r.norm_algo = norm_value(algo_norm, theta);
  r.gamma_1 = r.q_min / std::pow(r.norm_linf, L);
  r.gamma_2 = r.q_min / std::pow(r.norm_l2, L);
  r.gamma_inf = r.q_min / std::pow(r.norm_l1, L);
  if (with_spectral) {
    r.norm_spec = norm_value(NormSpec::spectral(), theta);
    r.gamma_sigma = r.q_min / std::pow(r.norm_spec, L);
  }
  const double scale = std::pow(r.norm_algo, L);
  r.gamma_algo = r.q_min / scale;
  r.soft_margin = phi_inverse(loss, -r.log_loss) / scale;
  r.alignment = detail::alignment_from(algo_norm, theta, r.norm_algo, lg.scaled);
  return r;
}

// theta / q_min^{1/L}: the rescaling with min_i y_i f(x_i) = 1.
inline ParamVector scale_to_feasible(const ModelSpec& model, const ParamVector& theta, const Dataset& data) {
  const Vector q = output_margins(model, theta, data);
  const double qmin = q.minCoeff();
  if (!(qmin > 0.0)) throw NotSeparatedError("scale_to_feasible: q_min = " + std::to_string(qmin) + " <= 0");
  return std::pow(qmin, -1.0 / model.degree()) * theta;
}

// D(y, z) = 1/2 ||y||_*^2 - 1/2 ||z||_*^2 - <m, y - z>, m a subgradient of
// 1/2 ||.||_*^2 at z. Not a metric: may be negative when the squared dual norm
// is not strictly convex.
inline double bregman_divergence(const NormSpec& norm, const ParamVector& y, const ParamVector& z,
                                 const ParamVector& m) {
  y.require_same_shape(z, "bregman_divergence");
  y.require_same_shape(m, "bregman_divergence");
  const double dy = dual_norm_value(norm, y);
  const double dz = dual_norm_value(norm, z);
  return 0.5 * dy * dy - 0.5 * dz * dz - dot(m, y - z);
}

inline bool detect_separation(double log_loss_value, const LossSpec& loss) {
  return log_loss_value < separation_threshold(loss);
}

struct KktOptions {
  // Relative activity tolerance used to pick the stationarity multiplier k
  // from the approximate subdifferential of 1/2 ||.||^2 (see
  // nearest_norm_subgradient). Zero selects from the exact subdifferential.
  double subgradient_tolerance = 1e-2;
};

// Approximate-KKT residuals of the rescaled iterate theta~ = theta / q_min^{1/L}.
struct KktReport {
  Vector log_lambda;   // log of the multipliers
  Vector lambda;       // exp(log_lambda); entries that underflow are 0
  bool lambda_representable = true;
  double eps = 0.0;            // || sum_i lambda_i y_i h~_i - k ||_2
  double delta = 0.0;          // sum_i lambda_i (y_i f(x_i; theta~) - 1)
  double bregman_gap = 0.0;    // D(sum_i lambda_i y_i h~_i, k*) with m = theta~
  double bregman_bound = 0.0;  // (1 - alignment) / soft_margin(t0)^{2/L}
  double delta_bound = 0.0;    // m / (e soft_margin(t0)^{2/L} L log(1/L))
  double alignment = 0.0;
  double q_min = 0.0;
};

// `soft_margin_t0` is the soft margin recorded at the separation step; the
// caller owns it because it depends on the trajectory, not on theta.
//
// The multipliers follow lambda_i = (||theta|| / ||g||_*) q_min^{1-2/L} w_i with
// w_i = e^{-Phi(q_i)} Phi'(q_i), all in log-domain. eps uses a k chosen from
// the (tolerance-relaxed) subdifferential nearest the stationarity vector;
// the Bregman gap uses the exact selection k* = ||theta~|| norm_subgradient(theta~).
inline KktReport kkt_residuals(const ModelSpec& model, const ParamVector& theta, const Dataset& data,
                               const LossSpec& loss, const NormSpec& algo_norm, double soft_margin_t0,
                               const KktOptions& opts = {}) {
  if (theta.is_zero()) throw DomainError("kkt_residuals: theta = 0");
  if (!(soft_margin_t0 > 0.0)) throw DomainError("kkt_residuals: soft margin at t0 must be positive");
  const LossGradient lg = loss_subgradient(loss, model, theta, data);
  const Eigen::Index m = data.size();
  const int L = model.degree();
  KktReport r;
  r.q_min = lg.margins.minCoeff();
  if (!(r.q_min > 0.0)) throw NotSeparatedError("kkt_residuals: q_min <= 0");
  if (!detect_separation(lg.log_loss, loss)) throw NotSeparatedError("kkt_residuals: loss above separation threshold");

  const double theta_norm = norm_value(algo_norm, theta);
  const double g_dual_scaled = dual_norm_value(algo_norm, lg.scaled);
  if (g_dual_scaled == 0.0) throw DomainError("kkt_residuals: zero loss subgradient");
  const double log_g_dual = std::log(g_dual_scaled) + lg.log_scale;
  r.alignment = detail::alignment_from(algo_norm, theta, theta_norm, lg.scaled);

  const double log_prefactor = std::log(theta_norm) - log_g_dual + (1.0 - 2.0 / L) * std::log(r.q_min);
  r.log_lambda.resize(m);
  r.lambda.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    r.log_lambda(i) = log_prefactor + lg.log_weights(i);
    r.lambda(i) = std::exp(r.log_lambda(i));
    if (r.lambda(i) == 0.0 || !std::isfinite(r.lambda(i))) r.lambda_representable = false;
  }

  const double rescale = std::pow(r.q_min, -1.0 / L);
  const ParamVector theta_t = rescale * theta;
  const double h_scale = std::pow(r.q_min, 1.0 / L - 1.0);

  // s = sum_i lambda_i y_i h~_i, accumulated per example.
  Vector coeff(m);
  for (Eigen::Index i = 0; i < m; ++i) coeff(i) = std::exp(r.log_lambda(i)) * data.y(i) * h_scale;
  const ParamVector s = weighted_subgradient_sum(model, theta, data.x, coeff);

  const double tt_norm = norm_value(algo_norm, theta_t);
  const ParamVector k_exact = tt_norm * norm_subgradient(algo_norm, theta_t);
  const ParamVector target = (1.0 / tt_norm) * s;
  const ParamVector k_near = tt_norm * nearest_norm_subgradient(algo_norm, theta_t, target, opts.subgradient_tolerance);
  r.eps = (s - k_near).flat().norm();

  const Vector qt = output_margins(model, theta_t, data);
  double delta = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) delta += r.lambda(i) * (qt(i) - 1.0);
  r.delta = delta;

  r.bregman_gap = bregman_divergence(algo_norm, s, k_exact, theta_t);
  const double g0 = std::pow(soft_margin_t0, 2.0 / L);
  r.bregman_bound = (1.0 - r.alignment) / g0;
  r.delta_bound = static_cast<double>(m) / (std::numbers::e * g0 * L * (-lg.log_loss));
  return r;
}

}  // namespace steepest
