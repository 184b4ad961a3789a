#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "steepest/config.hpp"
#include "steepest/data.hpp"
#include "steepest/diagnostics.hpp"
#include "steepest/error.hpp"
#include "steepest/losses.hpp"
#include "steepest/models.hpp"
#include "steepest/optimizers.hpp"

namespace steepest {

// Fraction of examples with y f(x) > 0; exact zeros count as errors.
inline double evaluate_accuracy(const ModelSpec& model, const ParamVector& theta, const Dataset& data) {
  const Vector q = output_margins(model, theta, data);
  Eigen::Index ok = 0;
  for (Eigen::Index i = 0; i < q.size(); ++i) ok += q(i) > 0.0;
  return static_cast<double>(ok) / static_cast<double>(q.size());
}

struct RunRow {
  std::int64_t step = 0;
  double log_loss = 0.0;
  double train_acc = 0.0;
  std::optional<double> test_acc;
  double q_min = 0.0;
  double gamma_1 = 0.0, gamma_2 = 0.0, gamma_inf = 0.0;
  std::optional<double> gamma_sigma;
  double soft_margin = 0.0;
  double alignment = 0.0;
  std::optional<double> kkt_eps, kkt_delta, bregman_gap, bregman_bound, delta_bound;
  double norm_l1 = 0.0, norm_l2 = 0.0, norm_linf = 0.0, norm_spec = 0.0;
  bool t0_flag = false;
  // Not part of the CSV: margin and norm in the geometry active at this row.
  double gamma_algo = 0.0;
  double norm_algo = 0.0;
  std::string algorithm;
};

struct RunLog {
  std::vector<RunRow> rows;
  std::optional<std::int64_t> t0;
  std::optional<double> soft_margin_t0;
  std::optional<std::int64_t> switch_step;
  std::optional<std::int64_t> frozen_at;  // step where the loss floor stopped a sign-descent run
  std::vector<std::string> violations;
  ParamVector final_theta;
  ModelSpec model;
  int degree = 1;
  Eigen::Index num_examples = 0;
};

struct LoadedData {
  Dataset train;
  std::optional<Dataset> test;
};

inline LoadedData load_run_data(const RunConfig& c) {
  LoadedData out;
  switch (c.data.kind) {
    case DataKind::Teacher: {
      TeacherSpec ts = c.data.teacher;
      ts.seed = c.effective_teacher_seed();
      const ParamVector teacher = gen_teacher(ts);
      out.train = sample_dataset(ts, teacher, c.data.train_size, c.effective_data_seed());
      if (c.data.test_size > 0) out.test = sample_dataset(ts, teacher, c.data.test_size, c.effective_test_seed());
      break;
    }
    case DataKind::File: {
      auto load_any = [](const std::string& p) {
        return p.size() > 4 && p.substr(p.size() - 4) == ".csv" ? load_dataset_csv(p) : load_dataset(p);
      };
      out.train = load_any(c.data.path);
      if (!c.data.test_path.empty()) out.test = load_any(c.data.test_path);
      break;
    }
    case DataKind::Idx: {
      out.train = load_idx(c.data.idx_images, c.data.idx_labels, c.data.digit_a, c.data.digit_b, c.data.train_size);
      if (!c.data.idx_test_images.empty()) {
        const Eigen::Index n = c.data.test_size > 0 ? c.data.test_size : Eigen::Index{1} << 30;
        out.test = load_idx(c.data.idx_test_images, c.data.idx_test_labels, c.data.digit_a, c.data.digit_b, n);
      }
      break;
    }
  }
  out.train.validate();
  return out;
}

namespace detail {

inline bool is_sign_descent(const OptimizerSpec& s) {
  return s.kind == OptimizerKind::Steepest && s.norm.kind == NormKind::Linf;
}

inline bool wants_spectral(const std::vector<NormSpec>& norms) {
  for (const auto& n : norms)
    if (n.kind == NormKind::SpectralPerBlock) return true;
  return false;
}

}  // namespace detail

// Full-batch training loop with per-row diagnostics.
//
// Every step: loss subgradient at theta, separation test, optional switch,
// optimizer step. Rows are logged every log_every steps, at the final step and
// at the first separated step t0 (so t0 is always a logged row). KKT fields
// are present from t0 on. The invariant battery is checked on each
// post-separation row; in strict mode the first violation aborts the run.
inline RunLog run_training(const RunConfig& config, const LoadedData& data) {
  config.validate();
  RunLog log;
  ModelSpec model = config.model;
  model.input_dim = data.train.dim();
  InitSpec init = config.init;
  init.seed = config.effective_init_seed();
  ParamVector theta = init_params(model, init);
  log.model = model;
  log.degree = model.degree();
  log.num_examples = data.train.size();
  const bool spectral = detail::wants_spectral(config.diagnostics_norms);
  const bool exp_loss = config.loss.kind == LossKind::Exponential;
  const double m_log = std::log(static_cast<double>(data.train.size()));
  const int L = model.degree();

  OptimizerState state;
  OptimizerSpec active = config.optimizer;
  active.switch_rule.reset();
  bool stopped = false;
  std::optional<RunRow> prev;

  auto violation = [&](const std::string& what, std::int64_t step) {
    const std::string msg = "step " + std::to_string(step) + ": " + what;
    log.violations.push_back(msg);
    if (config.strict) throw InvariantError(msg);
  };

  for (std::int64_t step = 0;; ++step) {
    if (!theta.all_finite()) throw DivergenceError("parameters became non-finite at step " + std::to_string(step));
    LossGradient lg;
    try {
      lg = loss_subgradient(config.loss, model, theta, data.train);
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " at step " + std::to_string(step));
    }
    if (!std::isfinite(lg.log_loss)) throw DivergenceError("loss became non-finite at step " + std::to_string(step));
    const bool separated = detect_separation(lg.log_loss, config.loss);
    const bool first_sep = separated && !log.t0;
    if (first_sep) log.t0 = step;

    const OptimizerSpec next = config.optimizer.switch_rule ? apply_switch(config.optimizer, state, separated) : active;
    if (config.optimizer.switch_rule && state.switched && !log.switch_step) {
      log.switch_step = step;
      active = next;
      active.switch_rule.reset();
    }

    const bool final_step = step == config.epochs;
    if (step % config.log_every == 0 || final_step || first_sep) {
      const NormSpec algo = algorithm_norm(active);
      const MarginReport mr = margin_report(model, theta, data.train, config.loss, algo, spectral);
      RunRow row;
      row.step = step;
      row.algorithm = describe(active);
      row.log_loss = mr.log_loss;
      row.train_acc = evaluate_accuracy(model, theta, data.train);
      if (data.test) row.test_acc = evaluate_accuracy(model, theta, *data.test);
      row.q_min = mr.q_min;
      row.gamma_1 = mr.gamma_1;
      row.gamma_2 = mr.gamma_2;
      row.gamma_inf = mr.gamma_inf;
      row.gamma_sigma = mr.gamma_sigma;
      row.soft_margin = mr.soft_margin;
      row.alignment = mr.alignment;
      row.norm_l1 = mr.norm_l1;
      row.norm_l2 = mr.norm_l2;
      row.norm_linf = mr.norm_linf;
      row.norm_spec = mr.norm_spec;
      row.gamma_algo = mr.gamma_algo;
      row.norm_algo = mr.norm_algo;
      row.t0_flag = log.t0.has_value();
      if (first_sep) log.soft_margin_t0 = mr.soft_margin;

      if (log.t0 && mr.q_min > 0.0 && log.soft_margin_t0 && *log.soft_margin_t0 > 0.0) {
        const KktReport k = kkt_residuals(model, theta, data.train, config.loss, algo, *log.soft_margin_t0,
                                          KktOptions{config.kkt_tolerance});
        row.kkt_eps = k.eps;
        row.kkt_delta = k.delta;
        row.bregman_gap = k.bregman_gap;
        row.bregman_bound = k.bregman_bound;
        row.delta_bound = k.delta_bound;
      }

      if (log.t0) {
        const double scale = std::pow(mr.norm_algo, L);
        if (exp_loss) {
          const double tol = 1e-10 * std::max(1.0, std::abs(mr.gamma_algo));
          if (!(mr.soft_margin <= mr.gamma_algo + tol) || !(mr.soft_margin >= mr.gamma_algo - m_log / scale - tol))
            violation("soft/hard margin sandwich", step);
          if (row.bregman_gap && !(*row.bregman_gap <= *row.bregman_bound + 1e-8)) violation("Bregman gap above bound", step);
          if (row.kkt_delta && !(*row.kkt_delta <= *row.delta_bound + 1e-8)) violation("complementarity above bound", step);
        }
        if (row.kkt_delta && !(*row.kkt_delta >= -1e-12)) violation("negative complementarity residual", step);
        if (prev && prev->t0_flag && prev->algorithm == row.algorithm) {
          // Descent is only guaranteed for raw steepest steps; fixed-length
          // normalized steps and adaptive methods may overshoot.
          if (active.kind == OptimizerKind::Steepest && !active.normalized) {
            if (!stopped && !(row.log_loss < prev->log_loss)) violation("log-loss did not decrease", step);
            const double slack = 1e-6 + 10.0 * active.step_size;
            if (row.soft_margin < prev->soft_margin - slack) violation("soft margin decreased", step);
          }
        }
      }
      prev = row;
      log.rows.push_back(std::move(row));
    }
    if (final_step) break;

    if (!stopped && detail::is_sign_descent(active) && lg.log_loss < config.stop_log_loss) {
      stopped = true;
      log.frozen_at = step;
    }
    if (stopped) continue;

    // Normalized steepest steps are scale-free, so the rescaled gradient is
    // used directly and keeps working after e^{log_scale} underflows.
    const bool scale_free = active.kind == OptimizerKind::Steepest && active.normalized;
    const ParamVector g = scale_free ? lg.scaled : lg.gradient();
    if (!g.all_finite()) throw DivergenceError("loss subgradient became non-finite at step " + std::to_string(step));
    theta = optimizer_step(theta, g, state, active);
  }
  if (log.t0 && log.rows.back().norm_algo <= 0.0) log.violations.push_back("parameter norm vanished");
  log.final_theta = theta;
  return log;
}

inline RunLog run_training(const RunConfig& config) { return run_training(config, load_run_data(config)); }

}  // namespace steepest
