#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "steepest/dataset.hpp"
#include "steepest/diagnostics.hpp"
#include "steepest/error.hpp"
#include "steepest/norms.hpp"

namespace steepest {

struct OracleResult {
  double gamma_star = 0.0;
  ParamVector theta_star;  // unit norm in the queried geometry
  double resolution = 0.0;
};

namespace detail {

// Lexicographic order on the flat coordinates.
inline bool lex_less(const Vector& a, const Vector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) < b(i)) return true;
    if (a(i) > b(i)) return false;
  }
  return false;
}

// Visits a grid on the boundary of the l1 ball (the union of its simplex
// faces, one per sign pattern) or of the l_inf cube (its 2d faces), in a
// fixed order. Each face is gridded with step `res`.
template <typename F>
void visit_polytope_surface(Eigen::Index d, bool cross_polytope, double res, F&& visit) {
  const long n = std::max(1L, static_cast<long>(std::ceil((cross_polytope ? 1.0 : 2.0) / res)));
  Vector p(d);
  if (cross_polytope) {
    // Barycentric grid: integer weights summing to n.
    for (long pattern = 0; pattern < (1L << d); ++pattern) {
      std::array<long, 3> c{0, 0, 0};
      auto emit = [&] {
        for (Eigen::Index i = 0; i < d; ++i) {
          const double s = (pattern >> i) & 1L ? -1.0 : 1.0;
          p(i) = s * static_cast<double>(c[static_cast<std::size_t>(i)]) / static_cast<double>(n);
        }
        visit(p);
      };
      if (d == 1) {
        c[0] = n;
        emit();
      } else if (d == 2) {
        for (c[0] = 0; c[0] <= n; ++c[0]) {
          c[1] = n - c[0];
          emit();
        }
      } else {
        for (c[0] = 0; c[0] <= n; ++c[0])
          for (c[1] = 0; c[0] + c[1] <= n; ++c[1]) {
            c[2] = n - c[0] - c[1];
            emit();
          }
      }
    }
    return;
  }
  // Cube faces: coordinate `axis` fixed at +-1, the others on a grid over [-1, 1].
  for (Eigen::Index axis = 0; axis < d; ++axis) {
    for (int side = -1; side <= 1; side += 2) {
      std::array<long, 2> c{0, 0};
      auto emit = [&] {
        Eigen::Index f = 0;
        for (Eigen::Index i = 0; i < d; ++i) {
          if (i == axis) p(i) = side;
          else p(i) = -1.0 + 2.0 * static_cast<double>(c[static_cast<std::size_t>(f++)]) / static_cast<double>(n);
        }
        visit(p);
      };
      if (d == 1) emit();
      else if (d == 2)
        for (c[0] = 0; c[0] <= n; ++c[0]) emit();
      else
        for (c[0] = 0; c[0] <= n; ++c[0])
          for (c[1] = 0; c[1] <= n; ++c[1]) emit();
    }
  }
}

}  // namespace detail

// Exhaustive search for max_{||theta|| = 1} min_i y_i <theta, x_i> over a linear
// dataset with d <= 3. Candidate directions come from a grid on the surface of
// the l1 ball (for the l1 geometry) or of the l_inf cube (otherwise), rescaled
// onto the unit sphere of `norm`. Ties within 1e-12 go to the
// lexicographically smallest theta.
inline OracleResult grid_max_margin(const NormSpec& norm, const Dataset& data, double resolution = 1e-3) {
  data.validate();
  const Eigen::Index d = data.dim();
  if (d > 3) throw DomainError("grid_max_margin: input dimension " + std::to_string(d) + " > 3");
  if (!(resolution > 0.0)) throw DomainError("grid_max_margin: resolution must be positive");
  if (norm.kind == NormKind::ModularMax) throw DomainError("grid_max_margin: ModularMax not supported for linear models");
  const bool l1 = norm.kind == NormKind::L1;
  double best = -std::numeric_limits<double>::infinity();
  Vector best_theta = Vector::Zero(d);
  detail::visit_polytope_surface(d, l1, resolution, [&](const Vector& p) {
    const double n = norm_value(norm, ParamVector::from_vector(p));
    if (n == 0.0) return;
    const Vector t = p / n;
    double margin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      double s = 0.0;
      for (Eigen::Index l = 0; l < d; ++l) s += t(l) * data.x(i, l);
      margin = std::min(margin, data.y(i) * s);
    }
    if (margin > best + 1e-12 || (margin >= best - 1e-12 && detail::lex_less(t, best_theta))) {
      if (margin > best) best = margin;
      best_theta = t;
    }
  });
  return {best, ParamVector::from_vector(best_theta), resolution};
}

// True iff the approximate-KKT residuals at the feasible rescaling of theta are
// within tolerance. The soft margin at theta stands in for the t0 value,
// which only enters the bounds, not eps or delta.
inline bool certify_kkt(const ModelSpec& model, const ParamVector& theta, const Dataset& data,
                        const NormSpec& algo_norm, double tol_eps, double tol_delta,
                        const LossSpec& loss = {LossKind::Exponential}, const KktOptions& opts = {0.0}) {
  const MarginReport mr = margin_report(model, theta, data, loss, algo_norm, false);
  const double sm = mr.soft_margin > 0.0 ? mr.soft_margin : mr.gamma_algo;
  const KktReport k = kkt_residuals(model, theta, data, loss, algo_norm, sm > 0.0 ? sm : 1.0, opts);
  return k.eps <= tol_eps && k.delta <= tol_delta;
}

}  // namespace steepest
