#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "steepest/error.hpp"
#include "steepest/linalg.hpp"
#include "steepest/param_vector.hpp"

namespace steepest {

enum class NormKind { L1, L2, Linf, SpectralPerBlock, ModularMax };

// Declarative description of the geometry an algorithm works in. L1, L2 and
// Linf act on the flat view of the trainable blocks. SpectralPerBlock is the
// max over blocks of the largest singular value (vectors are one-column
// matrices, so their spectral norm is their l2 norm). ModularMax is the max
// over blocks of each block's own norm, one entry of block_norms per block.
struct NormSpec {
  NormKind kind = NormKind::L2;
  std::vector<NormSpec> block_norms;

  static NormSpec l1() { return {NormKind::L1, {}}; }
  static NormSpec l2() { return {NormKind::L2, {}}; }
  static NormSpec linf() { return {NormKind::Linf, {}}; }
  static NormSpec spectral() { return {NormKind::SpectralPerBlock, {}}; }
  static NormSpec modular(std::vector<NormSpec> blocks) { return {NormKind::ModularMax, std::move(blocks)}; }
};

inline std::string to_string(const NormSpec& spec) {
  switch (spec.kind) {
    case NormKind::L1: return "l1";
    case NormKind::L2: return "l2";
    case NormKind::Linf: return "linf";
    case NormKind::SpectralPerBlock: return "spectral";
    case NormKind::ModularMax: {
      std::string s = "modular(";
      for (std::size_t i = 0; i < spec.block_norms.size(); ++i) {
        if (i) s += ",";
        s += to_string(spec.block_norms[i]);
      }
      return s + ")";
    }
  }
  return "?";
}

namespace detail {

inline double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Lowest flat index of the largest |entry| over trainable blocks.
struct FlatArgmax {
  std::size_t block = 0;
  Eigen::Index index = -1;
  double value = 0.0;
};

inline FlatArgmax flat_argmax_abs(const ParamVector& v) {
  FlatArgmax best;
  for (std::size_t b = 0; b < v.num_blocks(); ++b) {
    if (v.frozen(b)) continue;
    const Matrix& m = v.block(b);
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      const double a = std::abs(m.data()[k]);
      if (best.index < 0 || a > best.value) best = {b, k, a};
    }
  }
  return best;
}

// Per-block kinds for the block-composite norms, validated against `v`.
inline std::vector<NormKind> block_kinds(const NormSpec& spec, const ParamVector& v) {
  std::vector<NormKind> kinds(v.num_blocks(), NormKind::SpectralPerBlock);
  if (spec.kind == NormKind::SpectralPerBlock) return kinds;
  if (spec.block_norms.size() != v.num_blocks()) {
    throw ShapeError("ModularMax: " + std::to_string(spec.block_norms.size()) + " block norms for " +
                     std::to_string(v.num_blocks()) + " parameter blocks");
  }
  for (std::size_t b = 0; b < kinds.size(); ++b) {
    kinds[b] = spec.block_norms[b].kind;
    if (kinds[b] == NormKind::ModularMax) {
      throw ConfigError("ModularMax: block " + std::to_string(b) + " is itself ModularMax");
    }
  }
  return kinds;
}

inline double block_norm(NormKind kind, const Matrix& m) {
  switch (kind) {
    case NormKind::L1: return m.cwiseAbs().sum();
    case NormKind::L2: return m.norm();
    case NormKind::Linf: return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
    case NormKind::SpectralPerBlock: {
      const ThinSvd s = thin_svd(m);
      return s.rank() ? s.sigma(0) : 0.0;
    }
    case NormKind::ModularMax: break;
  }
  throw DomainError("block_norm: nested ModularMax");
}

inline double block_dual_norm(NormKind kind, const Matrix& m) {
  switch (kind) {
    case NormKind::L1: return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
    case NormKind::L2: return m.norm();
    case NormKind::Linf: return m.cwiseAbs().sum();
    case NormKind::SpectralPerBlock: return thin_svd(m).sigma.sum();
    case NormKind::ModularMax: break;
  }
  throw DomainError("block_dual_norm: nested ModularMax");
}

// d with block_norm(d) = 1 and <d, g> = -block_dual_norm(g); zero for g = 0.
inline Matrix block_unit_direction(NormKind kind, const Matrix& g) {
  Matrix d = Matrix::Zero(g.rows(), g.cols());
  switch (kind) {
    case NormKind::L1: {
      Eigen::Index best = -1;
      double bv = 0.0;
      for (Eigen::Index k = 0; k < g.size(); ++k) {
        const double a = std::abs(g.data()[k]);
        if (a > bv) best = k, bv = a;
      }
      if (best >= 0) d.data()[best] = -sign0(g.data()[best]);
      return d;
    }
    case NormKind::L2: {
      const double n = g.norm();
      if (n > 0.0) d = -g / n;
      return d;
    }
    case NormKind::Linf:
      return -g.unaryExpr([](double x) { return sign0(x); });
    case NormKind::SpectralPerBlock: {
      const ThinSvd s = thin_svd(g);
      if (s.rank()) d = -s.u * s.v.transpose();
      return d;
    }
    case NormKind::ModularMax: break;
  }
  throw DomainError("block_unit_direction: nested ModularMax");
}

// n with <n, m> = block_norm(m) and block_dual_norm(n) <= 1; m != 0.
inline Matrix block_subgradient(NormKind kind, const Matrix& m) {
  Matrix n = Matrix::Zero(m.rows(), m.cols());
  switch (kind) {
    case NormKind::L1:
      return m.unaryExpr([](double x) { return sign0(x); });
    case NormKind::L2: {
      const double v = m.norm();
      if (v > 0.0) n = m / v;
      return n;
    }
    case NormKind::Linf: {
      Eigen::Index best = -1;
      double bv = 0.0;
      for (Eigen::Index k = 0; k < m.size(); ++k) {
        const double a = std::abs(m.data()[k]);
        if (a > bv) best = k, bv = a;
      }
      if (best >= 0) n.data()[best] = sign0(m.data()[best]);
      return n;
    }
    case NormKind::SpectralPerBlock: {
      const ThinSvd s = thin_svd(m);
      if (s.rank()) n = s.u.col(0) * s.v.col(0).transpose();
      return n;
    }
    case NormKind::ModularMax: break;
  }
  throw DomainError("block_subgradient: nested ModularMax");
}

inline bool is_flat(NormKind k) { return k == NormKind::L1 || k == NormKind::L2 || k == NormKind::Linf; }

}  // namespace detail

// ||v|| under `spec`.
inline double norm_value(const NormSpec& spec, const ParamVector& v) {
  if (detail::is_flat(spec.kind)) {
    double acc = 0.0;
    for (std::size_t b = 0; b < v.num_blocks(); ++b) {
      if (v.frozen(b)) continue;
      const Matrix& m = v.block(b);
      if (spec.kind == NormKind::L1) acc += m.cwiseAbs().sum();
      else if (spec.kind == NormKind::L2) acc += m.squaredNorm();
      else if (m.size()) acc = std::max(acc, m.cwiseAbs().maxCoeff());
    }
    return spec.kind == NormKind::L2 ? std::sqrt(acc) : acc;
  }
  const auto kinds = detail::block_kinds(spec, v);
  double best = 0.0;
  for (std::size_t b = 0; b < v.num_blocks(); ++b)
    if (!v.frozen(b)) best = std::max(best, detail::block_norm(kinds[b], v.block(b)));
  return best;
}

// ||g||_* under `spec`. The dual of a max over blocks is the sum of the
// block duals.
inline double dual_norm_value(const NormSpec& spec, const ParamVector& g) {
  if (detail::is_flat(spec.kind)) {
    const NormKind dual = spec.kind == NormKind::L1 ? NormKind::Linf
                          : spec.kind == NormKind::Linf ? NormKind::L1
                                                         : NormKind::L2;
    return norm_value(NormSpec{dual, {}}, g);
  }
  const auto kinds = detail::block_kinds(spec, g);
  double sum = 0.0;
  for (std::size_t b = 0; b < g.num_blocks(); ++b)
    if (!g.frozen(b)) sum += detail::block_dual_norm(kinds[b], g.block(b));
  return sum;
}

// Steepest-descent step for gradient g: ||delta|| = ||g||_* and
// <delta, g> = -||g||_*^2. Frozen blocks stay zero.
inline ParamVector steepest_direction(const NormSpec& spec, const ParamVector& g) {
  if (!g.all_finite()) throw DomainError("steepest_direction: gradient has non-finite entries");
  ParamVector delta = ParamVector::zeros_like(g);
  switch (spec.kind) {
    case NormKind::L2:
      for (std::size_t b = 0; b < g.num_blocks(); ++b)
        if (!g.frozen(b)) delta.block(b) = -g.block(b);
      return delta;
    case NormKind::L1: {
      const auto am = detail::flat_argmax_abs(g);
      if (am.index >= 0 && am.value > 0.0) {
        const double gj = g.block(am.block).data()[am.index];
        delta.block(am.block).data()[am.index] = -am.value * detail::sign0(gj);
      }
      return delta;
    }
    case NormKind::Linf: {
      const double l1 = dual_norm_value(spec, g);
      for (std::size_t b = 0; b < g.num_blocks(); ++b)
        if (!g.frozen(b)) delta.block(b) = -l1 * g.block(b).unaryExpr([](double x) { return detail::sign0(x); });
      return delta;
    }
    case NormKind::SpectralPerBlock:
    case NormKind::ModularMax: {
      const auto kinds = detail::block_kinds(spec, g);
      const double total = dual_norm_value(spec, g);
      for (std::size_t b = 0; b < g.num_blocks(); ++b)
        if (!g.frozen(b)) delta.block(b) = total * detail::block_unit_direction(kinds[b], g.block(b));
      return delta;
    }
  }
  return delta;
}

// One element n of the subdifferential of ||.|| at theta: <n, theta> =
// ||theta|| and ||n||_* <= 1. Ties go to the lowest flat index or block.
inline ParamVector norm_subgradient(const NormSpec& spec, const ParamVector& theta) {
  if (theta.is_zero()) throw DomainError("norm_subgradient: undefined at theta = 0");
  ParamVector n = ParamVector::zeros_like(theta);
  switch (spec.kind) {
    case NormKind::L2: {
      const double v = norm_value(spec, theta);
      for (std::size_t b = 0; b < theta.num_blocks(); ++b)
        if (!theta.frozen(b)) n.block(b) = theta.block(b) / v;
      return n;
    }
    case NormKind::L1:
      for (std::size_t b = 0; b < theta.num_blocks(); ++b)
        if (!theta.frozen(b)) n.block(b) = theta.block(b).unaryExpr([](double x) { return detail::sign0(x); });
      return n;
    case NormKind::Linf: {
      const auto am = detail::flat_argmax_abs(theta);
      n.block(am.block).data()[am.index] = detail::sign0(theta.block(am.block).data()[am.index]);
      return n;
    }
    case NormKind::SpectralPerBlock:
    case NormKind::ModularMax: {
      const auto kinds = detail::block_kinds(spec, theta);
      std::size_t best = 0;
      double bv = -1.0;
      for (std::size_t b = 0; b < theta.num_blocks(); ++b) {
        if (theta.frozen(b)) continue;
        const double v = detail::block_norm(kinds[b], theta.block(b));
        if (v > bv) best = b, bv = v;
      }
      n.block(best) = detail::block_subgradient(kinds[best], theta.block(best));
      return n;
    }
  }
  return n;
}

namespace detail {

// Euclidean projection onto {c >= 0, sum c = 1}.
inline Vector project_to_simplex(const Vector& v) {
  const Eigen::Index n = v.size();
  std::vector<double> s(v.data(), v.data() + n);
  std::sort(s.begin(), s.end(), std::greater<>());
  double cum = 0.0, tau = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cum += s[static_cast<std::size_t>(k)];
    const double t = (cum - 1.0) / static_cast<double>(k + 1);
    if (s[static_cast<std::size_t>(k)] - t > 0.0) tau = t;
  }
  return (v.array() - tau).max(0.0).matrix();
}

}  // namespace detail

// Element of the approximate subdifferential of ||.|| at theta closest in l2
// to `target`. Coordinates within rel_tol * ||theta||_inf of zero count as
// zero (L1), and coordinates within a factor (1 - rel_tol) of the maximum count
// as tied (Linf). With rel_tol = 0 this is the exact subdifferential. Norms
// other than the flat ones fall back to norm_subgradient.
inline ParamVector nearest_norm_subgradient(const NormSpec& spec, const ParamVector& theta,
                                            const ParamVector& target, double rel_tol) {
  theta.require_same_shape(target, "nearest_norm_subgradient");
  if (spec.kind != NormKind::L1 && spec.kind != NormKind::Linf) return norm_subgradient(spec, theta);
  if (theta.is_zero()) throw DomainError("nearest_norm_subgradient: undefined at theta = 0");
  const Vector t = theta.flat();
  const Vector z = target.flat();
  const double tmax = t.cwiseAbs().maxCoeff();
  Vector n = Vector::Zero(t.size());
  if (spec.kind == NormKind::L1) {
    for (Eigen::Index j = 0; j < t.size(); ++j) {
      if (std::abs(t(j)) > rel_tol * tmax) n(j) = detail::sign0(t(j));
      else n(j) = std::clamp(z(j), -1.0, 1.0);
    }
  } else {
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < t.size(); ++j)
      if (std::abs(t(j)) >= (1.0 - rel_tol) * tmax) active.push_back(j);
    Vector w(static_cast<Eigen::Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) w(static_cast<Eigen::Index>(a)) = detail::sign0(t(active[a])) * z(active[a]);
    const Vector c = detail::project_to_simplex(w);
    for (std::size_t a = 0; a < active.size(); ++a) n(active[a]) = detail::sign0(t(active[a])) * c(static_cast<Eigen::Index>(a));
  }
  ParamVector out = ParamVector::zeros_like(theta);
  out.set_flat(n);
  return out;
}

}  // namespace steepest
