#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "steepest/error.hpp"

namespace steepest {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct BlockShape {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  bool operator==(const BlockShape&) const = default;
};

// Block-structured parameter container. Each block is a dense matrix; vectors
// are stored as one-column matrices. A block may be marked frozen: frozen
// blocks are constants of the model, not coordinates of the parameter, so
// scaling, norms and inner products skip them and updates never touch them.
class ParamVector {
 public:
  ParamVector() = default;

  explicit ParamVector(std::vector<Matrix> blocks)
      : blocks_(std::move(blocks)), frozen_(blocks_.size(), false) {}

  ParamVector(std::vector<Matrix> blocks, std::vector<bool> frozen)
      : blocks_(std::move(blocks)), frozen_(std::move(frozen)) {
    if (frozen_.size() != blocks_.size()) {
      throw ShapeError("ParamVector: frozen mask has " + std::to_string(frozen_.size()) +
                       " entries for " + std::to_string(blocks_.size()) + " blocks");
    }
  }

  // Single column vector block.
  static ParamVector from_vector(const Vector& v) { return ParamVector({Matrix(v)}); }

  static ParamVector from_values(std::initializer_list<double> values) {
    Vector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v(i++) = x;
    return from_vector(v);
  }

  // Zero vector with the same shapes and frozen mask as `like`.
  static ParamVector zeros_like(const ParamVector& like) {
    ParamVector out = like;
    for (auto& b : out.blocks_) b.setZero();
    return out;
  }

  std::size_t num_blocks() const { return blocks_.size(); }
  const Matrix& block(std::size_t i) const { return blocks_.at(i); }
  Matrix& block(std::size_t i) { return blocks_.at(i); }
  const std::vector<Matrix>& blocks() const { return blocks_; }

  bool frozen(std::size_t i) const { return frozen_.at(i); }
  void set_frozen(std::size_t i, bool f) { frozen_.at(i) = f; }
  const std::vector<bool>& frozen_mask() const { return frozen_; }

  std::vector<BlockShape> shapes() const {
    std::vector<BlockShape> s;
    s.reserve(blocks_.size());
    for (const auto& b : blocks_) s.push_back({b.rows(), b.cols()});
    return s;
  }

  // Total number of stored coordinates, frozen blocks included.
  Eigen::Index size() const {
    Eigen::Index n = 0;
    for (const auto& b : blocks_) n += b.size();
    return n;
  }

  // Flat view over the trainable blocks, column-major within a block.
  Vector flat() const {
    Eigen::Index n = 0;
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      if (!frozen_[i]) n += blocks_[i].size();
    Vector out(n);
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      if (frozen_[i]) continue;
      out.segment(off, blocks_[i].size()) = blocks_[i].reshaped();
      off += blocks_[i].size();
    }
    return out;
  }

  // Inverse of flat(): writes the trainable coordinates back.
  void set_flat(const Vector& v) {
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      if (frozen_[i]) continue;
      const Eigen::Index n = blocks_[i].size();
      if (off + n > v.size()) throw ShapeError("ParamVector::set_flat: flat vector too short");
      blocks_[i].reshaped() = v.segment(off, n);
      off += n;
    }
    if (off != v.size()) throw ShapeError("ParamVector::set_flat: flat vector too long");
  }

  bool all_finite() const {
    for (const auto& b : blocks_)
      if (!b.allFinite()) return false;
    return true;
  }

  bool is_zero() const {
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      if (!frozen_[i] && !blocks_[i].isZero(0.0)) return false;
    return true;
  }

  // Throws ShapeError naming the first offending block.
  void require_same_shape(const ParamVector& other, const char* what) const {
    if (other.blocks_.size() != blocks_.size()) {
      throw ShapeError(std::string(what) + ": block count " + std::to_string(other.blocks_.size()) +
                       " != " + std::to_string(blocks_.size()));
    }
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      if (blocks_[i].rows() != other.blocks_[i].rows() || blocks_[i].cols() != other.blocks_[i].cols()) {
        throw ShapeError(std::string(what) + ": block " + std::to_string(i) + " is " +
                         std::to_string(other.blocks_[i].rows()) + "x" + std::to_string(other.blocks_[i].cols()) +
                         ", expected " + std::to_string(blocks_[i].rows()) + "x" +
                         std::to_string(blocks_[i].cols()));
      }
    }
  }

  // Scales trainable blocks; frozen blocks are left untouched.
  ParamVector& operator*=(double c) {
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      if (!frozen_[i]) blocks_[i] *= c;
    return *this;
  }

  // this += c * other on trainable blocks.
  ParamVector& axpy(double c, const ParamVector& other) {
    require_same_shape(other, "ParamVector::axpy");
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      if (!frozen_[i]) blocks_[i] += c * other.blocks_[i];
    return *this;
  }

  ParamVector& operator+=(const ParamVector& other) { return axpy(1.0, other); }
  ParamVector& operator-=(const ParamVector& other) { return axpy(-1.0, other); }

  friend ParamVector operator*(double c, ParamVector v) { return v *= c; }
  friend ParamVector operator*(ParamVector v, double c) { return v *= c; }
  friend ParamVector operator+(ParamVector a, const ParamVector& b) { return a += b; }
  friend ParamVector operator-(ParamVector a, const ParamVector& b) { return a -= b; }
  friend ParamVector operator-(ParamVector a) { return a *= -1.0; }

 private:
  std::vector<Matrix> blocks_;
  std::vector<bool> frozen_;
};

// Euclidean inner product over trainable blocks. Blocks are visited in
// order and entries in column-major order, so the sum is reproducible.
inline double dot(const ParamVector& a, const ParamVector& b) {
  a.require_same_shape(b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.num_blocks(); ++i) {
    if (a.frozen(i) || b.frozen(i)) continue;
    const Matrix& x = a.block(i);
    const Matrix& y = b.block(i);
    for (Eigen::Index k = 0; k < x.size(); ++k) s += x.data()[k] * y.data()[k];
  }
  return s;
}

}  // namespace steepest
