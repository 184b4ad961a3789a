#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "steepest/data.hpp"
#include "steepest/error.hpp"
#include "steepest/models.hpp"
#include "steepest/param_vector.hpp"

namespace steepest {

// Model snapshot. Binary layout, little-endian:
//   "STPC" | u32 version | u8 kind (0 linear, 1 two-layer relu) | u64 d | u64 width
//   | u8 freeze_second_layer | i32 degree | u64 step | u32 blocks
//   | per block: u64 rows | u64 cols | u8 frozen | f64 entries, column-major
//   | u32 note length | note bytes
struct Checkpoint {
  ModelSpec model;
  ParamVector theta;
  std::uint64_t step = 0;
  std::string note;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  check_params(ck.model, ck.theta);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  using detail::put_le;
  out.write("STPC", 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint8_t>(out, ck.model.kind == ModelKind::Linear ? 0 : 1);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(ck.model.input_dim));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(ck.model.width));
  put_le<std::uint8_t>(out, ck.model.freeze_second_layer ? 1 : 0);
  put_le<std::int32_t>(out, ck.model.degree());
  put_le<std::uint64_t>(out, ck.step);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ck.theta.num_blocks()));
  for (std::size_t b = 0; b < ck.theta.num_blocks(); ++b) {
    const Matrix& m = ck.theta.block(b);
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    put_le<std::uint8_t>(out, ck.theta.frozen(b) ? 1 : 0);
    for (Eigen::Index k = 0; k < m.size(); ++k) put_le<double>(out, m.data()[k]);
  }
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ck.note.size()));
  out.write(ck.note.data(), static_cast<std::streamsize>(ck.note.size()));
  if (!out) throw FormatError("write failed for '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "STPC", 4) != 0) throw FormatError("'" + path + "': not a checkpoint");
  using detail::get_le;
  const auto version = get_le<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) throw FormatError("'" + path + "': checkpoint version " + std::to_string(version) + " not supported");
  Checkpoint ck;
  const auto kind = get_le<std::uint8_t>(in, path);
  if (kind > 1) throw FormatError("'" + path + "': unknown model kind");
  ck.model.kind = kind == 0 ? ModelKind::Linear : ModelKind::TwoLayerRelu;
  ck.model.input_dim = static_cast<Eigen::Index>(get_le<std::uint64_t>(in, path));
  ck.model.width = static_cast<Eigen::Index>(get_le<std::uint64_t>(in, path));
  ck.model.freeze_second_layer = get_le<std::uint8_t>(in, path) != 0;
  const auto degree = get_le<std::int32_t>(in, path);
  if (degree != ck.model.degree()) throw FormatError("'" + path + "': stored degree disagrees with model");
  ck.step = get_le<std::uint64_t>(in, path);
  const auto nb = get_le<std::uint32_t>(in, path);
  if (nb > 16) throw FormatError("'" + path + "': implausible block count");
  std::vector<Matrix> blocks;
  std::vector<bool> frozen;
  for (std::uint32_t b = 0; b < nb; ++b) {
    const auto r = get_le<std::uint64_t>(in, path);
    const auto c = get_le<std::uint64_t>(in, path);
    if (r > (1ULL << 24) || c > (1ULL << 24)) throw FormatError("'" + path + "': implausible block shape");
    frozen.push_back(get_le<std::uint8_t>(in, path) != 0);
    Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = get_le<double>(in, path);
    blocks.push_back(std::move(m));
  }
  ck.theta = ParamVector(std::move(blocks), std::move(frozen));
  const auto len = get_le<std::uint32_t>(in, path);
  ck.note.resize(len);
  if (len && !in.read(ck.note.data(), len)) throw FormatError("'" + path + "': truncated note");
  check_params(ck.model, ck.theta);
  return ck;
}

}  // namespace steepest
