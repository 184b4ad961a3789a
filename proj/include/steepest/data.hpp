#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "steepest/dataset.hpp"
#include "steepest/error.hpp"
#include "steepest/models.hpp"
#include "steepest/rng.hpp"

namespace steepest {

// Sparse one-hidden-layer teacher labelling Gaussian inputs.
struct TeacherSpec {
  Eigen::Index d = 32;
  Eigen::Index k = 64;
  Eigen::Index active_per_neuron = 3;
  double weight_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (d < 1 || k < 1 || active_per_neuron < 1) throw ConfigError("TeacherSpec: d, k, active_per_neuron must be positive");
    if (active_per_neuron > d) throw ConfigError("TeacherSpec: active_per_neuron exceeds d");
    if (!(weight_scale > 0.0)) throw ConfigError("TeacherSpec: weight_scale must be positive");
  }

  ModelSpec model() const { return {ModelKind::TwoLayerRelu, d, k, false}; }
};

namespace detail {

// Uniform in [-s, s] excluding exactly zero.
inline double nonzero_uniform(Xoshiro256pp& rng, double s) {
  double v = 0.0;
  while (v == 0.0) v = rng.uniform(-s, s);
  return v;
}

}  // namespace detail

// Teacher parameters (W*, u*). Per neuron: partial Fisher-Yates picks the
// active coordinates, then their weights are drawn in pick order; u* follows
// after all rows. Output weights come in +/- pairs sharing one uniform
// magnitude (u*_{2j} = -u*_{2j+1}), which keeps the two classes balanced even
// for small k.
inline ParamVector gen_teacher(const TeacherSpec& spec) {
  spec.validate();
  Xoshiro256pp rng(spec.seed);
  Matrix w = Matrix::Zero(spec.k, spec.d);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(spec.d));
  for (Eigen::Index j = 0; j < spec.k; ++j) {
    for (Eigen::Index l = 0; l < spec.d; ++l) idx[static_cast<std::size_t>(l)] = l;
    for (Eigen::Index a = 0; a < spec.active_per_neuron; ++a) {
      const auto r = a + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(spec.d - a)));
      std::swap(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(r)]);
    }
    for (Eigen::Index a = 0; a < spec.active_per_neuron; ++a)
      w(j, idx[static_cast<std::size_t>(a)]) = detail::nonzero_uniform(rng, spec.weight_scale);
  }
  Matrix u(spec.k, 1);
  for (Eigen::Index j = 0; j < spec.k; j += 2) {
    const double mag = std::abs(detail::nonzero_uniform(rng, spec.weight_scale));
    u(j, 0) = mag;
    if (j + 1 < spec.k) u(j + 1, 0) = -mag;
  }
  return ParamVector({w, u});
}

// m examples x ~ N(0, I_d) labelled by the sign of the teacher. Draws whose
// teacher output is exactly zero are discarded and redrawn.
inline Dataset sample_dataset(const TeacherSpec& spec, const ParamVector& teacher, Eigen::Index m, std::uint64_t seed) {
  if (m < 1) throw ConfigError("sample_dataset: m must be >= 1");
  const ModelSpec tm = spec.model();
  check_params(tm, teacher);
  Xoshiro256pp rng(seed);
  Dataset ds;
  ds.x.resize(m, spec.d);
  ds.y.resize(m);
  Vector x(spec.d);
  for (Eigen::Index i = 0; i < m; ++i) {
    double f = 0.0;
    do {
      for (Eigen::Index l = 0; l < spec.d; ++l) x(l) = rng.gaussian();
      f = forward(tm, teacher, x);
    } while (f == 0.0);
    ds.x.row(i) = x.transpose();
    ds.y(i) = f > 0.0 ? 1 : -1;
  }
  std::ostringstream meta;
  meta << "teacher(d=" << spec.d << ",k=" << spec.k << ",active=" << spec.active_per_neuron
       << ",scale=" << spec.weight_scale << ",seed=" << spec.seed << ");data_seed=" << seed;
  ds.meta = meta.str();
  return ds;
}

namespace detail {

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& b, std::size_t off, const std::string& path) {
  if (off + 4 > b.size()) throw FormatError("'" + path + "': truncated header");
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
         std::uint32_t{b[off + 3]};
}

// FNV-1a, used only as a content fingerprint in dataset metadata.
inline std::uint64_t fnv1a(const std::vector<unsigned char>& b) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : b) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

}  // namespace detail

inline constexpr std::uint32_t kIdxImageMagic = 2051;  // 0x00000803
inline constexpr std::uint32_t kIdxLabelMagic = 2049;  // 0x00000801

// Reads an MNIST-style IDX pair and keeps the first m_train examples whose
// label is digit_a (+1) or digit_b (-1), pixels scaled to [0, 1].
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path, int digit_a, int digit_b,
                        Eigen::Index m_train) {
  if (digit_a == digit_b) throw ConfigError("load_idx: digits must differ");
  if (m_train < 1) throw ConfigError("load_idx: m_train must be >= 1");
  const auto img = detail::read_file(images_path);
  const auto lab = detail::read_file(labels_path);
  const std::uint32_t im = detail::read_be32(img, 0, images_path);
  if (im != kIdxImageMagic) throw FormatError("'" + images_path + "': bad image magic " + std::to_string(im));
  const std::uint32_t lm = detail::read_be32(lab, 0, labels_path);
  if (lm != kIdxLabelMagic) throw FormatError("'" + labels_path + "': bad label magic " + std::to_string(lm));
  const std::size_t n = detail::read_be32(img, 4, images_path);
  const std::size_t rows = detail::read_be32(img, 8, images_path);
  const std::size_t cols = detail::read_be32(img, 12, images_path);
  const std::size_t nl = detail::read_be32(lab, 4, labels_path);
  if (n != nl) throw FormatError("IDX: " + std::to_string(n) + " images but " + std::to_string(nl) + " labels");
  const std::size_t pix = rows * cols;
  if (img.size() < 16 + n * pix) throw FormatError("'" + images_path + "': truncated pixel data");
  if (lab.size() < 8 + n) throw FormatError("'" + labels_path + "': truncated label data");

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n && static_cast<Eigen::Index>(keep.size()) < m_train; ++i) {
    const int l = lab[8 + i];
    if (l == digit_a || l == digit_b) keep.push_back(i);
  }
  if (keep.empty()) {
    throw FormatError("IDX: no examples of digits " + std::to_string(digit_a) + "/" + std::to_string(digit_b));
  }
  Dataset ds;
  ds.x.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(pix));
  ds.y.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const std::size_t i = keep[r];
    for (std::size_t p = 0; p < pix; ++p)
      ds.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(p)) = img[16 + i * pix + p] / 255.0;
    ds.y(static_cast<Eigen::Index>(r)) = lab[8 + i] == digit_a ? 1 : -1;
  }
  std::ostringstream meta;
  meta << "idx(images=" << std::hex << detail::fnv1a(img) << ",labels=" << detail::fnv1a(lab) << std::dec
       << ",pair=" << digit_a << "/" << digit_b << ")";
  ds.meta = meta.str();
  return ds;
}

// STPD container, all integers and floats little-endian:
//   "STPD" | u32 version | u64 m | u64 d | f64 X[m*d] row-major | i8 y[m]
//   | u32 meta length | meta bytes
inline constexpr std::uint32_t kStpdVersion = 1;

namespace detail {

template <typename T>
void put_le(std::ostream& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const std::string& path) {
  unsigned char b[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) throw FormatError("'" + path + "': truncated file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace detail

inline void save_dataset(const Dataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out.write("STPD", 4);
  detail::put_le<std::uint32_t>(out, kStpdVersion);
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(ds.size()));
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(ds.dim()));
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    for (Eigen::Index l = 0; l < ds.dim(); ++l) detail::put_le<double>(out, ds.x(i, l));
  for (Eigen::Index i = 0; i < ds.size(); ++i) detail::put_le<std::int8_t>(out, static_cast<std::int8_t>(ds.y(i)));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.meta.size()));
  out.write(ds.meta.data(), static_cast<std::streamsize>(ds.meta.size()));
  if (!out) throw FormatError("write failed for '" + path + "'");
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "STPD", 4) != 0) throw FormatError("'" + path + "': not an STPD file");
  const auto version = detail::get_le<std::uint32_t>(in, path);
  if (version != kStpdVersion) {
    throw FormatError("'" + path + "': STPD version " + std::to_string(version) + " not supported (expected " +
                      std::to_string(kStpdVersion) + ")");
  }
  const auto m = detail::get_le<std::uint64_t>(in, path);
  const auto d = detail::get_le<std::uint64_t>(in, path);
  if (m == 0 || d == 0 || m > (1ULL << 32) || d > (1ULL << 24)) throw FormatError("'" + path + "': implausible shape");
  Dataset ds;
  ds.x.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  ds.y.resize(static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    for (Eigen::Index l = 0; l < ds.dim(); ++l) ds.x(i, l) = detail::get_le<double>(in, path);
  for (Eigen::Index i = 0; i < ds.size(); ++i) ds.y(i) = detail::get_le<std::int8_t>(in, path);
  const auto len = detail::get_le<std::uint32_t>(in, path);
  ds.meta.resize(len);
  if (len && !in.read(ds.meta.data(), len)) throw FormatError("'" + path + "': truncated metadata");
  ds.validate();
  return ds;
}

// CSV export: header "y,x0,...,x{d-1}", one row per example, 17 significant digits.
inline void export_dataset_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << "y";
  for (Eigen::Index l = 0; l < ds.dim(); ++l) out << ",x" << l;
  out << "\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    out << ds.y(i);
    for (Eigen::Index l = 0; l < ds.dim(); ++l) out << "," << ds.x(i, l);
    out << "\n";
  }
}

// Reads the CSV export format back (used for small hand-written instances).
inline Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw FormatError("'" + path + "': empty file");
  const auto d = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ','));
  if (d < 1 || line.rfind("y", 0) != 0) throw FormatError("'" + path + "': header must be y,x0,...");
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError("'" + path + "' line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (static_cast<Eigen::Index>(vals.size()) != d + 1)
      throw FormatError("'" + path + "' line " + std::to_string(lineno) + ": expected " + std::to_string(d + 1) + " fields");
    labels.push_back(static_cast<int>(vals[0]));
    rows.emplace_back(vals.begin() + 1, vals.end());
  }
  Dataset ds;
  ds.x.resize(static_cast<Eigen::Index>(rows.size()), d);
  ds.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index l = 0; l < d; ++l) ds.x(static_cast<Eigen::Index>(i), l) = rows[i][static_cast<std::size_t>(l)];
    ds.y(static_cast<Eigen::Index>(i)) = labels[i];
  }
  ds.meta = "csv(" + path + ")";
  ds.validate();
  return ds;
}

}  // namespace steepest
