#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "steepest/data.hpp"
#include "steepest/error.hpp"
#include "steepest/losses.hpp"
#include "steepest/models.hpp"
#include "steepest/norms.hpp"
#include "steepest/optimizers.hpp"
#include "steepest/rng.hpp"

namespace steepest {

enum class DataKind { Teacher, File, Idx };

struct DataSource {
  DataKind kind = DataKind::Teacher;
  TeacherSpec teacher{16, 4, 3, 1.0, 0};
  std::optional<std::uint64_t> teacher_seed;
  Eigen::Index train_size = 64;
  Eigen::Index test_size = 0;
  std::optional<std::uint64_t> data_seed;
  std::string path;       // STPD or CSV training set
  std::string test_path;  // optional held-out set
  std::string idx_images, idx_labels, idx_test_images, idx_test_labels;
  int digit_a = 3;
  int digit_b = 6;
};

struct RunConfig {
  ModelSpec model{ModelKind::TwoLayerRelu, 0, 64, false};
  InitSpec init{0.01, InitScheme::LayerUniform, 0};
  std::optional<std::uint64_t> init_seed;
  LossSpec loss{};
  OptimizerSpec optimizer = OptimizerSpec::steepest(NormSpec::l2(), 6e-3, true);
  DataSource data;
  std::int64_t epochs = 20000;
  std::int64_t log_every = 20;
  std::vector<NormSpec> diagnostics_norms{NormSpec::l1(), NormSpec::l2(), NormSpec::linf(), NormSpec::spectral()};
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  bool strict = false;
  bool svg = true;
  double kkt_tolerance = 1e-2;
  // Sign-descent runs stop moving once log L drops below this.
  double stop_log_loss = -700.0;

  std::uint64_t effective_init_seed() const { return init_seed.value_or(derive_seed(seed, 1)); }
  std::uint64_t effective_teacher_seed() const { return data.teacher_seed.value_or(derive_seed(seed, 2)); }
  std::uint64_t effective_data_seed() const { return data.data_seed.value_or(derive_seed(seed, 3)); }
  std::uint64_t effective_test_seed() const { return derive_seed(effective_data_seed(), 4); }

  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 sm(seed ^ (0xa0761d6478bd642fULL * stream));
    return sm.next();
  }

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be positive");
    if (log_every < 1) throw ConfigError("log_every must be positive");
    if (log_every > epochs) throw ConfigError("log_every must not exceed epochs");
    if (diagnostics_norms.empty()) throw ConfigError("diagnostics_norms must be nonempty");
    if (!(init.scale > 0.0)) throw ConfigError("init_scale must be positive");
    if (model.kind == ModelKind::TwoLayerRelu && model.width < 1) throw ConfigError("width must be positive");
    optimizer.validate();
    if (data.kind == DataKind::Teacher) {
      data.teacher.validate();
      if (data.train_size < 1) throw ConfigError("train_size must be positive");
    }
    if (data.kind == DataKind::File && data.path.empty()) throw ConfigError("data = file needs data_path");
    if (data.kind == DataKind::Idx && (data.idx_images.empty() || data.idx_labels.empty()))
      throw ConfigError("data = idx needs idx_images and idx_labels");
  }
};

// Norm of the geometry an optimizer descends in: its own norm for steepest
// descent, l_inf for Adam (sign descent without momentum), spectral for Shampoo.
inline NormSpec algorithm_norm(const OptimizerSpec& spec) {
  switch (spec.kind) {
    case OptimizerKind::Steepest: return spec.norm;
    case OptimizerKind::Adam: return NormSpec::linf();
    case OptimizerKind::Shampoo: return NormSpec::spectral();
  }
  return NormSpec::l2();
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == sep && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

}  // namespace detail

// l1 | l2 | linf | spectral | modular(<norm>,<norm>,...)
inline NormSpec parse_norm(const std::string& text) {
  const std::string s = detail::lower(detail::trim(text));
  if (s == "l1") return NormSpec::l1();
  if (s == "l2") return NormSpec::l2();
  if (s == "linf") return NormSpec::linf();
  if (s == "spectral") return NormSpec::spectral();
  if (s.rfind("modular(", 0) == 0 && s.back() == ')') {
    std::vector<NormSpec> blocks;
    for (const auto& part : detail::split(s.substr(8, s.size() - 9), ',')) {
      NormSpec b = parse_norm(part);
      if (b.kind == NormKind::ModularMax) throw ConfigError("nested modular norm '" + text + "'");
      blocks.push_back(b);
    }
    if (blocks.empty()) throw ConfigError("empty modular norm");
    return NormSpec::modular(std::move(blocks));
  }
  throw ConfigError("unknown norm '" + text + "' (expected l1, l2, linf, spectral or modular(...))");
}

// Flat key = value file. '#' starts a comment; [section] lines are ignored;
// values may be double-quoted.
class KeyValues {
 public:
  static KeyValues parse(std::istream& in, const std::string& source) {
    KeyValues kv;
    kv.source_ = source;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = detail::trim(line);
      if (line.empty() || line.front() == '[') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
      const std::string key = detail::lower(detail::trim(line.substr(0, eq)));
      std::string value = detail::trim(line.substr(eq + 1));
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
      if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
      kv.values_[key] = value;
    }
    return kv;
  }

  static KeyValues load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse(in, path);
  }

  bool has(const std::string& k) const { return values_.count(k) != 0; }
  void set(const std::string& k, const std::string& v) { values_[k] = v; }

  std::optional<std::string> take(const std::string& k) {
    auto it = values_.find(k);
    if (it == values_.end()) return std::nullopt;
    std::string v = it->second;
    used_.push_back(k);
    return v;
  }

  // Keys never read by the caller; reported as errors to catch typos.
  std::vector<std::string> unused() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (std::find(used_.begin(), used_.end(), k) == used_.end()) out.push_back(k);
    return out;
  }

  const std::string& source() const { return source_; }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> used_;
  std::string source_;
};

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) throw ConfigError("key '" + key + "': '" + v + "' is not a number");
  return x;
}

inline std::int64_t to_int(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size()) throw ConfigError("key '" + key + "': '" + v + "' is not an integer");
  return x;
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || v[0] == '-' || end != v.c_str() + v.size())
    throw ConfigError("key '" + key + "': '" + v + "' is not an unsigned integer");
  return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  const std::string s = lower(v);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("key '" + key + "': '" + v + "' is not a boolean");
}

// gd | cd | sd name a steepest-descent geometry directly.
inline OptimizerSpec named_optimizer(const std::string& key, const std::string& name, double eta, bool normalized,
                                     KeyValues& kv) {
  const std::string n = lower(name);
  if (n == "gd") return OptimizerSpec::steepest(NormSpec::l2(), eta, normalized);
  if (n == "cd") return OptimizerSpec::steepest(NormSpec::l1(), eta, normalized);
  if (n == "sd") return OptimizerSpec::steepest(NormSpec::linf(), eta, normalized);
  if (n == "steepest") {
    const auto norm = kv.take("norm");
    if (!norm) throw ConfigError("optimizer = steepest needs a 'norm' key");
    return OptimizerSpec::steepest(parse_norm(*norm), eta, normalized);
  }
  if (n == "adam") {
    OptimizerSpec s = OptimizerSpec::adam(eta, 0.9, 0.999, 1e-8);
    if (auto v = kv.take("adam_beta1")) s.beta1 = to_double("adam_beta1", *v);
    if (auto v = kv.take("adam_beta2")) s.beta2 = to_double("adam_beta2", *v);
    if (auto v = kv.take("adam_eps")) s.adam_eps = to_double("adam_eps", *v);
    return s;
  }
  if (n == "shampoo") {
    OptimizerSpec s = OptimizerSpec::shampoo(eta);
    if (auto v = kv.take("shampoo_eps")) s.shampoo_eps = to_double("shampoo_eps", *v);
    return s;
  }
  throw ConfigError("key '" + key + "': unknown optimizer '" + name + "'");
}

}  // namespace detail

// Builds a RunConfig from parsed keys. Unknown keys are an error.
inline RunConfig config_from_keys(KeyValues kv) {
  using namespace detail;
  RunConfig c;
  if (auto v = kv.take("seed")) c.seed = to_u64("seed", *v);
  if (auto v = kv.take("model")) {
    const std::string m = lower(*v);
    if (m == "linear") c.model.kind = ModelKind::Linear;
    else if (m == "two_layer_relu") c.model.kind = ModelKind::TwoLayerRelu;
    else throw ConfigError("key 'model': unknown model '" + *v + "'");
  }
  if (auto v = kv.take("width")) c.model.width = to_int("width", *v);
  if (auto v = kv.take("freeze_second_layer")) c.model.freeze_second_layer = to_bool("freeze_second_layer", *v);
  if (auto v = kv.take("init_scale")) c.init.scale = to_double("init_scale", *v);
  if (auto v = kv.take("init_scheme")) {
    const std::string s = lower(*v);
    if (s == "layer_uniform") c.init.scheme = InitScheme::LayerUniform;
    else if (s == "coordinate_uniform") c.init.scheme = InitScheme::CoordinateUniform;
    else throw ConfigError("key 'init_scheme': unknown scheme '" + *v + "'");
  }
  if (auto v = kv.take("init_seed")) c.init_seed = to_u64("init_seed", *v);
  if (auto v = kv.take("loss")) {
    const std::string s = lower(*v);
    if (s == "exponential") c.loss.kind = LossKind::Exponential;
    else if (s == "logistic") c.loss.kind = LossKind::Logistic;
    else throw ConfigError("key 'loss': unknown loss '" + *v + "'");
  }
  double eta = c.optimizer.step_size;
  if (auto v = kv.take("learning_rate")) eta = to_double("learning_rate", *v);
  bool normalized = true;
  if (auto v = kv.take("normalized")) normalized = to_bool("normalized", *v);
  const std::string opt = kv.take("optimizer").value_or("gd");
  c.optimizer = named_optimizer("optimizer", opt, eta, normalized, kv);
  if (auto v = kv.take("switch_to")) {
    if (lower(*v) != "none") {
      bool sn = normalized;
      if (auto w = kv.take("switch_normalized")) sn = to_bool("switch_normalized", *w);
      double seta = eta;
      if (auto w = kv.take("switch_learning_rate")) seta = to_double("switch_learning_rate", *w);
      const std::string target = lower(*v);
      if (target != "gd" && target != "cd" && target != "sd") throw ConfigError("key 'switch_to': expected gd, cd, sd or none");
      c.optimizer.switch_rule = SwitchRule{std::make_shared<const OptimizerSpec>(named_optimizer("switch_to", target, seta, sn, kv))};
    }
  }

  if (auto v = kv.take("data")) {
    const std::string s = lower(*v);
    if (s == "teacher") c.data.kind = DataKind::Teacher;
    else if (s == "file") c.data.kind = DataKind::File;
    else if (s == "idx") c.data.kind = DataKind::Idx;
    else throw ConfigError("key 'data': unknown source '" + *v + "'");
  }
  if (auto v = kv.take("teacher_d")) c.data.teacher.d = to_int("teacher_d", *v);
  if (auto v = kv.take("teacher_k")) c.data.teacher.k = to_int("teacher_k", *v);
  if (auto v = kv.take("teacher_active")) c.data.teacher.active_per_neuron = to_int("teacher_active", *v);
  if (auto v = kv.take("teacher_weight_scale")) c.data.teacher.weight_scale = to_double("teacher_weight_scale", *v);
  if (auto v = kv.take("teacher_seed")) c.data.teacher_seed = to_u64("teacher_seed", *v);
  if (auto v = kv.take("train_size")) c.data.train_size = to_int("train_size", *v);
  if (auto v = kv.take("test_size")) c.data.test_size = to_int("test_size", *v);
  if (auto v = kv.take("data_seed")) c.data.data_seed = to_u64("data_seed", *v);
  if (auto v = kv.take("data_path")) c.data.path = *v;
  if (auto v = kv.take("test_path")) c.data.test_path = *v;
  if (auto v = kv.take("idx_images")) c.data.idx_images = *v;
  if (auto v = kv.take("idx_labels")) c.data.idx_labels = *v;
  if (auto v = kv.take("idx_test_images")) c.data.idx_test_images = *v;
  if (auto v = kv.take("idx_test_labels")) c.data.idx_test_labels = *v;
  if (auto v = kv.take("digit_a")) c.data.digit_a = static_cast<int>(to_int("digit_a", *v));
  if (auto v = kv.take("digit_b")) c.data.digit_b = static_cast<int>(to_int("digit_b", *v));

  if (auto v = kv.take("epochs")) c.epochs = to_int("epochs", *v);
  if (auto v = kv.take("log_every")) c.log_every = to_int("log_every", *v);
  else c.log_every = std::max<std::int64_t>(1, c.epochs / 1000);
  if (auto v = kv.take("diagnostics_norms")) {
    c.diagnostics_norms.clear();
    for (const auto& part : split(*v, ',')) c.diagnostics_norms.push_back(parse_norm(part));
  }
  if (auto v = kv.take("output_dir")) c.output_dir = *v;
  if (auto v = kv.take("strict")) c.strict = to_bool("strict", *v);
  if (auto v = kv.take("svg")) c.svg = to_bool("svg", *v);
  if (auto v = kv.take("kkt_tolerance")) c.kkt_tolerance = to_double("kkt_tolerance", *v);
  if (auto v = kv.take("stop_log_loss")) c.stop_log_loss = to_double("stop_log_loss", *v);

  const auto unused = kv.unused();
  if (!unused.empty()) {
    std::string msg = kv.source() + ": unknown key(s):";
    for (const auto& k : unused) msg += " " + k;
    throw ConfigError(msg);
  }
  if (const char* env = std::getenv("STEEPEST_OUTPUT_DIR"); env && *env) c.output_dir = env;
  c.validate();
  return c;
}

// Relative data paths in a config file are resolved against its directory.
inline void resolve_data_paths(RunConfig& c, const std::string& config_path) {
  const std::filesystem::path base = std::filesystem::path(config_path).parent_path();
  for (std::string* p : {&c.data.path, &c.data.test_path, &c.data.idx_images, &c.data.idx_labels,
                         &c.data.idx_test_images, &c.data.idx_test_labels})
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).string();
}

inline RunConfig load_config(const std::string& path) {
  RunConfig c = config_from_keys(KeyValues::load(path));
  resolve_data_paths(c, path);
  return c;
}

}  // namespace steepest
