#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "steepest/error.hpp"
#include "steepest/training.hpp"

namespace steepest {

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "step",      "log_loss", "train_acc",   "test_acc",      "q_min",   "gamma_1", "gamma_2",
      "gamma_inf", "gamma_sigma", "soft_margin", "alignment",  "kkt_eps", "kkt_delta", "bregman_gap",
      "bregman_bound", "norm_l1", "norm_l2",   "norm_linf",     "norm_spec", "t0_flag"};
  return cols;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string format_opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

inline std::optional<double> row_metric(const RunRow& r, const std::string& name) {
  if (name == "step") return static_cast<double>(r.step);
  if (name == "log_loss") return r.log_loss;
  if (name == "train_acc") return r.train_acc;
  if (name == "test_acc") return r.test_acc;
  if (name == "q_min") return r.q_min;
  if (name == "gamma_1") return r.gamma_1;
  if (name == "gamma_2") return r.gamma_2;
  if (name == "gamma_inf") return r.gamma_inf;
  if (name == "gamma_sigma") return r.gamma_sigma;
  if (name == "soft_margin") return r.soft_margin;
  if (name == "alignment") return r.alignment;
  if (name == "kkt_eps") return r.kkt_eps;
  if (name == "kkt_delta") return r.kkt_delta;
  if (name == "bregman_gap") return r.bregman_gap;
  if (name == "bregman_bound") return r.bregman_bound;
  if (name == "norm_l1") return r.norm_l1;
  if (name == "norm_l2") return r.norm_l2;
  if (name == "norm_linf") return r.norm_linf;
  if (name == "norm_spec") return r.norm_spec;
  if (name == "t0_flag") return r.t0_flag ? 1.0 : 0.0;
  throw ConfigError("unknown metric '" + name + "'");
}

}  // namespace detail

inline void write_csv(const RunLog& log, std::ostream& out) {
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const RunRow& r : log.rows) {
    out << r.step << ',' << format_double(r.log_loss) << ',' << format_double(r.train_acc) << ','
        << detail::format_opt(r.test_acc) << ',' << format_double(r.q_min) << ',' << format_double(r.gamma_1) << ','
        << format_double(r.gamma_2) << ',' << format_double(r.gamma_inf) << ',' << detail::format_opt(r.gamma_sigma)
        << ',' << format_double(r.soft_margin) << ',' << format_double(r.alignment) << ','
        << detail::format_opt(r.kkt_eps) << ',' << detail::format_opt(r.kkt_delta) << ','
        << detail::format_opt(r.bregman_gap) << ',' << detail::format_opt(r.bregman_bound) << ','
        << format_double(r.norm_l1) << ',' << format_double(r.norm_l2) << ',' << format_double(r.norm_linf) << ','
        << format_double(r.norm_spec) << ',' << (r.t0_flag ? 1 : 0) << '\n';
  }
}

inline void emit_csv(const RunLog& log, const std::string& path) {
  if (log.rows.empty()) throw ConfigError("cannot write an empty run log");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  write_csv(log, out);
  if (!out) throw FormatError("write failed for '" + path + "'");
}

enum class AxisScale { Linear, Log };

struct SvgOptions {
  AxisScale x_axis = AxisScale::Linear;
  AxisScale y_axis = AxisScale::Linear;
  int width = 800;
  int height = 480;
  std::string title;
};

// Renders one polyline per metric against step. On log axes, points with a
// nonpositive coordinate are dropped and a warning is returned for each
// affected metric.
inline std::vector<std::string> write_svg(const RunLog& log, const std::vector<std::string>& metrics,
                                          const SvgOptions& opt, std::ostream& out) {
  if (log.rows.empty()) throw ConfigError("cannot plot an empty run log");
  if (metrics.empty()) throw ConfigError("no metrics requested for plot");
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  std::vector<std::string> warnings;
  auto tx = [](AxisScale s, double v) { return s == AxisScale::Log ? std::log10(v) : v; };

  std::vector<std::vector<std::pair<double, double>>> series(metrics.size());
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (std::size_t k = 0; k < metrics.size(); ++k) {
    std::size_t skipped = 0;
    for (const RunRow& r : log.rows) {
      const auto v = detail::row_metric(r, metrics[k]);
      if (!v || !std::isfinite(*v)) continue;
      const double xs = static_cast<double>(r.step);
      if ((opt.x_axis == AxisScale::Log && xs <= 0.0) || (opt.y_axis == AxisScale::Log && *v <= 0.0)) {
        ++skipped;
        continue;
      }
      const double px = tx(opt.x_axis, xs), py = tx(opt.y_axis, *v);
      series[k].emplace_back(px, py);
      x0 = std::min(x0, px), x1 = std::max(x1, px), y0 = std::min(y0, py), y1 = std::max(y1, py);
    }
    if (skipped)
      warnings.push_back("metric " + metrics[k] + ": skipped " + std::to_string(skipped) +
                         " nonpositive point(s) on log axis");
  }
  if (!(x0 <= x1)) x0 = 0.0, x1 = 1.0;
  if (!(y0 <= y1)) y0 = 0.0, y1 = 1.0;
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;

  const double left = 70, right = 160, top = 30, bottom = 50;
  const double pw = opt.width - left - right, ph = opt.height - top - bottom;
  auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };
  auto label = [](AxisScale s, double v) { return format_double(s == AxisScale::Log ? std::pow(10.0, v) : v); };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
      << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opt.title.empty()) out << "<text x=\"" << left << "\" y=\"18\" font-size=\"14\">" << opt.title << "</text>\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  char buf[64];
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
    std::snprintf(buf, sizeof buf, "%.4g", std::stod(label(opt.x_axis, fx)));
    out << "<text x=\"" << sx(fx) << "\" y=\"" << top + ph + 18 << "\" font-size=\"10\" text-anchor=\"middle\">"
        << buf << "</text>\n";
    std::snprintf(buf, sizeof buf, "%.4g", std::stod(label(opt.y_axis, fy)));
    out << "<text x=\"" << left - 6 << "\" y=\"" << sy(fy) + 3 << "\" font-size=\"10\" text-anchor=\"end\">" << buf
        << "</text>\n";
  }
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << opt.height - 10
      << "\" font-size=\"12\" text-anchor=\"middle\">step" << (opt.x_axis == AxisScale::Log ? " (log)" : "")
      << "</text>\n";
  for (std::size_t k = 0; k < metrics.size(); ++k) {
    const char* color = palette[k % (sizeof palette / sizeof *palette)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t p = 0; p < series[k].size(); ++p) {
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", p ? " " : "", sx(series[k][p].first), sy(series[k][p].second));
      out << buf;
    }
    out << "\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    out << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 30 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << left + pw + 35 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << metrics[k]
        << "</text>\n";
  }
  out << "</svg>\n";
  return warnings;
}

inline std::vector<std::string> emit_svg(const RunLog& log, const std::vector<std::string>& metrics,
                                         const SvgOptions& opt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  auto warnings = write_svg(log, metrics, opt, out);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return warnings;
}

}  // namespace steepest
