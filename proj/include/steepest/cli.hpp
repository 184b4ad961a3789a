#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "steepest/checkpoint.hpp"
#include "steepest/config.hpp"
#include "steepest/data.hpp"
#include "steepest/diagnostics.hpp"
#include "steepest/oracle.hpp"
#include "steepest/report.hpp"
#include "steepest/training.hpp"

namespace steepest {

namespace detail {

inline nlohmann::json margin_json(const MarginReport& r) {
  nlohmann::json j;
  j["q_min"] = r.q_min;
  j["gamma_1"] = r.gamma_1;
  j["gamma_2"] = r.gamma_2;
  j["gamma_inf"] = r.gamma_inf;
  j["gamma_sigma"] = r.gamma_sigma ? nlohmann::json(*r.gamma_sigma) : nlohmann::json(nullptr);
  j["gamma_algo"] = r.gamma_algo;
  j["soft_margin"] = r.soft_margin;
  j["log_loss"] = r.log_loss;
  j["alignment"] = r.alignment;
  j["separated"] = r.separated;
  j["norm_l1"] = r.norm_l1;
  j["norm_l2"] = r.norm_l2;
  j["norm_linf"] = r.norm_linf;
  j["norm_spec"] = r.norm_spec;
  j["norm_algo"] = r.norm_algo;
  j["degree"] = r.degree;
  j["num_examples"] = r.num_examples;
  return j;
}

inline nlohmann::json kkt_json(const KktReport& k) {
  nlohmann::json j;
  j["eps"] = k.eps;
  j["delta"] = k.delta;
  j["bregman_gap"] = k.bregman_gap;
  j["bregman_bound"] = k.bregman_bound;
  j["delta_bound"] = k.delta_bound;
  j["alignment"] = k.alignment;
  j["q_min"] = k.q_min;
  j["lambda_representable"] = k.lambda_representable;
  j["log_lambda"] = std::vector<double>(k.log_lambda.data(), k.log_lambda.data() + k.log_lambda.size());
  return j;
}

inline Dataset load_any_dataset(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") return load_dataset_csv(path);
  return load_dataset(path);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (const auto& p : split(s, ','))
    if (!trim(p).empty()) out.push_back(trim(p));
  return out;
}

struct TrainOutcome {
  RunLog log;
  std::string dir;
};

inline TrainOutcome train_and_write(const RunConfig& config) {
  TrainOutcome o;
  o.dir = config.output_dir;
  std::filesystem::create_directories(o.dir);
  o.log = run_training(config);
  emit_csv(o.log, o.dir + "/run.csv");
  Checkpoint ck{o.log.model, o.log.final_theta, static_cast<std::uint64_t>(config.epochs), describe(config.optimizer)};
  save_checkpoint(ck, o.dir + "/final.ckpt");
  if (config.svg) {
    SvgOptions so;
    so.x_axis = AxisScale::Log;
    so.title = describe(config.optimizer);
    emit_svg(o.log, {"gamma_1", "gamma_2", "gamma_inf", "soft_margin"}, so, o.dir + "/margins.svg");
    so.x_axis = AxisScale::Linear;
    so.y_axis = AxisScale::Linear;
    emit_svg(o.log, {"log_loss"}, so, o.dir + "/loss.svg");
  }
  return o;
}

}  // namespace detail

// Entry point of the `steepest` tool. Returns the process exit code.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Steepest descent on homogeneous models: training, margins and KKT diagnostics"};
  app.name("steepest");
  app.require_subcommand(1);

  // generate-data
  auto* gen = app.add_subcommand("generate-data", "Sample a teacher-student dataset");
  TeacherSpec ts{16, 4, 3, 1.0, 0};
  Eigen::Index gen_m = 64;
  std::uint64_t gen_seed = 0;
  std::string gen_out, gen_csv;
  gen->add_option("--d", ts.d, "Input dimension")->check(CLI::PositiveNumber);
  gen->add_option("--k", ts.k, "Teacher width")->check(CLI::PositiveNumber);
  gen->add_option("--active", ts.active_per_neuron, "Nonzero input weights per teacher neuron");
  gen->add_option("--m", gen_m, "Number of examples")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "Seed for teacher and samples");
  gen->add_option("--out", gen_out, "Output dataset (STPD container)")->required();
  gen->add_option("--csv", gen_csv, "Also export as CSV");

  // train
  auto* train = app.add_subcommand("train", "Train from a config file");
  std::string train_config;
  bool train_strict = false;
  train->add_option("--config", train_config, "Config file (key = value)")->required();
  train->add_flag("--strict", train_strict, "Fail the run on any invariant violation");

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "Margin and KKT report for a checkpoint");
  std::string diag_ckpt, diag_data, diag_norm = "l2", diag_loss = "exponential";
  double diag_t0 = 0.0, diag_tol = 1e-2;
  diag->add_option("--checkpoint", diag_ckpt, "Checkpoint file")->required();
  diag->add_option("--data", diag_data, "Dataset (STPD or CSV)")->required();
  diag->add_option("--norm", diag_norm, "Algorithm norm");
  diag->add_option("--loss", diag_loss, "exponential | logistic");
  diag->add_option("--soft-margin-t0", diag_t0, "Soft margin at separation (defaults to the current one)");
  diag->add_option("--kkt-tolerance", diag_tol, "Subgradient activity tolerance");

  // oracle
  auto* orc = app.add_subcommand("oracle", "Grid-search max margin of a small linear instance");
  std::string orc_norm = "l2", orc_data;
  double orc_res = 1e-3;
  orc->add_option("--norm", orc_norm, "l1 | l2 | linf");
  orc->add_option("--data", orc_data, "Dataset (CSV or STPD), d <= 3")->required();
  orc->add_option("--resolution", orc_res, "Grid resolution")->check(CLI::PositiveNumber);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Seed x init-scale x optimizer grid over a base config");
  std::string sw_config, sw_seeds = "0,1,2", sw_alphas, sw_opts = "gd,cd,sd", sw_out;
  unsigned sw_threads = 1;
  sweep->add_option("--config", sw_config, "Base config file")->required();
  sweep->add_option("--seeds", sw_seeds, "Comma-separated seeds");
  sweep->add_option("--alphas", sw_alphas, "Comma-separated init scales (default: the config's)");
  sweep->add_option("--optimizers", sw_opts, "Comma-separated optimizers");
  sweep->add_option("--threads", sw_threads, "Concurrent runs")->check(CLI::PositiveNumber);
  sweep->add_option("--out", sw_out, "Summary CSV (default: <output_dir>/sweep.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*gen) {
      ts.seed = gen_seed;
      const ParamVector teacher = gen_teacher(ts);
      const Dataset ds = sample_dataset(ts, teacher, gen_m, RunConfig::derive_seed(gen_seed, 3));
      save_dataset(ds, gen_out);
      if (!gen_csv.empty()) export_dataset_csv(ds, gen_csv);
      out << "wrote " << ds.size() << " examples (d=" << ds.dim() << ") to " << gen_out << '\n';
      return 0;
    }
    if (*train) {
      RunConfig config = load_config(train_config);
      if (train_strict) config.strict = true;
      const auto o = detail::train_and_write(config);
      const RunRow& last = o.log.rows.back();
      out << "steps: " << config.epochs << "  final log-loss: " << format_double(last.log_loss)
          << "  train acc: " << last.train_acc << '\n';
      if (o.log.t0) out << "separated at step " << *o.log.t0 << '\n';
      else out << "not separated\n";
      for (const auto& v : o.log.violations) err << "violation: " << v << '\n';
      out << "wrote " << o.dir << "/run.csv and " << o.dir << "/final.ckpt\n";
      return 0;
    }
    if (*diag) {
      const Checkpoint ck = load_checkpoint(diag_ckpt);
      const Dataset ds = detail::load_any_dataset(diag_data);
      LossSpec loss;
      if (detail::lower(diag_loss) == "logistic") loss.kind = LossKind::Logistic;
      else if (detail::lower(diag_loss) != "exponential") throw ConfigError("unknown loss '" + diag_loss + "'");
      const NormSpec norm = parse_norm(diag_norm);
      const MarginReport mr = margin_report(ck.model, ck.theta, ds, loss, norm);
      nlohmann::json j;
      j["checkpoint"] = diag_ckpt;
      j["step"] = ck.step;
      j["norm"] = to_string(norm);
      j["margin"] = detail::margin_json(mr);
      if (mr.q_min > 0.0) {
        const double t0 = diag_t0 > 0.0 ? diag_t0 : mr.soft_margin;
        if (t0 > 0.0) j["kkt"] = detail::kkt_json(kkt_residuals(ck.model, ck.theta, ds, loss, norm, t0, KktOptions{diag_tol}));
      }
      out << j.dump(2) << '\n';
      return 0;
    }
    if (*orc) {
      const Dataset ds = detail::load_any_dataset(orc_data);
      const OracleResult r = grid_max_margin(parse_norm(orc_norm), ds, orc_res);
      out << "gamma_star=" << format_double(r.gamma_star) << '\n';
      out << "theta_star=";
      const Vector t = r.theta_star.flat();
      for (Eigen::Index i = 0; i < t.size(); ++i) out << (i ? "," : "") << format_double(t(i));
      out << '\n';
      return 0;
    }
    if (*sweep) {
      struct Job {
        std::uint64_t seed;
        std::string alpha, opt;
      };
      std::vector<Job> jobs;
      const RunConfig base = load_config(sw_config);
      std::vector<std::string> alphas = detail::split_list(sw_alphas);
      if (alphas.empty()) alphas.push_back(format_double(base.init.scale));
      for (const auto& s : detail::split_list(sw_seeds))
        for (const auto& a : alphas)
          for (const auto& o : detail::split_list(sw_opts)) jobs.push_back({detail::to_u64("seeds", s), a, o});
      if (jobs.empty()) throw ConfigError("empty sweep grid");

      std::vector<std::string> rows(jobs.size());
      std::vector<std::string> errors(jobs.size());
      auto run_job = [&](std::size_t i) {
        try {
          KeyValues kv = KeyValues::load(sw_config);
          kv.set("seed", std::to_string(jobs[i].seed));
          kv.set("init_scale", jobs[i].alpha);
          kv.set("optimizer", jobs[i].opt);
          RunConfig c = config_from_keys(kv);
          resolve_data_paths(c, sw_config);
          c.output_dir = base.output_dir + "/seed" + std::to_string(jobs[i].seed) + "_alpha" + jobs[i].alpha + "_" +
                         jobs[i].opt;
          c.svg = false;
          const auto o = detail::train_and_write(c);
          const RunRow& r = o.log.rows.back();
          rows[i] = std::to_string(jobs[i].seed) + "," + jobs[i].alpha + "," + jobs[i].opt + "," +
                    (o.log.t0 ? std::to_string(*o.log.t0) : std::string()) + "," + format_double(r.gamma_1) + "," +
                    format_double(r.gamma_2) + "," + format_double(r.gamma_inf) + "," +
                    format_double(r.soft_margin) + "," + format_double(r.train_acc) + "," +
                    (r.test_acc ? format_double(*r.test_acc) : std::string()) + "," +
                    std::to_string(o.log.violations.size());
        } catch (const std::exception& e) {
          errors[i] = e.what();
          rows[i] = std::to_string(jobs[i].seed) + "," + jobs[i].alpha + "," + jobs[i].opt + ",,,,,,,,";
        }
      };
      const std::size_t nthreads = std::min<std::size_t>(sw_threads, jobs.size());
      std::vector<std::thread> pool;
      std::size_t next = 0;
      std::mutex mu;
      for (std::size_t t = 0; t < nthreads; ++t)
        pool.emplace_back([&] {
          for (;;) {
            std::size_t i;
            {
              std::lock_guard<std::mutex> lock(mu);
              if (next >= jobs.size()) return;
              i = next++;
            }
            run_job(i);
          }
        });
      for (auto& th : pool) th.join();

      const std::string path = sw_out.empty() ? base.output_dir + "/sweep.csv" : sw_out;
      if (const auto parent = std::filesystem::path(path).parent_path(); !parent.empty())
        std::filesystem::create_directories(parent);
      std::ofstream f(path, std::ios::binary);
      if (!f) throw FormatError("cannot open '" + path + "' for writing");
      f << "seed,alpha,optimizer,t0,gamma_1,gamma_2,gamma_inf,soft_margin,train_acc,test_acc,violations\n";
      for (const auto& r : rows) f << r << '\n';
      int failed = 0;
      for (std::size_t i = 0; i < jobs.size(); ++i)
        if (!errors[i].empty()) {
          ++failed;
          err << "run seed=" << jobs[i].seed << " alpha=" << jobs[i].alpha << " optimizer=" << jobs[i].opt
              << " failed: " << errors[i] << '\n';
        }
      out << "wrote " << path << " (" << jobs.size() - failed << "/" << jobs.size() << " runs completed)\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace steepest
