#include "commands.hpp"

#include "parametrix/frozen.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef PARAMETRIX_VERSION
#define PARAMETRIX_VERSION "0.0.0"
#endif

namespace parametrix::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

std::string coordinate_header(int d) {
  if (d == 1) return "y";
  std::string out;
  for (int i = 1; i <= d; ++i) out += (i > 1 ? ",y" : "y") + std::to_string(i);
  return out;
}

std::string coordinates(const Vector& y) {
  std::string out;
  for (Eigen::Index i = 0; i < y.size(); ++i) out += (i ? "," : "") + num(y(i));
  return out;
}

ModelSpec model_of(const ExperimentConfig& config) {
  try {
    return build_model(config.model);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

fs::path require_dir(const std::string& out_dir) {
  if (out_dir.empty() || !fs::is_directory(out_dir))
    throw ConfigError("output directory '" + out_dir + "' does not exist");
  return fs::path(out_dir);
}

class Writer {
 public:
  Writer(const ExperimentConfig& config, std::string command, fs::path dir)
      : dir_(std::move(dir)), start_(Clock::now()) {
    manifest_.command = std::move(command);
    manifest_.config_hash = config_hash(config);
    manifest_.tool_version = PARAMETRIX_VERSION;
  }

  void file(const std::string& name, const std::string& body, Clock::time_point started) {
    const fs::path path = dir_ / name;
    std::ofstream(path, std::ios::binary) << body;
    manifest_.files.push_back({path.string(), seconds_since(started)});
  }

  void flag(const std::string& name, bool value) { manifest_.flags.emplace_back(name, value); }

  /// Writes manifest.json after checking that every listed file is non-empty.
  void finish() {
    manifest_.total_seconds = seconds_since(start_);
    json j;
    j["command"] = manifest_.command;
    j["config_hash"] = manifest_.config_hash;
    j["tool_version"] = manifest_.tool_version;
    j["created_unix"] = static_cast<long long>(std::time(nullptr));
    j["total_seconds"] = manifest_.total_seconds;
    j["files"] = json::array();
    for (const auto& f : manifest_.files) {
      if (!fs::exists(f.path) || fs::file_size(f.path) == 0)
        throw std::runtime_error("produced file '" + f.path + "' is missing or empty");
      j["files"].push_back({{"path", f.path}, {"seconds", f.seconds}});
    }
    j["flags"] = json::object();
    for (const auto& [name, value] : manifest_.flags) j["flags"][name] = value;
    std::ofstream(dir_ / "manifest.json") << j.dump(2) << "\n";
  }

 private:
  fs::path dir_;
  Clock::time_point start_;
  RunManifest manifest_;
};

std::string rate_gnuplot() {
  return "set datafile separator ','\n"
         "set logscale xy\n"
         "set key top right\n"
         "set xlabel 'n'\n"
         "set ylabel 'weighted sup error'\n"
         "stats 'rate.csv' using 1:5 skip 1 every ::0::0 nooutput\n"
         "n0 = STATS_min_x\n"
         "e0 = STATS_min_y\n"
         "plot 'rate.csv' using 1:5 skip 1 with linespoints title 'weighted error', \\\n"
         "     e0 * sqrt(n0 / x) dashtype 2 title 'n^{-1/2}'\n";
}

std::string correction_gnuplot() {
  return "set datafile separator ','\n"
         "set logscale x\n"
         "set xlabel 'n'\n"
         "set ylabel 'residual / h'\n"
         "plot 'correction.csv' using 1:12 skip 1 with linespoints title 'residual/h'\n";
}

}  // namespace

int cmd_validate(const ExperimentConfig& config, std::ostream& log) {
  const ModelSpec model = model_of(config);
  const auto sample = AssumptionSample::default_for(model.coefficients.dim);
  const auto report = validate_assumptions(model, sample, default_check_tolerance(model));
  log << "model " << model.name << " on " << report.sample_description << "\n";
  for (const auto& c : report.checks) {
    log << (c.pass ? "PASS " : "FAIL ") << c.id << " max_violation=" << num(c.max_violation);
    if (!c.note.empty()) log << " (" << c.note << ")";
    log << "\n";
  }
  return report.all_pass() ? kPass : kNumericalFail;
}

int cmd_density(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log) {
  const fs::path dir = require_dir(out_dir);
  const ModelSpec model = model_of(config);
  const auto& opt = config.density;
  const Discretization disc = Discretization::from_horizon(opt.n, opt.t);
  const double j_real = opt.s / disc.h;
  const int j = static_cast<int>(std::lround(j_real));
  if (std::abs(j_real - j) > 1e-9 || j >= opt.n) throw ConfigError("density.s must be a mesh point below t");

  Writer writer(config, "density", dir);
  const auto started = Clock::now();
  const auto series = diffusion_density_field(model, opt.s, opt.t, config.x, config.policy, config.quad);
  const auto chain = chain_density(model, disc, j, opt.n, config.x, chain_grid(model, disc, config.x, opt.n - j));
  const int d = model.coefficients.dim;
  const double delta = std::sqrt(opt.t - opt.s);
  const char* status = series.converged ? "ok" : "not_converged";

  std::ostringstream csv;
  csv << coordinate_header(d) << ",p_series,p_chain,p_frozen,weighted_gap,status\n";
  double max_gap = 0.0;
  for (std::size_t b = 0; b < series.density.grid.size(); ++b) {
    const Vector y = series.density.grid.point(b);
    const double ps = series.density.values[b];
    const double pc = chain.field.interpolate(y);
    const double gap = weight_Q(delta, y - config.x, model.innovations.s_prime, d) * std::abs(pc - ps);
    max_gap = std::max(max_gap, gap);
    csv << coordinates(y) << "," << num(ps) << "," << num(pc) << ","
        << num(frozen_density(model, opt.s, opt.t, config.x, y)) << "," << num(gap) << "," << status << "\n";
  }
  writer.file("density.csv", csv.str(), started);
  log << "series mass " << num(series.density.integral()) << ", chain mass " << num(chain.mass())
      << ", max weighted gap " << num(max_gap) << ", orders " << series.orders_used << "\n";
  writer.flag("converged", series.converged);
  writer.finish();
  return series.converged ? kPass : kNumericalFail;
}

int cmd_chain_density(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log) {
  const fs::path dir = require_dir(out_dir);
  const ModelSpec model = model_of(config);
  const auto& opt = config.density;
  const Discretization disc = Discretization::from_horizon(opt.n, opt.t);
  const int j = static_cast<int>(std::lround(opt.s / disc.h));
  if (std::abs(opt.s / disc.h - j) > 1e-9 || j >= opt.n) throw ConfigError("density.s must be a mesh point below t");

  Writer writer(config, "chain-density", dir);
  const auto started = Clock::now();
  const auto chain = chain_density(model, disc, j, opt.n, config.x, chain_grid(model, disc, config.x, opt.n - j));
  std::ostringstream csv;
  csv << coordinate_header(model.coefficients.dim) << ",p_chain\n";
  for (std::size_t b = 0; b < chain.field.grid.size(); ++b)
    csv << coordinates(chain.field.grid.point(b)) << "," << num(chain.field.values[b]) << "\n";
  writer.file("chain_density.csv", csv.str(), started);
  log << "chain mass " << num(chain.mass()) << " on " << chain.field.grid.size() << " nodes\n";
  writer.finish();
  return kPass;
}

int cmd_rate(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log) {
  if (config.n_list.size() < 3) throw ConfigError("rate: n_list needs at least 3 entries");
  const fs::path dir = require_dir(out_dir);
  const ModelSpec model = model_of(config);
  Writer writer(config, "rate", dir);
  const auto started = Clock::now();

  RateStudy study;
  if (config.rate.self_test) {
    std::vector<RatePoint> points;
    for (int n : config.n_list) {
      const Discretization disc = config.regime.discretization(n);
      const double e = config.rate.self_test_constant / std::sqrt(static_cast<double>(n));
      points.push_back({n, disc.h, disc.T, e, e});
    }
    study.report = fit_rate(points);
  } else {
    RateStudyConfig rc;
    rc.n_list = config.n_list;
    rc.regime = config.regime;
    rc.x = config.x;
    rc.y_points = config.rate.y_points;
    rc.window = config.rate.window;
    rc.policy = config.policy;
    rc.quad = config.quad;
    study = run_rate_study(model, rc);
  }

  std::ostringstream csv;
  write_rate_csv(csv, study.report);
  writer.file("rate.csv", csv.str(), started);
  if (!study.samples.empty()) {
    std::ostringstream profile;
    profile << "n,y,p_chain,p_series,weighted_gap\n";
    for (const auto& s : study.samples)
      for (std::size_t i = 0; i < s.y.size(); ++i)
        profile << s.point.n << "," << num(s.y[i]) << "," << num(s.p_chain[i]) << "," << num(s.p_series[i])
                << "," << num(s.weighted_gap[i]) << "\n";
    writer.file("rate_profile.csv", profile.str(), started);
  }

  bool converged = true;
  for (const auto& s : study.samples) {
    log << "n=" << s.point.n << " T=" << num(s.point.T) << " weighted_error=" << num(s.point.weighted_error)
        << " chain_mass=" << num(s.chain_mass) << (s.on_boundary ? " (argmax on window boundary)" : "") << "\n";
    if (!s.converged) {
      log << "series did not converge for n=" << s.point.n << "\n";
      converged = false;
    }
  }
  const auto& r = study.report;
  const bool in_band = r.slope >= config.rate.band[0] && r.slope <= config.rate.band[1];
  const bool stable = sqrt_n_scaled_stable(r, config.rate.sqrt_n_tolerance);
  const bool pass = converged && in_band;
  json summary = {{"slope", r.slope},
                  {"intercept", r.intercept},
                  {"r2", r.r_squared},
                  {"band", {config.rate.band[0], config.rate.band[1]}},
                  {"pass", pass}};
  writer.file("rate_summary.json", summary.dump(2) + "\n", started);
  writer.file("rate.gp", rate_gnuplot(), started);
  log << "slope " << num(r.slope) << " r2 " << num(r.r_squared) << (in_band ? " in band" : " outside band")
      << "; sqrt(n) error " << (stable ? "stable" : "growing") << "\n";
  writer.flag("in_band", in_band);
  writer.flag("sqrt_n_stable", stable);
  writer.flag("converged", converged);
  writer.finish();
  return pass ? kPass : kNumericalFail;
}

int cmd_correct(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log) {
  if (config.n_list.size() < 3) throw ConfigError("correct: n_list needs at least 3 entries");
  const fs::path dir = require_dir(out_dir);
  const ModelSpec model = model_of(config);
  Writer writer(config, "correct", dir);
  const auto started = Clock::now();

  CorrectionStudyConfig cc;
  cc.n_list = config.n_list;
  cc.regime = config.regime;
  cc.x = config.x;
  cc.y = config.y;
  cc.R_phi = config.correct.R_phi;
  cc.quad = config.quad;
  const auto study = run_correction_study(model, cc);

  std::ostringstream csv;
  csv << "n,h,T,p,pd,p_minus_pd,C_H1,C_A0,D_H1,D_A0,residual,residual_over_h\n";
  bool converged = true;
  for (const auto& r : study.reports) {
    csv << r.n << "," << num(r.h) << "," << num(r.T) << "," << num(r.p) << "," << num(r.pd) << ","
        << num(r.p_minus_pd);
    for (double t : r.terms) csv << "," << num(t);
    csv << "," << num(r.residual) << "," << num(r.residual_over_h()) << "\n";
    log << "n=" << r.n << " p-pd=" << num(r.p_minus_pd) << " residual/h=" << num(r.residual_over_h()) << "\n";
    if (!r.converged) {
      log << "series did not converge for n=" << r.n << "\n";
      converged = false;
    }
  }
  writer.file("correction.csv", csv.str(), started);
  const bool pass = converged && study.decreasing;
  json summary = {{"decreasing", study.decreasing}, {"converged", converged}, {"pass", pass}};
  writer.file("correction_summary.json", summary.dump(2) + "\n", started);
  writer.file("correction.gp", correction_gnuplot(), started);
  writer.flag("decreasing", study.decreasing);
  writer.flag("converged", converged);
  writer.finish();
  log << "|residual|/h " << (study.decreasing ? "decreasing" : "not decreasing") << "\n";
  return pass ? kPass : kNumericalFail;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Parametrix transition densities and Euler-chain convergence experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PARAMETRIX_VERSION);
  std::string config_path, out_dir;
  auto add = [&](const char* name, const char* help, bool needs_out) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON experiment configuration")->required();
    auto* o = sub->add_option("--out", out_dir, "Existing output directory");
    if (needs_out) o->required();
    return sub;
  };
  auto* validate = add("validate", "Check model assumptions", false);
  auto* density = add("density", "Series, chain and frozen densities on a grid", true);
  auto* chain = add("chain-density", "Chain transition density on its grid", true);
  auto* rate = add("rate", "Weighted error rate study", true);
  auto* correct = add("correct", "First-order correction study", true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsageError;
  }

  try {
    const ExperimentConfig config = load_config(config_path);
    if (validate->parsed()) return cmd_validate(config, out);
    if (density->parsed()) return cmd_density(config, out_dir, out);
    if (chain->parsed()) return cmd_chain_density(config, out_dir, out);
    if (rate->parsed()) return cmd_rate(config, out_dir, out);
    if (correct->parsed()) return cmd_correct(config, out_dir, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFail;
  }
  return kUsageError;
}

}  // namespace parametrix::cli
