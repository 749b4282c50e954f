// One line per acceptance criterion; exit status 0 iff every criterion passes.

#include "commands.hpp"
#include "oracles/finite_difference.hpp"
#include "parametrix/experiments.hpp"
#include "parametrix/frozen.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

using namespace parametrix;

namespace {

ModelSpec model(const std::string& family, double c = 0.5, double e = 0.0,
                const std::string& innovation = "gaussian") {
  ModelConfig cfg;
  cfg.family = family;
  cfg.c = c;
  cfg.e = e;
  cfg.innovation = innovation;
  return build_model(cfg);
}

struct Outcome {
  bool pass = false;
  std::string detail;
  std::vector<std::string> info;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double sup_gap(const GridField& a, const std::function<double(const Vector&)>& b) {
  double gap = 0.0;
  for (std::size_t i = 0; i < a.grid.size(); ++i) gap = std::max(gap, std::abs(a.values[i] - b(a.grid.point(i))));
  return gap;
}

Outcome constant_oracle() {
  const ModelSpec m = model("constant", 0.0);
  const auto disc = Discretization::from_horizon(16, 0.25);
  const Vector x = make_vector({0.0});
  const auto series = diffusion_density_field(m, 0.0, disc.T, x, TruncationPolicy{}, QuadratureSpec::defaults(1));
  const auto chain = chain_density(m, disc, 0, disc.n, x, chain_grid(m, disc, x, disc.n));
  const auto frozen = [&](const Vector& y) { return frozen_density(m, 0.0, disc.T, x, y); };
  const auto chain_at = [&](const Vector& y) { return chain.field.interpolate(y); };
  const double sc = sup_gap(series.density, chain_at);
  const double sf = sup_gap(series.density, frozen);
  double cf = 0.0;
  for (std::size_t i = 0; i < series.density.grid.size(); ++i) {
    const Vector y = series.density.grid.point(i);
    cf = std::max(cf, std::abs(chain_at(y) - frozen(y)));
  }
  const double worst = std::max({sc, sf, cf});
  return {worst <= 1e-6, fmt("sup |series-chain| %.2e, |series-frozen| %.2e, |chain-frozen| %.2e (tol 1e-6)", sc, sf, cf)};
}

Outcome discrete_identity() {
  const ModelSpec m = model("sin1d");
  const Vector x = make_vector({0.0});
  Outcome out{true, ""};
  for (int n : {4, 8}) {
    const auto disc = Discretization::from_horizon(n, 0.25);
    const Grid grid = evaluation_grid(m, 0.0, disc.T, x, x, QuadratureSpec::defaults(1));
    const auto series = discrete_parametrix_field(m, disc, 0, n, x, n, grid);
    const auto chain = chain_density(m, disc, 0, n, x, chain_grid(m, disc, x, n));
    const double gap = sup_gap(series.density, [&](const Vector& y) { return chain.field.interpolate(y); });
    out.pass = out.pass && gap <= 5e-5;
    out.detail += fmt("%sn=%d sup %.2e", n == 4 ? "" : ", ", n, gap);
  }
  out.detail += " (tol 5e-5, T=0.25, R=n)";
  return out;
}

std::string rate_line(const RateStudy& s) {
  std::string line = fmt("slope %.3f (r2 %.3f); sqrt(n) err:", s.report.slope, s.report.r_squared);
  for (const auto& p : s.report.points) line += fmt(" %.4f", std::sqrt(static_cast<double>(p.n)) * p.weighted_error);
  return line;
}

Outcome theorem_rate() {
  RateStudyConfig cfg;  // n in {8,16,32,64}, T = n^{-1/3}, 41 y in +-6 sqrt(T)
  const auto skewed = run_rate_study(model("sin1d", 0.5, 0.0, "skewed"), cfg);
  const auto gaussian = run_rate_study(model("sin1d"), cfg);
  bool converged = true, boundary = false;
  for (const auto& s : skewed.samples) {
    converged = converged && s.converged;
    boundary = boundary || s.on_boundary;
  }
  const double slope = skewed.report.slope;
  const bool stable = sqrt_n_scaled_stable(skewed.report, 0.15);
  Outcome out{converged && slope >= -0.8 && slope <= -0.3 && stable,
              "skewed innovations: " + rate_line(skewed) + (stable ? ", non-increasing within 15%" : ", growing") +
                  (boundary ? "; argmax on window boundary" : "")};
  out.info.push_back("gaussian innovations (information): " + rate_line(gaussian) +
                     "; faster than n^{-1/2} because the increments have zero third moment");
  return out;
}

Outcome gamma_envelope() {
  const auto s = run_envelope_study(model("sin1d"), 0.0, 0.25, make_vector({0.0}), 4, QuadratureSpec::defaults(1));
  std::string norms;
  for (std::size_t r = 0; r < 5; ++r) norms += fmt(" %.2e", s.term_norms[r]);
  const bool ok = std::isfinite(s.fit.C1) && s.fit.C > 0.0 && s.worst_ratio <= 1.0 + 1e-9;
  return {ok, fmt("fitted (C, C1) = (%.4f, %.4f), worst pointwise ratio %.6f; a_r:", s.fit.C, s.fit.C1, s.worst_ratio) + norms};
}

std::string gap_line(const FrozenGapStudy& s) {
  std::string line;
  for (const auto& p : s.points) line += fmt(" n=%d C=%.3e", p.n, p.constant);
  return line + fmt("; trend %.3f", s.trend);
}

Outcome frozen_gap() {
  const Vector x = make_vector({0.0});
  const std::vector<int> ns{8, 16, 32};
  const auto modulated = run_frozen_gap_study(model("sin1d", 0.5, 0.25), ns, 0.25, x);
  const auto homogeneous = run_frozen_gap_study(model("sin1d"), ns, 0.25, x);
  const auto skewed = run_frozen_gap_study(model("sin1d", 0.5, 0.0, "skewed"), ns, 0.25, x);
  Outcome out{modulated.trend <= 0.1 && homogeneous.trend <= 0.1,
              "time-modulated sin1d:" + gap_line(modulated) + " | time-homogeneous sin1d:" + gap_line(homogeneous)};
  out.info.push_back("skewed innovations (information):" + gap_line(skewed) +
                     "; constants rise towards a finite limit as the step count grows");
  return out;
}

Outcome correction_residual() {
  CorrectionStudyConfig cfg;  // n in {8,16,32}, T = n^{-1/3}, x = y = 0, R_phi = 4
  const auto study = run_correction_study(model("sin1d", 0.5, 0.25), cfg);
  std::string line = "residual/h:";
  bool converged = true;
  for (const auto& r : study.reports) {
    line += fmt(" n=%d %.4e", r.n, r.residual_over_h());
    converged = converged && r.converged;
  }
  line += study.decreasing ? "; |residual|/h strictly decreasing" : "; |residual|/h not decreasing";
  return {converged && study.decreasing, line};
}

bool same_bytes(const std::filesystem::path& a, const std::filesystem::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  return !sa.str().empty() && sa.str() == sb.str();
}

Outcome hygiene() {
  Outcome out{true, ""};
  auto record = [&](bool ok, const std::string& what) {
    out.pass = out.pass && ok;
    out.detail += (out.detail.empty() ? "" : "; ") + what + (ok ? " ok" : " FAILED");
  };

  // Frozen-density derivatives against fourth-order differences (step 1e-3).
  const ModelSpec s = model("sin1d", 0.5, 0.25);
  double fd_worst = 0.0;
  for (auto [x0, y0, t] : {std::tuple{0.2, 0.5, 0.1}, std::tuple{-0.4, 0.1, 0.25}, std::tuple{1.0, 0.7, 0.5}}) {
    const Vector x = make_vector({x0}), y = make_vector({y0});
    for (int k = 1; k <= 3; ++k) {
      MultiIndex nu = MultiIndex::zero(1), lower = MultiIndex::zero(1);
      nu[0] = k;
      lower[0] = k - 1;
      const double analytic = frozen_density_derivative(s, 0.0, t, x, y, nu);
      const double fd = oracle::central4(
          [&](const Vector& z) { return frozen_density_derivative(s, 0.0, t, z, y, lower); }, x, 0, 1e-3);
      fd_worst = std::max(fd_worst, std::abs(analytic - fd) / std::max(std::abs(analytic), 1e-3));
    }
  }
  record(fd_worst <= 1e-5, fmt("derivatives vs finite differences (rel %.1e)", fd_worst));

  // Chain Chapman-Kolmogorov through the middle step.
  {
    const auto disc = Discretization::from_horizon(8, 0.25);
    const Vector x = make_vector({0.0});
    const Grid grid = chain_grid(s, disc, x, 8);
    const auto full = chain_density(s, disc, 0, 8, x, grid);
    const auto half = chain_density(s, disc, 0, 4, x, grid);
    const auto w = grid.trapezoid_weights();
    std::vector<double> composed(grid.size(), 0.0);
    for (std::size_t a = 0; a < grid.size(); ++a) {
      if (half.field.values[a] < 1e-14) continue;
      const auto second = chain_density(s, disc, 4, 8, grid.point(a), grid);
      for (std::size_t b = 0; b < grid.size(); ++b) composed[b] += w[a] * half.field.values[a] * second.field.values[b];
    }
    double gap = 0.0;
    for (std::size_t b = 0; b < grid.size(); ++b) gap = std::max(gap, std::abs(composed[b] - full.field.values[b]));
    record(gap <= 1e-4, fmt("chain Chapman-Kolmogorov (%.1e)", gap));
    double mass = 0.0;
    for (int k : {1, 4, 8}) mass = std::max(mass, std::abs(chain_density(s, disc, 0, k, x, grid).mass() - 1.0));
    record(mass <= 5e-3, fmt("chain mass (%.1e)", mass));
  }

  // Series Chapman-Kolmogorov at the mode, time-homogeneous model.
  {
    const ModelSpec h = model("sin1d");
    QuadratureSpec q;
    q.time_nodes = 16;
    q.points_per_axis = 129;
    const Vector x = make_vector({0.0});
    const auto direct = diffusion_density_field(h, 0.0, 0.25, x, TruncationPolicy{}, q);
    std::size_t mode = 0;
    for (std::size_t b = 0; b < direct.density.values.size(); ++b)
      if (direct.density.values[b] > direct.density.values[mode]) mode = b;
    const Vector y = direct.density.grid.point(mode);
    const auto first = diffusion_density_field(h, 0.0, 0.125, x, TruncationPolicy{}, q);
    const auto w = first.density.grid.trapezoid_weights();
    double total = 0.0;
    for (std::size_t b = 0; b < first.density.grid.size(); ++b) {
      if (first.density.values[b] < 1e-12) continue;
      total += w[b] * first.density.values[b] *
               diffusion_density(h, 0.0, 0.125, first.density.grid.point(b), y, TruncationPolicy{}, q).value;
    }
    const double rel = std::abs(total - direct.density.values[mode]) / direct.density.values[mode];
    record(rel <= 5e-3, fmt("series Chapman-Kolmogorov (rel %.1e)", rel));
    const double mass = std::abs(direct.density.integral() - 1.0);
    record(mass <= 5e-3, fmt("series mass (%.1e)", mass));
  }

  // Byte-identical CLI outputs for identical configurations.
  {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "parametrix_acceptance";
    fs::remove_all(root);
    const auto config = cli::parse_config(
        R"({"model":{"family":"sin1d","c":0.5},"density":{"t":0.25,"n":16},"rate":{"self_test":true}})");
    std::ostringstream log;
    bool ok = true;
    for (const char* run : {"a", "b"}) {
      fs::create_directories(root / run);
      ok = ok && cli::cmd_density(config, (root / run).string(), log) == 0;
      ok = ok && cli::cmd_rate(config, (root / run).string(), log) == 0;
    }
    for (const char* f : {"density.csv", "rate.csv", "rate_summary.json"}) ok = ok && same_bytes(root / "a" / f, root / "b" / f);
    fs::remove_all(root);
    record(ok, "CLI determinism");
  }
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"constant-coefficient oracle", constant_oracle},
      {"discrete parametrix identity", discrete_identity},
      {"weighted error rate", theorem_rate},
      {"Gamma envelope of the series terms", gamma_envelope},
      {"frozen chain vs frozen diffusion constants", frozen_gap},
      {"first-order correction residual", correction_residual},
      {"numerical hygiene", hygiene}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %zu [%s]: %s (%.1f s) %s\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL", secs,
                o.detail.c_str());
    for (const auto& line : o.info) std::printf("    %s\n", line.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
