#include "parametrix/experiments.hpp"

#include "parametrix/frozen.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace parametrix {

void Regime::validate() const {
  if (law == HorizonLaw::shrinking_T && !(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("regime: gamma must lie in (0, 1)");
  if (law == HorizonLaw::fixed_T && !(T > 0.0 && T <= 1.0))
    throw std::invalid_argument("regime: T must lie in (0, 1]");
}

double Regime::horizon(int n) const {
  if (n < 2) throw std::invalid_argument("regime: n must be >= 2");
  return law == HorizonLaw::fixed_T ? T : std::pow(static_cast<double>(n), -gamma);
}

Discretization Regime::discretization(int n) const {
  validate();
  return Discretization::from_horizon(n, horizon(n));
}

std::vector<EvalPair> window_pairs(const Vector& x, double rho, double window, int points) {
  if (points < 2) throw std::invalid_argument("window_pairs: need at least two points");
  std::vector<EvalPair> pairs;
  pairs.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double offset = rho * window * (2.0 * i / (points - 1) - 1.0);
    pairs.push_back({x, x + offset * Vector::Unit(x.size(), 0)});
  }
  return pairs;
}

RateStudy run_rate_study(const ModelSpec& model, const RateStudyConfig& config) {
  if (config.n_list.size() < 3) throw std::invalid_argument("rate study: need at least 3 values of n");
  const int d = model.coefficients.dim;
  const int s_prime = model.innovations.s_prime;
  RateStudy study;
  for (int n : config.n_list) {
    const Discretization disc = config.regime.discretization(n);
    const double delta = std::sqrt(disc.T);
    const auto chain = chain_density(model, disc, 0, n, config.x, chain_grid(model, disc, config.x, n));
    const auto series = diffusion_density_field(model, 0.0, disc.T, config.x, config.policy, config.quad);
    const auto pairs = window_pairs(config.x, delta, config.window, config.y_points);

    RateSample sample;
    sample.converged = series.converged;
    sample.chain_mass = chain.mass();
    for (const auto& pair : pairs) {
      sample.y.push_back(pair.y(0));
      sample.p_chain.push_back(chain.field.interpolate(pair.y));
      sample.p_series.push_back(series.density.interpolate(pair.y));
      sample.weighted_gap.push_back(weight_Q(delta, pair.y - pair.x, s_prime, d) *
                                    std::abs(sample.p_chain.back() - sample.p_series.back()));
    }
    const auto err = weighted_sup_error(sample.p_chain, sample.p_series, delta, pairs, s_prime, d);
    sample.on_boundary = err.on_boundary;
    sample.point = RatePoint{n, disc.h, disc.T, err.unweighted, err.value};
    study.samples.push_back(std::move(sample));
  }
  std::vector<RatePoint> points;
  for (const auto& s : study.samples) points.push_back(s.point);
  study.report = fit_rate(points);
  return study;
}

bool sqrt_n_scaled_stable(const RateReport& report, double tolerance) {
  for (std::size_t i = 1; i < report.points.size(); ++i) {
    const auto& a = report.points[i - 1];
    const auto& b = report.points[i];
    const double prev = std::sqrt(static_cast<double>(a.n)) * a.weighted_error;
    const double next = std::sqrt(static_cast<double>(b.n)) * b.weighted_error;
    if (next > (1.0 + tolerance) * prev) return false;
  }
  return true;
}

EnvelopeStudy run_envelope_study(const ModelSpec& model, double s, double t, const Vector& x,
                                 int max_order, const QuadratureSpec& quad) {
  TruncationPolicy policy;
  policy.max_order_R = max_order;
  policy.term_norm_threshold = 1e-300;
  const auto series = diffusion_density_field(model, s, t, x, policy, quad);
  EnvelopeStudy out;
  out.rho = std::sqrt(t - s);
  out.term_norms = series.term_norms;
  std::vector<GridField> terms(series.terms.begin(), series.terms.begin() + max_order + 1);
  out.fit = fit_gamma_envelope(terms, x, out.rho);
  const int d = model.coefficients.dim;
  const auto phi = make_envelope(EnvelopeKind::phi, d, out.rho, out.fit.C);
  for (int r = 0; r <= max_order; ++r) {
    const auto& f = terms[static_cast<std::size_t>(r)];
    double sup = 0.0;
    for (double v : f.values) sup = std::max(sup, std::abs(v));
    if (sup == 0.0) continue;
    const double scale = std::pow(out.fit.C1, r + 1) * std::pow(out.rho, r) / std::tgamma(1.0 + 0.5 * r);
    for (std::size_t b = 0; b < f.grid.size(); ++b) {
      if (std::abs(f.values[b]) < 1e-10 * sup) continue;
      const double bound = scale * envelope(phi, f.grid.point(b) - x);
      out.worst_ratio = std::max(out.worst_ratio, std::abs(f.values[b]) / bound);
    }
  }
  return out;
}

FrozenGapStudy run_frozen_gap_study(const ModelSpec& model, const std::vector<int>& n_list,
                                    double T, const Vector& x, int y_points, double window) {
  if (n_list.size() < 2) throw std::invalid_argument("frozen gap study: need at least 2 values of n");
  const int d = model.coefficients.dim;
  const int s_prime = model.innovations.s_prime;
  FrozenGapStudy study;
  std::vector<double> log_n, constants;
  for (int n : n_list) {
    const Discretization disc = Discretization::from_horizon(n, T);
    const std::set<int> offsets{1, 2, std::max(1, n / 2), n};
    FrozenGapPoint point{n, disc.h, 0.0, 0.0};
    std::vector<std::pair<double, double>> samples;
    for (int steps : offsets) {
      const double rho = std::sqrt(steps * disc.h);
      const auto zeta = make_envelope(EnvelopeKind::zeta, d, rho, 1.0, 2 * d * s_prime + 4, s_prime);
      for (const auto& pair : window_pairs(x, rho, window, y_points)) {
        const double gap = frozen_chain_density(model, disc, 0, steps, pair.x, pair.y) -
                           frozen_density(model, 0.0, disc.time(steps), pair.x, pair.y);
        point.max_gap = std::max(point.max_gap, std::abs(gap));
        samples.emplace_back(gap, std::sqrt(disc.h) / rho * envelope(zeta, pair.y - pair.x));
      }
    }
    point.constant = fit_envelope_constant(samples);
    log_n.push_back(std::log(static_cast<double>(n)));
    constants.push_back(point.constant);
    study.points.push_back(point);
  }
  study.trend = least_squares(log_n, constants).slope;
  return study;
}

CorrectionStudy run_correction_study(const ModelSpec& model, const CorrectionStudyConfig& config) {
  if (config.n_list.size() < 3) throw std::invalid_argument("correction study: need at least 3 values of n");
  CorrectionStudy study;
  for (int n : config.n_list)
    study.reports.push_back(
        correction_terms(model, config.regime.discretization(n), config.x, config.y, config.R_phi, config.quad));
  study.decreasing = true;
  for (std::size_t i = 1; i < study.reports.size(); ++i) {
    const double prev = std::abs(study.reports[i - 1].residual_over_h());
    const double next = std::abs(study.reports[i].residual_over_h());
    if (!(next < prev || std::max(prev, next) <= kNegligibleResidual)) study.decreasing = false;
  }
  return study;
}

}  // namespace parametrix
