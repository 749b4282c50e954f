#pragma once

#include "parametrix/chain.hpp"
#include "parametrix/metrics.hpp"
#include "parametrix/series.hpp"

#include <vector>

namespace parametrix {

enum class HorizonLaw { fixed_T, shrinking_T };

/// T as a function of n: fixed, or T = n^{-gamma} with gamma in (0, 1).
struct Regime {
  HorizonLaw law = HorizonLaw::shrinking_T;
  double gamma = 1.0 / 3.0;
  double T = 0.25;

  /// Throws std::invalid_argument for gamma outside (0, 1) or T outside (0, 1].
  void validate() const;
  double horizon(int n) const;
  Discretization discretization(int n) const;
};

struct RateStudyConfig {
  std::vector<int> n_list{8, 16, 32, 64};
  Regime regime;
  Vector x = make_vector({0.0});
  /// y on x + [-window, window] sqrt(T) with y_points nodes (d = 1 layout).
  int y_points = 41;
  double window = 6.0;
  TruncationPolicy policy;
  QuadratureSpec quad = QuadratureSpec::defaults(1);
};

struct RateSample {
  RatePoint point;
  std::vector<double> y;
  std::vector<double> p_chain;
  std::vector<double> p_series;
  std::vector<double> weighted_gap;
  bool on_boundary = false;
  bool converged = true;
  double chain_mass = 0.0;
};

struct RateStudy {
  std::vector<RateSample> samples;
  RateReport report;
};

/// sup over the window of Q_{sqrt T}(y - x)|p_h - p| for each n and the fitted slope.
RateStudy run_rate_study(const ModelSpec& model, const RateStudyConfig& config);

/// Evaluation pairs (x, y) on x + [-window, window] rho along the first axis.
std::vector<EvalPair> window_pairs(const Vector& x, double rho, double window, int points);

/// sqrt(n) error is non-increasing up to a relative tolerance between consecutive n.
bool sqrt_n_scaled_stable(const RateReport& report, double tolerance);

/// (C, C1) fitted to the series terms at t - s, with the sup-norms a_r and the
/// largest ratio a_r(y) / bound(y) under the fitted pair (<= 1 when it holds).
struct EnvelopeStudy {
  double rho = 0.0;
  GammaEnvelopeFit fit;
  std::vector<double> term_norms;
  double worst_ratio = 0.0;
};

EnvelopeStudy run_envelope_study(const ModelSpec& model, double s, double t, const Vector& x,
                                 int max_order, const QuadratureSpec& quad);

/// Least C with |p~_h - p~|(jh, kh, x, y) <= C h^{1/2} rho^{-1} zeta_rho(y - x),
/// rho = sqrt((k - j) h), over k - j in {1, 2, n/2, n} and a y window, per n.
struct FrozenGapPoint {
  int n = 0;
  double h = 0.0;
  double constant = 0.0;
  double max_gap = 0.0;
};

struct FrozenGapStudy {
  std::vector<FrozenGapPoint> points;
  /// Least-squares slope of the fitted constant on log n.
  double trend = 0.0;
};

FrozenGapStudy run_frozen_gap_study(const ModelSpec& model, const std::vector<int>& n_list,
                                    double T, const Vector& x, int y_points = 41,
                                    double window = 6.0);

struct CorrectionStudyConfig {
  std::vector<int> n_list{8, 16, 32};
  Regime regime;
  Vector x = make_vector({0.0});
  Vector y = make_vector({0.0});
  int R_phi = 4;
  QuadratureSpec quad = QuadratureSpec::defaults(1);
};

/// |residual| / h below this counts as zero (constant coefficients).
inline constexpr double kNegligibleResidual = 1e-12;

struct CorrectionStudy {
  std::vector<CorrectionReport> reports;
  /// |residual| / h strictly decreasing in n, or negligible throughout.
  bool decreasing = false;
};

CorrectionStudy run_correction_study(const ModelSpec& model, const CorrectionStudyConfig& config);

}  // namespace parametrix
