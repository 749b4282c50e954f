#pragma once

#include "parametrix/frozen.hpp"
#include "parametrix/grid.hpp"
#include "parametrix/slice_engine.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace parametrix {

/// Evaluator of K(s, t, x, y) with its endpoint behaviour and spatial spread.
struct SpaceTimeKernel {
  std::function<double(double, double, const Vector&, const Vector&)> evaluate;
  /// |K| <~ (t - s)^{-alpha}.
  double singularity_exponent = 0.0;
  int support_dim = 1;
  /// Standard deviation of the spatial spread of K(s, t, ., .) around its
  /// centre; empty for kernels that are not spatially concentrated.
  std::function<double(double, double)> spatial_sd;

  /// sd = sqrt(rate (t - s)).
  static std::function<double(double, double)> diffusive(double rate);
};

enum class TimeRule { substitution_sqrt, gauss_jacobi_endpoint };

struct QuadratureSpec {
  TimeRule time_rule = TimeRule::substitution_sqrt;
  /// Time slices of the series engine / Gauss nodes per half in convolve.
  int time_nodes = 32;
  /// Spatial half-width factor: box +- kappa sqrt(t - s) sqrt(sigma_upper).
  double kappa = 8.0;
  int points_per_axis = 257;
  double tolerance = 1e-8;

  /// 257 points and 32 slices in d = 1; 33 points per axis and 16 slices in d = 2.
  static QuadratureSpec defaults(int d);
  /// Throws std::invalid_argument unless nodes >= 8, points odd, kappa >= 6.
  void validate() const;
  /// Doubles the time nodes and halves the spatial spacing.
  QuadratureSpec refined() const;
};

struct TruncationPolicy {
  int max_order_R = 8;
  double term_norm_threshold = 1e-6;
  /// Envelope constants; both zero means "fit from the computed terms".
  double C = 0.0;
  double C1 = 0.0;
};

/// (C, C1) with |term_r(y)| <= C1^{r+1} rho^r / Gamma(1 + r/2) phi_{C,rho}(y - x).
struct GammaEnvelopeFit {
  double C = 0.0;
  double C1 = 0.0;
};

/// Fits (C, C1) over the given terms (index r = order) on a common grid.
/// For each C on a logarithmic scan C1 is the least admissible constant; the
/// pair minimizing C1 is returned. Nodes where a term is below 1e-10 of its
/// sup-norm are ignored.
GammaEnvelopeFit fit_gamma_envelope(const std::vector<GridField>& terms, const Vector& x,
                                    double rho, int first_order = 0);

/// sup_y phi_{C,rho} * sum_{r > R} C1^{r+1} rho^r / Gamma(1 + r/2).
double gamma_tail_estimate(const GammaEnvelopeFit& fit, double rho, int d, int R);

/// Result of a series evaluation on a grid at time t.
struct SeriesResult {
  GridField density;
  /// terms[r] = p~ (x) H^(r) on the final grid, r = 0..max_order_R.
  std::vector<GridField> terms;
  std::vector<double> term_norms;
  int orders_used = 0;
  bool converged = true;
  double truncation_estimate = 0.0;
  GammaEnvelopeFit envelope;
};

/// Slice plan on s + (t - s)(k/K)^2 with composite Simpson weights in
/// theta = sqrt((u - s)/(t - s)) for every intermediate target.
SlicePlan series_plan(const ModelSpec& model, double s, double t, const Vector& x,
                      const QuadratureSpec& quad, const std::optional<Grid>& final_grid);

SeriesResult diffusion_density_field(const ModelSpec& model, double s, double t, const Vector& x,
                                     const TruncationPolicy& policy, const QuadratureSpec& quad,
                                     const std::optional<Grid>& final_grid = std::nullopt);

/// Truncation, density sum and envelope fit for terms r = 0..R on one grid.
SeriesResult summarize_series(std::vector<GridField> terms, const TruncationPolicy& policy,
                              const Vector& x, double rho, int d);

struct DensityValue {
  double value = 0.0;
  double truncation_estimate = 0.0;
  int orders_used = 0;
  bool converged = true;
};

DensityValue diffusion_density(const ModelSpec& model, double s, double t, const Vector& x,
                               const Vector& y, const TruncationPolicy& policy,
                               const QuadratureSpec& quad);

/// (p~ (x) H^(r))(s, t, x, y).
double parametrix_term(const ModelSpec& model, int r, double s, double t, const Vector& x,
                       const Vector& y, const QuadratureSpec& quad);

/// int_s^t du int f(s, u, x, z) g(u, t, z, y) dz. The time interval is split at
/// its midpoint; each half is mapped so that its endpoint singularity is
/// removed (u - s = v^2 and t - u = v^2) or handled by Gauss-Jacobi weights.
/// The spatial box is the intersection of the kappa-boxes of the two factors.
double convolve(const SpaceTimeKernel& f, const SpaceTimeKernel& g, double s, double t,
                const Vector& x, const Vector& y, const QuadratureSpec& quad);

enum class PhiVariant { continuous, discrete };

/// sum_{r=1}^R H^(r)(s, t, z, z'), powers by (x) or, for the discrete
/// variant, by (x)_h on the mesh h (s and t multiples of h).
DensityValue phi_kernel(const ModelSpec& model, double s, double t, const Vector& z,
                        const Vector& zp, int R, const QuadratureSpec& quad,
                        PhiVariant variant = PhiVariant::continuous, double h = 0.0);

/// The frozen density p~(s, t, x, .) on a grid.
GridField frozen_field(const ModelSpec& model, double s, double t, const Vector& x,
                       const Grid& grid);

/// Grid with spacing <= the default slice spacing for elapsed time t - s that
/// has y (and y + m base_spacing) among its nodes.
Grid evaluation_grid(const ModelSpec& model, double s, double t, const Vector& x,
                     const Vector& y, const QuadratureSpec& quad, double base_spacing = 0.0);

}  // namespace parametrix
