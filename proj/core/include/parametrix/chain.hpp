#pragma once

#include "parametrix/grid.hpp"
#include "parametrix/model.hpp"
#include "parametrix/series.hpp"
#include "parametrix/slice_engine.hpp"

#include <array>
#include <optional>
#include <vector>

namespace parametrix {

/// n steps of size h on [0, T], T = n h <= 1.
struct Discretization {
  int n = 2;
  double h = 0.5;
  double T = 1.0;

  static Discretization from_horizon(int n, double T);
  /// Throws std::invalid_argument unless n >= 2, h > 0, T = n h <= 1.
  void validate() const;
  double time(int i) const { return i * h; }
};

/// Transition density of the chain from (j h, x) to k h on a grid.
struct DensityField {
  int start_index = 0;
  int end_index = 0;
  Vector start_point;
  GridField field;

  double mass() const { return field.integral(); }
};

/// h^{-d/2} q(j h, x, (z - x - m(j h, x) h) / sqrt(h)).
double one_step_density(const ModelSpec& model, const Discretization& disc, int j, const Vector& x,
                        const Vector& z);

/// Grid for a chain started at x and run for `steps` steps: half-width
/// kappa sqrt(steps h sigma_upper) + drift_bound steps h, spacing fine enough
/// for one-step kernels (and at most 2 hw / (min_points - 1)). With an anchor
/// the grid contains it as a node.
Grid chain_grid(const ModelSpec& model, const Discretization& disc, const Vector& x, int steps,
                const std::optional<Vector>& anchor = std::nullopt, double kappa = 8.0,
                int min_points = 257);

/// Grid recursion p(j, i+1, x, z) = int p(j, i, x, w) p_1(i, w, z) dw (trapezoid),
/// exact first step. Throws NumericalError on mass leakage above 1e-2.
DensityField chain_density(const ModelSpec& model, const Discretization& disc, int j, int k,
                           const Vector& x, const Grid& grid);

/// p~_h(j h, k h, x, y) for the chain frozen at y: closed-form Gaussian with
/// mean x + sum m(l h, y) h and covariance sum sigma(l h, y) h for Gaussian
/// innovations, grid recursion of the frozen increments otherwise.
double frozen_chain_density(const ModelSpec& model, const Discretization& disc, int j, int k,
                            const Vector& x, const Vector& y);

/// Same through the recursion of frozen one-step kernels, for any innovations.
double frozen_chain_density_recursion(const ModelSpec& model, const Discretization& disc, int j,
                                      int k, const Vector& x, const Vector& y);

/// H_h(j h, k h, x, y) = h^{-1} [int p_h(j, j+1, x, z) p~_h(j+1, k, z, y) dz
///                              - int p~^y_h(j, j+1, x, z) p~_h(j+1, k, z, y) dz].
/// Closed form for Gaussian innovations, spatial quadrature otherwise.
double kernel_Hh(const ModelSpec& model, const Discretization& disc, int j, int k,
                 const Vector& x, const Vector& y);

/// H_h between slices t_i = (j0 + i) h (Gaussian innovations).
class DiscreteKernel : public PairKernel {
 public:
  DiscreteKernel(const ModelSpec& model, const Discretization& disc, int j0);
  void block(int i, int k, const std::vector<Vector>& src, const Grid& dst,
             Eigen::MatrixXd& out) const override;
  double width(int i, int k) const override;
  double reach(int i, int k) const override;

 private:
  const ModelSpec* model_;
  Discretization disc_;
  int j0_;
};

/// Terms p~_h (x)_h H_h^(r), r = 0..R, on `grid` at time k h.
SeriesResult discrete_parametrix_field(const ModelSpec& model, const Discretization& disc, int j,
                                       int k, const Vector& x, int R, const Grid& grid,
                                       const QuadratureSpec& quad = QuadratureSpec::defaults(1));

/// sum_{r=0}^{R} (p~_h (x)_h H_h^(r))(j h, k h, x, y); R <= k - j.
double discrete_parametrix_density(const ModelSpec& model, const Discretization& disc, int j,
                                   int k, const Vector& x, const Vector& y, int R,
                                   const QuadratureSpec& quad = QuadratureSpec::defaults(1));

/// Slices t_i = i h with weights h for 0 <= i < k (point mass at i = 0).
SlicePlan mesh_plan(const ModelSpec& model, const Discretization& disc, const Vector& x,
                    const Grid& final_grid, const QuadratureSpec& quad);

/// p^d = sum_r p~ (x)_h H^(r) on `grid` at T (continuous p~ and H, discrete
/// convolution), truncated as in diffusion_density_field. Orders above n are
/// identically zero and are not computed.
SeriesResult pd_field(const ModelSpec& model, const Discretization& disc, const Vector& x,
                      const TruncationPolicy& policy, const QuadratureSpec& quad,
                      const Grid& grid);

DensityValue pd_density(const ModelSpec& model, const Discretization& disc, const Vector& x,
                        const Vector& y, const TruncationPolicy& policy,
                        const QuadratureSpec& quad = QuadratureSpec::defaults(1));

/// First-order decomposition of (p - p^d)(0, T, x, y) into h/2 correction terms.
struct CorrectionReport {
  int n = 0;
  double h = 0.0;
  double T = 0.0;
  double p = 0.0;
  double pd = 0.0;
  double p_minus_pd = 0.0;
  /// h/2 (p (x)_h H_1), h/2 (p (x)_h A_0), h/2 (p (x)_h H_1 (x)_h Phi),
  /// h/2 (p (x)_h A_0 (x)_h Phi).
  std::array<double, 4> terms{};
  double residual = 0.0;
  bool converged = true;

  double residual_over_h() const { return residual / h; }
};

CorrectionReport correction_terms(const ModelSpec& model, const Discretization& disc,
                                  const Vector& x, const Vector& y, int R_phi,
                                  const QuadratureSpec& quad = QuadratureSpec::defaults(1));

}  // namespace parametrix
