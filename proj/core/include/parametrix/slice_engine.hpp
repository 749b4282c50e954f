#pragma once

#include "parametrix/frozen.hpp"
#include "parametrix/grid.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace parametrix {

/// Time slices t_0 < ... < t_K with one spatial grid per slice and the weights
/// W(k, i) of the time rule used for the integral over [t_0, t_k].
struct SlicePlan {
  std::vector<double> times;
  /// grids[k] for k >= 1; grids[0] is ignored when the start is a point mass.
  std::vector<Grid> grids;
  /// (K+1) x (K+1), lower triangular including the diagonal.
  Eigen::MatrixXd weights;
  Vector start;
  /// The order-0 field at t_0 is a point mass at `start`.
  bool delta_start = true;

  int last() const { return static_cast<int>(times.size()) - 1; }
};

/// Kernel K(t_i, t_k, z, y) evaluated in dense blocks between slices.
class PairKernel {
 public:
  virtual ~PairKernel() = default;

  /// out(b, a) = K(t_i, t_k, src[a], node b of dst).
  virtual void block(int i, int k, const std::vector<Vector>& src, const Grid& dst,
                     Eigen::MatrixXd& out) const = 0;

  /// lim_{u -> t_k} int f(z) K(u, t_k, z, y_b) dz for y_b the nodes of f's grid.
  virtual std::vector<double> diagonal(int /*k*/, const GridField& f) const {
    return std::vector<double>(f.values.size(), 0.0);
  }

  /// Lower bound on the spatial standard deviation of K(t_i, t_k, ., y);
  /// used to refine source grids that would under-resolve the kernel.
  virtual double width(int /*i*/, int /*k*/) const { return 0.0; }

  /// Distance |z - y| beyond which K(t_i, t_k, z, y) is negligible; blocks are
  /// then assembled tile by tile over nearby sources only.
  virtual double reach(int /*i*/, int /*k*/) const { return std::numeric_limits<double>::infinity(); }
};

/// terms[r][k] = r-fold propagated field on slice k (terms[r][0] empty).
struct SliceResult {
  std::vector<std::vector<GridField>> terms;
};

/// Forward recursion
///   F_{r+1}(t_k, y) = sum_{i<k} W(k,i) int F_r(t_i, z) K(t_i, t_k, z, y) dz
///                     + W(k,k) diag_k(F_r(t_k))(y),
/// with F_0(t_k) = base(k) for k >= 1 and F_0(t_0) the point mass (if any),
/// F_r(t_0) = 0 for r >= 1. Every kernel block is computed once and applied to
/// all orders.
SliceResult propagate(const SlicePlan& plan, const PairKernel& kernel,
                      const std::function<GridField(int)>& base, int max_order);

enum class FrozenKernelKind { H, H1, H2, A0 };

/// H, H_1, H_2 or A_0 between slices, with coefficients at the earlier time.
class FrozenKernel : public PairKernel {
 public:
  FrozenKernel(const ModelSpec& model, std::vector<double> times, FrozenKernelKind kind);

  void block(int i, int k, const std::vector<Vector>& src, const Grid& dst,
             Eigen::MatrixXd& out) const override;
  /// For H: the integration-by-parts limit
  ///   1/2 sum (d_i f d_j s_ij + d_j f d_i s_ij + f d_ij s_ij) - sum f d_i m_i.
  std::vector<double> diagonal(int k, const GridField& f) const override;
  double width(int i, int k) const override;
  double reach(int i, int k) const override;

 private:
  const ModelSpec* model_;
  std::vector<double> times_;
  FrozenKernelKind kind_;
};

/// Slice grid for a density started at x after time `elapsed`:
/// half-width kappa sqrt(elapsed sigma_upper) + drift_bound elapsed.
Grid slice_grid(const ModelSpec& model, const Vector& x, double elapsed, double kappa,
                int points_per_axis);

}  // namespace parametrix
