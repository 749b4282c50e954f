#pragma once

#include "parametrix/model.hpp"

#include <vector>

namespace parametrix {

/// Time integrals of the coefficients frozen at y over [s, t].
struct FrozenParams {
  double start_s = 0.0;
  double end_t = 0.0;
  Vector freeze_point_y;
  Vector integrated_drift;
  Matrix integrated_cov;
};

/// Gaussian N(y - x - m(s,t,y); sigma(s,t,y)) ready for repeated evaluation.
struct GaussianEval {
  FrozenParams params;
  double normalizer = 0.0;
  Matrix precision;

  explicit GaussianEval(FrozenParams p);
  GaussianEval() = default;

  /// Residual w = y - x - m(s,t,y).
  Vector residual(const Vector& x) const {
    return params.freeze_point_y - x - params.integrated_drift;
  }
  double density(const Vector& x) const;
};

/// Largest derivative order supported by the Hermite tables.
inline constexpr int kMaxHermiteOrder = 6;

/// Flat index of a multi-index in a Hermite table (base kMaxHermiteOrder + 1).
inline int hermite_index(const MultiIndex& nu) {
  int idx = 0;
  int stride = 1;
  for (int i = 0; i < nu.dim; ++i) {
    idx += nu[i] * stride;
    stride *= kMaxHermiteOrder + 1;
  }
  return idx;
}

/// Table of multivariate Hermite polynomials He_nu(u), u = P w, P the
/// precision, for all |nu| <= order. D_x^nu p~ = He_nu p~.
class HermiteTable {
 public:
  HermiteTable(int dim, int order);

  /// Fills the table at residual w and returns p~ at that point.
  double evaluate(const GaussianEval& g, const Vector& w);

  double operator[](const MultiIndex& nu) const {
    return values_[static_cast<std::size_t>(hermite_index(nu))];
  }
  /// He for e_i + e_j (+ e_k (+ e_l)); indices < 0 are skipped.
  double at(int i, int j = -1, int k = -1, int l = -1) const;
  int order() const { return order_; }

 private:
  int dim_;
  int order_;
  std::vector<MultiIndex> ordered_;
  std::vector<double> values_;
};

FrozenParams integrated_coeffs(const ModelSpec& model, double s, double t, const Vector& y);

double frozen_density(const ModelSpec& model, double s, double t, const Vector& x,
                      const Vector& y);

/// D_x^nu p~(s, t, x, y), |nu| <= 6.
double frozen_density_derivative(const ModelSpec& model, double s, double t, const Vector& x,
                                 const Vector& y, const MultiIndex& nu);

/// H = (L - L~) p~ with coefficients at time s.
double kernel_H(const ModelSpec& model, double s, double t, const Vector& x, const Vector& y);

/// H_l = (L_l - L~_l) p~ built from the l-th time derivatives of the coefficients.
double kernel_Hl(const ModelSpec& model, double s, double t, const Vector& v, const Vector& z,
                 int l);

/// A_0 = L(L p~) - 2 L(L~ p~) + L~(L~ p~).
double kernel_A0(const ModelSpec& model, double s, double t, const Vector& v, const Vector& z);

/// H assembled from a precomputed Gaussian, Hermite table (order >= 2) and
/// coefficient differences. Shared by the pointwise and grid evaluators.
double assemble_first_order(const HermiteTable& he, double density, const Vector& dm,
                            const Matrix& dsigma);

/// A_0 from a Hermite table of order >= 4, the jet at v (values, first and
/// second spatial derivatives) and the frozen coefficients at z.
double assemble_A0(const HermiteTable& he, double density, const CoefficientJet& at_v,
                   const Vector& m_z, const Matrix& sigma_z);

}  // namespace parametrix
