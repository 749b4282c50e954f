#include "parametrix/frozen.hpp"

#include "parametrix/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace parametrix {

GaussianEval::GaussianEval(FrozenParams p) : params(std::move(p)) {
  const int d = static_cast<int>(params.integrated_cov.rows());
  if (d == 1) {
    const double v = params.integrated_cov(0, 0);
    if (!(v > 0.0)) throw NumericalError("singular integrated covariance");
    precision = Matrix::Constant(1, 1, 1.0 / v);
    normalizer = 1.0 / std::sqrt(2.0 * std::numbers::pi * v);
    return;
  }
  Eigen::LLT<Matrix> llt(params.integrated_cov);
  if (llt.info() != Eigen::Success) throw NumericalError("singular integrated covariance");
  precision = llt.solve(Matrix::Identity(d, d));
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  normalizer = std::exp(-0.5 * logdet - 0.5 * d * std::log(2.0 * std::numbers::pi));
}

double GaussianEval::density(const Vector& x) const {
  const Vector w = residual(x);
  return normalizer * std::exp(-0.5 * w.dot(precision * w));
}

HermiteTable::HermiteTable(int dim, int order) : dim_(dim), order_(order) {
  if (order < 0 || order > kMaxHermiteOrder)
    throw std::invalid_argument("derivative order must be in [0, 6]");
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("unsupported dimension");
  int size = 1;
  for (int i = 0; i < dim; ++i) size *= kMaxHermiteOrder + 1;
  values_.assign(static_cast<std::size_t>(size), 0.0);
  // Multi-indices by increasing order so that parents come first.
  std::vector<MultiIndex> frontier{MultiIndex::zero(dim)};
  ordered_.push_back(frontier.front());
  for (int k = 1; k <= order; ++k) {
    std::vector<MultiIndex> next;
    for (const auto& nu : frontier) {
      int last = 0;
      for (int i = dim - 1; i >= 0; --i)
        if (nu[i] > 0) {
          last = i;
          break;
        }
      for (int i = last; i < dim; ++i) next.push_back(nu.plus(i));
    }
    ordered_.insert(ordered_.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
}

double HermiteTable::evaluate(const GaussianEval& g, const Vector& w) {
  const Matrix& P = g.precision;
  const Vector u = P * w;
  const double density = g.normalizer * std::exp(-0.5 * w.dot(u));
  values_[0] = 1.0;
  if (dim_ == 1) {
    const double p = P(0, 0);
    if (order_ >= 1) values_[1] = u(0);
    for (int k = 1; k < order_; ++k)
      values_[static_cast<std::size_t>(k + 1)] =
          u(0) * values_[static_cast<std::size_t>(k)] -
          k * p * values_[static_cast<std::size_t>(k - 1)];
    return density;
  }
  // He_{nu+e_i} = u_i He_nu - sum_j nu_j P_ij He_{nu-e_j}
  for (std::size_t n = 1; n < ordered_.size(); ++n) {
    const MultiIndex& nu = ordered_[n];
    int i = 0;
    while (nu[i] == 0) ++i;
    MultiIndex parent = nu;
    --parent[i];
    double v = u(i) * values_[static_cast<std::size_t>(hermite_index(parent))];
    for (int j = 0; j < dim_; ++j) {
      if (parent[j] == 0) continue;
      MultiIndex gp = parent;
      --gp[j];
      v -= parent[j] * P(i, j) * values_[static_cast<std::size_t>(hermite_index(gp))];
    }
    values_[static_cast<std::size_t>(hermite_index(nu))] = v;
  }
  return density;
}

double HermiteTable::at(int i, int j, int k, int l) const {
  MultiIndex nu = MultiIndex::zero(dim_);
  for (int a : {i, j, k, l})
    if (a >= 0) ++nu[a];
  return (*this)[nu];
}

FrozenParams integrated_coeffs(const ModelSpec& model, double s, double t, const Vector& y) {
  if (!(s < t)) throw std::invalid_argument("integrated_coeffs requires s < t");
  const auto& f = model.coefficients;
  FrozenParams p;
  p.start_s = s;
  p.end_t = t;
  p.freeze_point_y = y;
  if (f.time_homogeneous) {
    p.integrated_drift = (t - s) * f.drift(s, y);
    p.integrated_cov = (t - s) * f.diffusion(s, y);
    return p;
  }
  // 16-point Gauss-Legendre on each half of [s, t].
  const auto& ref = quad::gauss_legendre(16);
  const int d = f.dim;
  p.integrated_drift = Vector::Zero(d);
  p.integrated_cov = Matrix::Zero(d, d);
  const double mid = 0.5 * (s + t);
  for (auto [lo, hi] : {std::pair{s, mid}, std::pair{mid, t}}) {
    const double half = 0.5 * (hi - lo);
    const double c = 0.5 * (hi + lo);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      const double u = c + half * ref.nodes[i];
      p.integrated_drift += half * ref.weights[i] * f.drift(u, y);
      p.integrated_cov += half * ref.weights[i] * f.diffusion(u, y);
    }
  }
  return p;
}

double frozen_density(const ModelSpec& model, double s, double t, const Vector& x,
                      const Vector& y) {
  return GaussianEval(integrated_coeffs(model, s, t, y)).density(x);
}

double frozen_density_derivative(const ModelSpec& model, double s, double t, const Vector& x,
                                 const Vector& y, const MultiIndex& nu) {
  const int k = nu.order();
  if (k > kMaxHermiteOrder) throw std::invalid_argument("derivative order must be <= 6");
  const GaussianEval g(integrated_coeffs(model, s, t, y));
  HermiteTable he(model.dim(), k);
  const double p = he.evaluate(g, g.residual(x));
  return he[nu] * p;
}

double assemble_first_order(const HermiteTable& he, double density, const Vector& dm,
                            const Matrix& dsigma) {
  const int d = static_cast<int>(dm.size());
  double s = 0.0;
  for (int i = 0; i < d; ++i) {
    s += dm(i) * he.at(i);
    for (int j = 0; j < d; ++j) s += 0.5 * dsigma(i, j) * he.at(i, j);
  }
  return s * density;
}

double kernel_H(const ModelSpec& model, double s, double t, const Vector& x, const Vector& y) {
  const auto& f = model.coefficients;
  const Vector dm = f.drift(s, x) - f.drift(s, y);
  const Matrix ds = f.diffusion(s, x) - f.diffusion(s, y);
  if (dm.isZero(0.0) && ds.isZero(0.0)) return 0.0;
  const GaussianEval g(integrated_coeffs(model, s, t, y));
  HermiteTable he(model.dim(), 2);
  const double p = he.evaluate(g, g.residual(x));
  return assemble_first_order(he, p, dm, ds);
}

double kernel_Hl(const ModelSpec& model, double s, double t, const Vector& v, const Vector& z,
                 int l) {
  if (l != 1 && l != 2) throw std::invalid_argument("kernel_Hl: l must be 1 or 2");
  const auto& f = model.coefficients;
  const Vector dm = f.drift_time_derivative(s, v, l) - f.drift_time_derivative(s, z, l);
  const Matrix ds = f.diffusion_time_derivative(s, v, l) - f.diffusion_time_derivative(s, z, l);
  if (dm.isZero(0.0) && ds.isZero(0.0)) return 0.0;
  const GaussianEval g(integrated_coeffs(model, s, t, z));
  HermiteTable he(model.dim(), 2);
  const double p = he.evaluate(g, g.residual(v));
  return assemble_first_order(he, p, dm, ds);
}

double assemble_A0(const HermiteTable& he, double density, const CoefficientJet& jv,
                   const Vector& m_z, const Matrix& sigma_z) {
  const int d = static_cast<int>(m_z.size());
  const Vector& b = jv.m;
  const Matrix& a = jv.sigma;
  const Vector& bt = m_z;
  const Matrix& at = sigma_z;

  // Derivatives of L~ f (constant coefficients) at v.
  auto dk_Ltf = [&](int k) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
      s += bt(i) * he.at(i, k);
      for (int j = 0; j < d; ++j) s += 0.5 * at(i, j) * he.at(i, j, k);
    }
    return s;
  };
  auto dkl_Ltf = [&](int k, int l) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
      s += bt(i) * he.at(i, k, l);
      for (int j = 0; j < d; ++j) s += 0.5 * at(i, j) * he.at(i, j, k, l);
    }
    return s;
  };
  // Derivatives of L f (coefficients depend on v) by the product rule.
  auto dk_Lf = [&](int k) {
    const auto kk = static_cast<std::size_t>(k);
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
      s += jv.dm[kk](i) * he.at(i) + b(i) * he.at(i, k);
      for (int j = 0; j < d; ++j)
        s += 0.5 * (jv.dsigma[kk](i, j) * he.at(i, j) + a(i, j) * he.at(i, j, k));
    }
    return s;
  };
  auto dkl_Lf = [&](int k, int l) {
    const auto kk = static_cast<std::size_t>(k);
    const auto ll = static_cast<std::size_t>(l);
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
      s += jv.d2m[kk][ll](i) * he.at(i) + jv.dm[kk](i) * he.at(i, l) +
           jv.dm[ll](i) * he.at(i, k) + b(i) * he.at(i, k, l);
      for (int j = 0; j < d; ++j)
        s += 0.5 * (jv.d2sigma[kk][ll](i, j) * he.at(i, j) +
                    jv.dsigma[kk](i, j) * he.at(i, j, l) +
                    jv.dsigma[ll](i, j) * he.at(i, j, k) + a(i, j) * he.at(i, j, k, l));
    }
    return s;
  };

  double LL = 0.0, LLt = 0.0, LtLt = 0.0;
  for (int k = 0; k < d; ++k) {
    const double dLf = dk_Lf(k);
    const double dLtf = dk_Ltf(k);
    LL += b(k) * dLf;
    LLt += b(k) * dLtf;
    LtLt += bt(k) * dLtf;
    for (int l = 0; l < d; ++l) {
      const double dLtf2 = dkl_Ltf(k, l);
      LL += 0.5 * a(k, l) * dkl_Lf(k, l);
      LLt += 0.5 * a(k, l) * dLtf2;
      LtLt += 0.5 * at(k, l) * dLtf2;
    }
  }
  return (LL - 2.0 * LLt + LtLt) * density;
}

double kernel_A0(const ModelSpec& model, double s, double t, const Vector& v, const Vector& z) {
  const auto& f = model.coefficients;
  const CoefficientJet jv = coefficient_jet(f, s, v, kJetSpatial1 | kJetSpatial2);
  const GaussianEval g(integrated_coeffs(model, s, t, z));
  HermiteTable he(model.dim(), 4);
  const double p = he.evaluate(g, g.residual(v));
  return assemble_A0(he, p, jv, f.drift(s, z), f.diffusion(s, z));
}

}  // namespace parametrix
