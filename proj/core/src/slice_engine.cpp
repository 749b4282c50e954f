#include "parametrix/slice_engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace parametrix {

namespace {

constexpr double kExpCutoff = 80.0;
// Beyond exp(-32) of the peak the kernel is dropped when tiling.
constexpr double kReachExponent = 32.0;
constexpr double kMinWidthOverSpacing = 1.5;
constexpr int kMaxRefinement = 8;

Grid refined(const Grid& g, int factor) {
  Grid r = g;
  for (int a = 0; a < g.dim; ++a) {
    const auto i = static_cast<std::size_t>(a);
    r.spacing[i] = g.spacing[i] / factor;
    r.count[i] = (g.count[i] - 1) * factor + 1;
  }
  return r;
}

// Per-target frozen Gaussian in d = 1.
struct Column1d {
  double mean_shift;  // integrated drift
  double precision;
  double normalizer;
};

Column1d column_1d(const ModelSpec& model, double s, double t, const Vector& y) {
  const auto& f = model.coefficients;
  double m, v;
  if (f.time_homogeneous) {
    m = (t - s) * f.drift(s, y)(0);
    v = (t - s) * f.diffusion(s, y)(0, 0);
  } else {
    const auto p = integrated_coeffs(model, s, t, y);
    m = p.integrated_drift(0);
    v = p.integrated_cov(0, 0);
  }
  return {m, 1.0 / v, 1.0 / std::sqrt(2.0 * std::numbers::pi * v)};
}

// Tiling pays off once the kernel reach is small against the grid extent.
bool tiled(const Grid& g, double reach) {
  if (!std::isfinite(reach)) return false;
  for (int a = 0; a < g.dim; ++a) {
    const auto i = static_cast<std::size_t>(a);
    if (2.0 * reach < 0.5 * g.spacing[i] * (g.count[i] - 1)) return true;
  }
  return false;
}

// Sub-grids of g with side about 2 reach, with their flat indices in g.
template <class Fn>
void for_each_tile(const Grid& g, double reach, Fn&& fn) {
  std::array<int, kMaxGridDim> side{}, tiles{};
  int total = 1;
  for (int a = 0; a < g.dim; ++a) {
    const auto i = static_cast<std::size_t>(a);
    side[i] = std::max(1, static_cast<int>(2.0 * reach / g.spacing[i]));
    tiles[i] = (g.count[i] + side[i] - 1) / side[i];
    total *= tiles[i];
  }
  std::vector<std::size_t> rows;
  for (int flat = 0; flat < total; ++flat) {
    Grid tile = g;
    std::array<int, kMaxGridDim> lo{};
    int rem = flat;
    for (int a = g.dim - 1; a >= 0; --a) {
      const auto i = static_cast<std::size_t>(a);
      const int t = rem % tiles[i];
      rem /= tiles[i];
      lo[i] = t * side[i];
      tile.origin[i] = g.coordinate(a, lo[i]);
      tile.count[i] = std::min(side[i], g.count[i] - lo[i]);
    }
    rows.clear();
    for (std::size_t b = 0; b < tile.size(); ++b) {
      auto idx = tile.unflatten(b);
      for (int a = 0; a < g.dim; ++a) idx[static_cast<std::size_t>(a)] += lo[static_cast<std::size_t>(a)];
      rows.push_back(g.flatten(idx));
    }
    fn(tile, rows);
  }
}

// Flat indices of the nodes of src within `reach` (per axis) of the tile.
std::vector<std::size_t> nodes_within(const Grid& src, const Grid& tile, double reach) {
  std::array<int, kMaxGridDim> lo{}, hi{};
  std::size_t n = 1;
  for (int a = 0; a < src.dim; ++a) {
    const auto i = static_cast<std::size_t>(a);
    const double a0 = tile.origin[i] - reach;
    const double a1 = tile.coordinate(a, tile.count[i] - 1) + reach;
    lo[i] = std::max(0, static_cast<int>(std::ceil((a0 - src.origin[i]) / src.spacing[i] - 1e-9)));
    hi[i] = std::min(src.count[i] - 1,
                     static_cast<int>(std::floor((a1 - src.origin[i]) / src.spacing[i] + 1e-9)));
    if (hi[i] < lo[i]) return {};
    n *= static_cast<std::size_t>(hi[i] - lo[i] + 1);
  }
  std::vector<std::size_t> out;
  out.reserve(n);
  std::array<int, kMaxGridDim> idx = lo;
  while (true) {
    out.push_back(src.flatten(idx));
    int a = src.dim - 1;
    for (; a >= 0; --a) {
      const auto i = static_cast<std::size_t>(a);
      if (++idx[i] <= hi[i]) break;
      idx[i] = lo[i];
    }
    if (a < 0) break;
  }
  return out;
}

}  // namespace

Grid slice_grid(const ModelSpec& model, const Vector& x, double elapsed, double kappa,
                int points_per_axis) {
  if (!(elapsed > 0.0)) throw std::invalid_argument("slice_grid needs positive elapsed time");
  const auto& f = model.coefficients;
  const double hw =
      kappa * std::sqrt(elapsed * f.sigma_upper) + f.drift_bound * elapsed;
  return Grid::centered(x, Vector::Constant(model.dim(), hw), points_per_axis);
}

SliceResult propagate(const SlicePlan& plan, const PairKernel& kernel,
                      const std::function<GridField(int)>& base, int max_order) {
  const int K = plan.last();
  if (K < 1) throw std::invalid_argument("propagate needs at least two slices");
  if (static_cast<int>(plan.grids.size()) != K + 1 || plan.weights.rows() != K + 1 ||
      plan.weights.cols() != K + 1)
    throw std::invalid_argument("slice plan is inconsistent");
  if (max_order < 0) throw std::invalid_argument("max_order must be >= 0");

  SliceResult result;
  result.terms.assign(static_cast<std::size_t>(max_order) + 1,
                      std::vector<GridField>(static_cast<std::size_t>(K) + 1));
  auto F = [&](int r, int k) -> GridField& {
    return result.terms[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)];
  };

  Eigen::MatrixXd block;
  for (int k = 1; k <= K; ++k) {
    const Grid& gk = plan.grids[static_cast<std::size_t>(k)];
    const auto nk = static_cast<Eigen::Index>(gk.size());
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(nk, std::max(max_order, 1));

    if (max_order >= 1 && plan.delta_start && plan.weights(k, 0) != 0.0) {
      kernel.block(0, k, {plan.start}, gk, block);
      acc.col(0) += plan.weights(k, 0) * block.col(0);
    }

    for (int i = 1; i < k && max_order >= 1; ++i) {
      const double w = plan.weights(k, i);
      if (w == 0.0) continue;
      const Grid& gi = plan.grids[static_cast<std::size_t>(i)];
      double spacing = 0.0;
      for (int a = 0; a < gi.dim; ++a) spacing = std::max(spacing, gi.spacing[static_cast<std::size_t>(a)]);
      const double width = kernel.width(i, k);
      int factor = 1;
      if (width > 0.0 && width < kMinWidthOverSpacing * spacing)
        factor = std::min(kMaxRefinement,
                          static_cast<int>(std::ceil(kMinWidthOverSpacing * spacing / width)));
      const Grid src = factor == 1 ? gi : refined(gi, factor);
      const auto trap = src.trapezoid_weights();
      const auto points = src.points();
      Eigen::MatrixXd S(static_cast<Eigen::Index>(src.size()), max_order);
      bool any = false;
      for (int r = 0; r < max_order; ++r) {
        const GridField& f = F(r, i);
        for (std::size_t a = 0; a < src.size(); ++a) {
          const double v = factor == 1 ? f.values[a] : f.interpolate(points[a]);
          S(static_cast<Eigen::Index>(a), r) = trap[a] * v;
          any = any || v != 0.0;
        }
      }
      if (!any) continue;
      const double reach = kernel.reach(i, k);
      if (!tiled(gk, reach)) {
        kernel.block(i, k, points, gk, block);
        acc.leftCols(max_order).noalias() += w * (block * S);
        continue;
      }
      for_each_tile(gk, reach, [&](const Grid& tile, const std::vector<std::size_t>& rows) {
        const auto cols = nodes_within(src, tile, reach);
        if (cols.empty()) return;
        std::vector<Vector> sub(cols.size());
        Eigen::MatrixXd Ssub(static_cast<Eigen::Index>(cols.size()), max_order);
        for (std::size_t c = 0; c < cols.size(); ++c) {
          sub[c] = points[cols[c]];
          Ssub.row(static_cast<Eigen::Index>(c)) = S.row(static_cast<Eigen::Index>(cols[c]));
        }
        kernel.block(i, k, sub, tile, block);
        const Eigen::MatrixXd part = w * (block * Ssub);
        for (std::size_t r = 0; r < rows.size(); ++r)
          acc.row(static_cast<Eigen::Index>(rows[r])).head(max_order) +=
              part.row(static_cast<Eigen::Index>(r));
      });
    }

    F(0, k) = base(k);
    if (F(0, k).values.size() != gk.size())
      throw std::invalid_argument("base field does not live on the slice grid");
    const double wkk = plan.weights(k, k);
    for (int r = 1; r <= max_order; ++r) {
      GridField f(gk);
      for (Eigen::Index b = 0; b < nk; ++b) f.values[static_cast<std::size_t>(b)] = acc(b, r - 1);
      if (wkk != 0.0) {
        const auto diag = kernel.diagonal(k, F(r - 1, k));
        for (std::size_t b = 0; b < f.values.size(); ++b) f.values[b] += wkk * diag[b];
      }
      for (double v : f.values)
        if (!std::isfinite(v))
          throw NumericalError("non-finite value while propagating slice " + std::to_string(k) +
                               " order " + std::to_string(r));
      F(r, k) = std::move(f);
    }
  }
  return result;
}

FrozenKernel::FrozenKernel(const ModelSpec& model, std::vector<double> times,
                           FrozenKernelKind kind)
    : model_(&model), times_(std::move(times)), kind_(kind) {}

double FrozenKernel::width(int i, int k) const {
  const double dt = times_[static_cast<std::size_t>(k)] - times_[static_cast<std::size_t>(i)];
  return std::sqrt(dt * model_->coefficients.sigma_lower);
}

double FrozenKernel::reach(int i, int k) const {
  const double dt = times_[static_cast<std::size_t>(k)] - times_[static_cast<std::size_t>(i)];
  const auto& f = model_->coefficients;
  return std::sqrt(2.0 * kReachExponent * dt * f.sigma_upper) + f.drift_bound * dt;
}

void FrozenKernel::block(int i, int k, const std::vector<Vector>& src, const Grid& dst,
                         Eigen::MatrixXd& out) const {
  const ModelSpec& model = *model_;
  const auto& f = model.coefficients;
  const double s = times_[static_cast<std::size_t>(i)];
  const double t = times_[static_cast<std::size_t>(k)];
  const int d = model.dim();
  const auto ns = static_cast<Eigen::Index>(src.size());
  const auto nd = static_cast<Eigen::Index>(dst.size());
  out.resize(nd, ns);

  // Coefficient data at (s, point): value-like for H/H_l, full jets for A_0.
  auto first_order_data = [&](const Vector& p, Vector& m, Matrix& sig) {
    if (kind_ == FrozenKernelKind::H) {
      m = f.drift(s, p);
      sig = f.diffusion(s, p);
    } else {
      const int l = kind_ == FrozenKernelKind::H1 ? 1 : 2;
      m = f.drift_time_derivative(s, p, l);
      sig = f.diffusion_time_derivative(s, p, l);
    }
  };

  const auto targets = dst.points();
  if (d == 1) {
    std::vector<Column1d> col(static_cast<std::size_t>(nd));
    std::vector<double> ym(col.size()), ys(col.size());
    for (std::size_t b = 0; b < col.size(); ++b) {
      col[b] = column_1d(model, s, t, targets[b]);
      if (kind_ == FrozenKernelKind::A0) {
        ym[b] = f.drift(s, targets[b])(0);
        ys[b] = f.diffusion(s, targets[b])(0, 0);
      } else {
        Vector m;
        Matrix sig;
        first_order_data(targets[b], m, sig);
        ym[b] = m(0);
        ys[b] = sig(0, 0);
      }
    }
    for (Eigen::Index a = 0; a < ns; ++a) {
      const Vector& z = src[static_cast<std::size_t>(a)];
      const double z0 = z(0);
      double* o = out.col(a).data();
      if (kind_ == FrozenKernelKind::A0) {
        const auto jet = coefficient_jet(f, s, z, kJetSpatial1 | kJetSpatial2);
        const double A = jet.sigma(0, 0), A1 = jet.dsigma[0](0, 0), A2 = jet.d2sigma[0][0](0, 0);
        const double B = jet.m(0), B1 = jet.dm[0](0), B2 = jet.d2m[0][0](0);
        const double c1 = B * B1 + 0.5 * A * B2;
        for (Eigen::Index b = 0; b < nd; ++b) {
          const auto& c = col[static_cast<std::size_t>(b)];
          const double w = targets[static_cast<std::size_t>(b)](0) - z0 - c.mean_shift;
          const double u = c.precision * w;
          const double e = 0.5 * w * u;
          if (e > kExpCutoff) {
            o[b] = 0.0;
            continue;
          }
          const double P = c.precision, u2 = u * u;
          const double he1 = u, he2 = u2 - P, he3 = u * (u2 - 3.0 * P),
                       he4 = u2 * u2 - 6.0 * P * u2 + 3.0 * P * P;
          const double as = ys[static_cast<std::size_t>(b)], bs = ym[static_cast<std::size_t>(b)];
          const double c4 = 0.25 * (A - as) * (A - as);
          const double c3 = (A - as) * (B - bs) + 0.5 * A * A1;
          const double c2 = B * B + 0.5 * B * A1 + A * B1 + 0.25 * A * A2 - 2.0 * B * bs + bs * bs;
          o[b] = c.normalizer * std::exp(-e) * (c1 * he1 + c2 * he2 + c3 * he3 + c4 * he4);
        }
      } else {
        Vector mz;
        Matrix sz;
        first_order_data(z, mz, sz);
        const double m_a = mz(0), s_a = sz(0, 0);
        for (Eigen::Index b = 0; b < nd; ++b) {
          const auto& c = col[static_cast<std::size_t>(b)];
          const double dm = m_a - ym[static_cast<std::size_t>(b)];
          const double ds = s_a - ys[static_cast<std::size_t>(b)];
          const double w = targets[static_cast<std::size_t>(b)](0) - z0 - c.mean_shift;
          const double u = c.precision * w;
          const double e = 0.5 * w * u;
          if (e > kExpCutoff || (dm == 0.0 && ds == 0.0)) {
            o[b] = 0.0;
            continue;
          }
          o[b] = c.normalizer * std::exp(-e) * (0.5 * ds * (u * u - c.precision) + dm * u);
        }
      }
    }
    return;
  }

  if (d == 2 && kind_ != FrozenKernelKind::A0) {
    // p~ (sum dm_i He_i + 1/2 sum ds_ij He_ij) with He_i = u_i, He_ij = u_i u_j - P_ij.
    struct Column2d {
      double y0, y1, P00, P01, P11, norm, m0, m1, s00, s01, s11;
    };
    std::vector<Column2d> col(targets.size());
    for (std::size_t b = 0; b < targets.size(); ++b) {
      const GaussianEval g(integrated_coeffs(model, s, t, targets[b]));
      Vector m;
      Matrix sig;
      first_order_data(targets[b], m, sig);
      const Vector& mb = g.params.integrated_drift;
      col[b] = {targets[b](0) - mb(0), targets[b](1) - mb(1), g.precision(0, 0), g.precision(0, 1),
                g.precision(1, 1), g.normalizer, m(0), m(1), sig(0, 0), sig(0, 1), sig(1, 1)};
    }
    for (Eigen::Index a = 0; a < ns; ++a) {
      const Vector& z = src[static_cast<std::size_t>(a)];
      Vector mz;
      Matrix sz;
      first_order_data(z, mz, sz);
      const double z0 = z(0), z1 = z(1);
      double* o = out.col(a).data();
      for (Eigen::Index b = 0; b < nd; ++b) {
        const Column2d& c = col[static_cast<std::size_t>(b)];
        const double dm0 = mz(0) - c.m0, dm1 = mz(1) - c.m1;
        const double d00 = sz(0, 0) - c.s00, d01 = sz(0, 1) - c.s01, d11 = sz(1, 1) - c.s11;
        const double w0 = c.y0 - z0, w1 = c.y1 - z1;
        const double u0 = c.P00 * w0 + c.P01 * w1, u1 = c.P01 * w0 + c.P11 * w1;
        const double e = 0.5 * (w0 * u0 + w1 * u1);
        if (e > kExpCutoff || (dm0 == 0.0 && dm1 == 0.0 && d00 == 0.0 && d01 == 0.0 && d11 == 0.0)) {
          o[b] = 0.0;
          continue;
        }
        const double poly = dm0 * u0 + dm1 * u1 +
                            0.5 * (d00 * (u0 * u0 - c.P00) + 2.0 * d01 * (u0 * u1 - c.P01) +
                                   d11 * (u1 * u1 - c.P11));
        o[b] = c.norm * std::exp(-e) * poly;
      }
    }
    return;
  }

  // General dimension: Hermite tables per entry.
  std::vector<GaussianEval> gauss;
  gauss.reserve(targets.size());
  std::vector<Vector> ym(targets.size());
  std::vector<Matrix> ys(targets.size());
  for (std::size_t b = 0; b < targets.size(); ++b) {
    gauss.emplace_back(integrated_coeffs(model, s, t, targets[b]));
    if (kind_ == FrozenKernelKind::A0) {
      ym[b] = f.drift(s, targets[b]);
      ys[b] = f.diffusion(s, targets[b]);
    } else {
      first_order_data(targets[b], ym[b], ys[b]);
    }
  }
  HermiteTable he(d, kind_ == FrozenKernelKind::A0 ? 4 : 2);
  for (Eigen::Index a = 0; a < ns; ++a) {
    const Vector& z = src[static_cast<std::size_t>(a)];
    CoefficientJet jet;
    Vector mz;
    Matrix sz;
    if (kind_ == FrozenKernelKind::A0)
      jet = coefficient_jet(f, s, z, kJetSpatial1 | kJetSpatial2);
    else
      first_order_data(z, mz, sz);
    for (Eigen::Index b = 0; b < nd; ++b) {
      const auto bb = static_cast<std::size_t>(b);
      const GaussianEval& g = gauss[bb];
      const Vector w = g.residual(z);
      if (0.5 * w.dot(g.precision * w) > kExpCutoff) {
        out(b, a) = 0.0;
        continue;
      }
      const double p = he.evaluate(g, w);
      out(b, a) = kind_ == FrozenKernelKind::A0
                      ? assemble_A0(he, p, jet, ym[bb], ys[bb])
                      : assemble_first_order(he, p, Vector(mz - ym[bb]), Matrix(sz - ys[bb]));
    }
  }
}

std::vector<double> FrozenKernel::diagonal(int k, const GridField& field) const {
  std::vector<double> out(field.values.size(), 0.0);
  if (kind_ != FrozenKernelKind::H)
    throw std::logic_error("diagonal limit is only available for the kernel H");
  const auto& f = model_->coefficients;
  const double t = times_[static_cast<std::size_t>(k)];
  const int d = model_->dim();
  for (std::size_t b = 0; b < out.size(); ++b) {
    const double v = field.values[b];
    const Vector grad = field.gradient_at(b);
    if (v == 0.0 && grad.isZero(0.0)) continue;
    const Vector y = field.grid.point(b);
    const auto jet = coefficient_jet(f, t, y, kJetSpatial1 | kJetSpatial2);
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      s -= v * jet.dm[ii](i);
      for (int j = 0; j < d; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        s += 0.5 * (grad(i) * jet.dsigma[jj](i, j) + grad(j) * jet.dsigma[ii](i, j) +
                    v * jet.d2sigma[ii][jj](i, j));
      }
    }
    out[b] = s;
  }
  return out;
}

}  // namespace parametrix
