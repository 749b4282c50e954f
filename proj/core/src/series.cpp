#include "parametrix/series.hpp"

#include "parametrix/metrics.hpp"
#include "parametrix/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace parametrix {

std::function<double(double, double)> SpaceTimeKernel::diffusive(double rate) {
  return [rate](double s, double t) { return std::sqrt(rate * (t - s)); };
}

QuadratureSpec QuadratureSpec::defaults(int d) {
  QuadratureSpec q;
  if (d == 2) {
    q.points_per_axis = 33;
    q.time_nodes = 16;
  }
  if (d > kMaxGridDim) throw std::invalid_argument("grid-based evaluation supports d <= 2");
  return q;
}

void QuadratureSpec::validate() const {
  if (time_nodes < 8) throw std::invalid_argument("quadrature: time node count must be >= 8");
  if (points_per_axis < 3 || points_per_axis % 2 == 0)
    throw std::invalid_argument("quadrature: points per axis must be odd and >= 3");
  if (!(kappa >= 6.0)) throw std::invalid_argument("quadrature: kappa must be >= 6");
  if (!(tolerance > 0.0)) throw std::invalid_argument("quadrature: tolerance must be positive");
}

QuadratureSpec QuadratureSpec::refined() const {
  QuadratureSpec q = *this;
  q.time_nodes = 2 * time_nodes;
  q.points_per_axis = 2 * (points_per_axis - 1) + 1;
  return q;
}

GammaEnvelopeFit fit_gamma_envelope(const std::vector<GridField>& terms, const Vector& x,
                                    double rho, int first_order) {
  if (terms.empty()) throw std::invalid_argument("fit_gamma_envelope: no terms");
  const int d = terms.front().grid.dim;
  GammaEnvelopeFit best;
  best.C1 = std::numeric_limits<double>::infinity();
  const int scans = 60;
  for (int c = 0; c < scans; ++c) {
    const double C = std::exp(std::log(0.01) + (std::log(5.0) - std::log(0.01)) * c / (scans - 1));
    const EnvelopeSpec phi = make_envelope(EnvelopeKind::phi, d, rho, C);
    double c1 = 0.0;
    for (std::size_t r = 0; r < terms.size(); ++r) {
      const GridField& f = terms[r];
      const double sup = f.sup_norm();
      if (sup == 0.0) continue;
      const int order = first_order + static_cast<int>(r);
      const double scale = std::tgamma(1.0 + 0.5 * order) / std::pow(rho, order);
      for (std::size_t b = 0; b < f.values.size(); ++b) {
        const double v = std::abs(f.values[b]);
        if (v < 1e-10 * sup) continue;
        const double env = envelope(phi, Vector(f.grid.point(b) - x));
        if (env <= 0.0) {
          c1 = std::numeric_limits<double>::infinity();
          break;
        }
        c1 = std::max(c1, std::pow(v * scale / env, 1.0 / (order + 1)));
      }
    }
    if (c1 < best.C1) {
      best.C1 = c1;
      best.C = C;
    }
  }
  return best;
}

double gamma_tail_estimate(const GammaEnvelopeFit& fit, double rho, int d, int R) {
  if (fit.C1 == 0.0) return 0.0;
  if (!std::isfinite(fit.C1)) return std::numeric_limits<double>::infinity();
  const double sup_phi = std::pow(rho, -d) * std::pow(fit.C / std::numbers::pi, 0.5 * d);
  const double lc = std::log(fit.C1 * rho);
  const double peak = fit.C1 * rho * fit.C1 * rho;
  double total = 0.0;
  for (int r = R + 1;; ++r) {
    const double term = std::exp(std::log(fit.C1) + r * lc - std::lgamma(1.0 + 0.5 * r));
    total += term;
    if (r > 2.0 * peak + R + 10 && term < 1e-17 * total) break;
    if (r > R + 100000) break;
  }
  return sup_phi * total;
}

GridField frozen_field(const ModelSpec& model, double s, double t, const Vector& x,
                       const Grid& grid) {
  GridField f(grid);
  for (std::size_t b = 0; b < grid.size(); ++b)
    f.values[b] = frozen_density(model, s, t, x, grid.point(b));
  return f;
}

Grid evaluation_grid(const ModelSpec& model, double s, double t, const Vector& x,
                     const Vector& y, const QuadratureSpec& quad, double base_spacing) {
  const Grid def = slice_grid(model, x, t - s, quad.kappa, quad.points_per_axis);
  const double spacing = def.spacing[0];
  Vector hw(model.dim());
  for (int a = 0; a < model.dim(); ++a) hw(a) = 0.5 * (def.count[0] - 1) * def.spacing[0];
  return Grid::aligned(x, hw, y, base_spacing > 0.0 ? base_spacing : spacing, spacing);
}

SlicePlan series_plan(const ModelSpec& model, double s, double t, const Vector& x,
                      const QuadratureSpec& quad, const std::optional<Grid>& final_grid) {
  quad.validate();
  if (!(s < t)) throw std::invalid_argument("series requires s < t");
  if (quad.time_rule != TimeRule::substitution_sqrt)
    throw std::invalid_argument(
        "the slice engine uses the square-root substitution; gauss_jacobi_endpoint is "
        "available for convolve");
  const int K = quad.time_nodes;
  SlicePlan plan;
  plan.start = x;
  plan.delta_start = true;
  plan.times.resize(static_cast<std::size_t>(K) + 1);
  plan.grids.resize(static_cast<std::size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) {
    const double th = static_cast<double>(k) / K;
    plan.times[static_cast<std::size_t>(k)] = k == K ? t : s + (t - s) * th * th;
  }
  for (int k = 1; k <= K; ++k) {
    const double u = plan.times[static_cast<std::size_t>(k)];
    plan.grids[static_cast<std::size_t>(k)] =
        (k == K && final_grid) ? *final_grid
                               : slice_grid(model, x, u - s, quad.kappa, quad.points_per_axis);
  }
  plan.grids[0] = plan.grids[1];
  plan.weights = Eigen::MatrixXd::Zero(K + 1, K + 1);
  for (int k = 1; k <= K; ++k) {
    const auto w = quad::composite_simpson(k);
    const double span = plan.times[static_cast<std::size_t>(k)] - s;
    for (int i = 0; i <= k; ++i) {
      const double th = static_cast<double>(i) / k;
      plan.weights(k, i) = w[static_cast<std::size_t>(i)] / k * 2.0 * span * th;
    }
  }
  return plan;
}

SeriesResult diffusion_density_field(const ModelSpec& model, double s, double t, const Vector& x,
                                     const TruncationPolicy& policy, const QuadratureSpec& quad,
                                     const std::optional<Grid>& final_grid) {
  if (policy.max_order_R < 0) throw std::invalid_argument("max_order_R must be >= 0");
  if (!(policy.term_norm_threshold > 0.0))
    throw std::invalid_argument("term_norm_threshold must be positive");
  const SlicePlan plan = series_plan(model, s, t, x, quad, final_grid);
  const FrozenKernel kernel(model, plan.times, FrozenKernelKind::H);
  const auto res = propagate(
      plan, kernel,
      [&](int k) {
        return frozen_field(model, s, plan.times[static_cast<std::size_t>(k)], x,
                            plan.grids[static_cast<std::size_t>(k)]);
      },
      policy.max_order_R);

  const int K = plan.last();
  std::vector<GridField> terms;
  for (int r = 0; r <= policy.max_order_R; ++r)
    terms.push_back(res.terms[static_cast<std::size_t>(r)][static_cast<std::size_t>(K)]);
  return summarize_series(std::move(terms), policy, x, std::sqrt(t - s), model.dim());
}

SeriesResult summarize_series(std::vector<GridField> terms, const TruncationPolicy& policy,
                              const Vector& x, double rho, int d) {
  SeriesResult out;
  out.terms = std::move(terms);
  for (const auto& f : out.terms) out.term_norms.push_back(f.sup_norm());
  const int max_order = static_cast<int>(out.terms.size()) - 1;
  int R = -1;
  for (int r = 1; r <= max_order; ++r)
    if (out.term_norms[static_cast<std::size_t>(r)] < policy.term_norm_threshold) {
      R = r;
      break;
    }
  out.converged = R >= 0 || max_order == 0;
  if (R < 0) R = max_order;
  out.orders_used = out.converged ? std::max(R - 1, 0) : R;

  out.density = GridField(out.terms.front().grid);
  for (int r = 0; r <= R; ++r)
    for (std::size_t b = 0; b < out.density.values.size(); ++b)
      out.density.values[b] += out.terms[static_cast<std::size_t>(r)].values[b];

  bool all_zero = true;
  for (std::size_t r = 1; r < out.term_norms.size(); ++r) all_zero = all_zero && out.term_norms[r] == 0.0;
  if (policy.C > 0.0 && policy.C1 > 0.0) {
    out.envelope = {policy.C, policy.C1};
  } else {
    out.envelope = fit_gamma_envelope(out.terms, x, rho);
  }
  out.truncation_estimate = all_zero ? 0.0 : gamma_tail_estimate(out.envelope, rho, d, R);
  return out;
}

DensityValue diffusion_density(const ModelSpec& model, double s, double t, const Vector& x,
                               const Vector& y, const TruncationPolicy& policy,
                               const QuadratureSpec& quad) {
  const Grid g = evaluation_grid(model, s, t, x, y, quad);
  const auto res = diffusion_density_field(model, s, t, x, policy, quad, g);
  const auto idx = g.index_of(y, 1e-9 * (1.0 + y.norm()));
  DensityValue v;
  v.value = idx ? res.density.values[*idx] : res.density.interpolate(y);
  v.truncation_estimate = res.truncation_estimate;
  v.orders_used = res.orders_used;
  v.converged = res.converged;
  return v;
}

double parametrix_term(const ModelSpec& model, int r, double s, double t, const Vector& x,
                       const Vector& y, const QuadratureSpec& quad) {
  if (r < 0) throw std::invalid_argument("parametrix_term: r must be >= 0");
  if (r == 0) return frozen_density(model, s, t, x, y);
  const Grid g = evaluation_grid(model, s, t, x, y, quad);
  TruncationPolicy policy;
  policy.max_order_R = r;
  policy.C = policy.C1 = 1.0;
  const auto res = diffusion_density_field(model, s, t, x, policy, quad, g);
  const auto idx = g.index_of(y, 1e-9 * (1.0 + y.norm()));
  const GridField& f = res.terms[static_cast<std::size_t>(r)];
  return idx ? f.values[*idx] : f.interpolate(y);
}

namespace {

// Tensor Simpson rule on a box.
double box_simpson(const std::function<double(const Vector&)>& f, const Vector& lo,
                   const Vector& hi, int points) {
  const int d = static_cast<int>(lo.size());
  const auto w = quad::composite_simpson(points - 1);
  std::vector<double> h(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) h[static_cast<std::size_t>(a)] = (hi(a) - lo(a)) / (points - 1);
  double total = 0.0;
  std::size_t count = 1;
  for (int a = 0; a < d; ++a) count *= static_cast<std::size_t>(points);
  Vector z(d);
  for (std::size_t flat = 0; flat < count; ++flat) {
    std::size_t rem = flat;
    double weight = 1.0;
    for (int a = d - 1; a >= 0; --a) {
      const auto i = static_cast<int>(rem % static_cast<std::size_t>(points));
      rem /= static_cast<std::size_t>(points);
      z(a) = lo(a) + i * h[static_cast<std::size_t>(a)];
      weight *= w[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(a)];
    }
    const double v = f(z);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "non-finite integrand at z = " << z.transpose();
      throw NumericalError(os.str());
    }
    total += weight * v;
  }
  return total;
}

}  // namespace

double convolve(const SpaceTimeKernel& f, const SpaceTimeKernel& g, double s, double t,
                const Vector& x, const Vector& y, const QuadratureSpec& quad) {
  quad.validate();
  if (!(s < t)) throw std::invalid_argument("convolve requires s < t");
  if (!f.spatial_sd && !g.spatial_sd)
    throw std::invalid_argument("convolve needs at least one spatially concentrated factor");
  const int d = static_cast<int>(x.size());

  auto spatial = [&](double u) {
    Vector lo(d), hi(d);
    const double sf = f.spatial_sd ? f.spatial_sd(s, u) : 0.0;
    const double sg = g.spatial_sd ? g.spatial_sd(u, t) : 0.0;
    for (int a = 0; a < d; ++a) {
      double l = -std::numeric_limits<double>::infinity(), r = -l;
      if (f.spatial_sd) {
        l = std::max(l, x(a) - quad.kappa * sf);
        r = std::min(r, x(a) + quad.kappa * sf);
      }
      if (g.spatial_sd) {
        l = std::max(l, y(a) - quad.kappa * sg);
        r = std::min(r, y(a) + quad.kappa * sg);
      }
      if (!(l < r)) return 0.0;
      lo(a) = l;
      hi(a) = r;
    }
    try {
      return box_simpson([&](const Vector& z) { return f.evaluate(s, u, x, z) * g.evaluate(u, t, z, y); },
                         lo, hi, quad.points_per_axis);
    } catch (const NumericalError& e) {
      std::ostringstream os;
      os << e.what() << ", u = " << u;
      throw NumericalError(os.str());
    }
  };

  const double mid = 0.5 * (s + t);
  const double half = mid - s;
  double total = 0.0;
  if (quad.time_rule == TimeRule::substitution_sqrt) {
    // u = s + v^2 on [s, mid], u = t - v^2 on [mid, t].
    const auto rule = quad::affine(quad::gauss_legendre(quad.time_nodes), 0.0, std::sqrt(half));
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double v = rule.nodes[i];
      total += rule.weights[i] * 2.0 * v * (spatial(s + v * v) + spatial(t - v * v));
    }
  } else {
    // Jacobi weights (u - s)^{-alpha_f} on the first half and (t - u)^{-alpha_g}
    // on the second; the remaining factor is smooth.
    const double af = f.singularity_exponent, ag = g.singularity_exponent;
    const auto left = quad::gauss_jacobi(quad.time_nodes, 0.0, -af);
    const auto right = quad::gauss_jacobi(quad.time_nodes, -ag, 0.0);
    for (std::size_t i = 0; i < left.size(); ++i) {
      const double u = s + half * 0.5 * (1.0 + left.nodes[i]);
      total += 0.5 * half * std::pow(2.0 / half, af) * left.weights[i] * spatial(u) *
               std::pow(u - s, af);
    }
    for (std::size_t i = 0; i < right.size(); ++i) {
      const double u = mid + half * 0.5 * (1.0 + right.nodes[i]);
      total += 0.5 * half * std::pow(2.0 / half, ag) * right.weights[i] * spatial(u) *
               std::pow(t - u, ag);
    }
  }
  return total;
}

DensityValue phi_kernel(const ModelSpec& model, double s, double t, const Vector& z,
                        const Vector& zp, int R, const QuadratureSpec& quad, PhiVariant variant,
                        double h) {
  if (R < 1) throw std::invalid_argument("phi_kernel: R must be >= 1");
  if (!(s < t)) throw std::invalid_argument("phi_kernel requires s < t");
  DensityValue out;
  if (R == 1) {
    out.value = kernel_H(model, s, t, z, zp);
    return out;
  }
  const Grid final_grid = evaluation_grid(model, s, t, z, zp, quad);
  SlicePlan plan;
  if (variant == PhiVariant::continuous) {
    plan = series_plan(model, s, t, z, quad, final_grid);
  } else {
    if (!(h > 0.0)) throw std::invalid_argument("phi_kernel: discrete variant needs h > 0");
    const double steps = (t - s) / h;
    const int K = static_cast<int>(std::lround(steps));
    if (std::abs(steps - K) > 1e-9 * std::max(1.0, steps) || K < 1)
      throw std::invalid_argument("phi_kernel: t - s must be a multiple of h");
    plan.start = z;
    plan.times.resize(static_cast<std::size_t>(K) + 1);
    plan.grids.resize(static_cast<std::size_t>(K) + 1);
    for (int k = 0; k <= K; ++k) plan.times[static_cast<std::size_t>(k)] = k == K ? t : s + k * h;
    for (int k = 1; k <= K; ++k)
      plan.grids[static_cast<std::size_t>(k)] =
          k == K ? final_grid : slice_grid(model, z, k * h, quad.kappa, quad.points_per_axis);
    plan.grids[0] = plan.grids[1];
    plan.weights = Eigen::MatrixXd::Zero(K + 1, K + 1);
    for (int k = 1; k <= K; ++k)
      for (int i = 1; i < k; ++i) plan.weights(k, i) = h;
  }
  plan.delta_start = false;
  const FrozenKernel kernel(model, plan.times, FrozenKernelKind::H);
  Eigen::MatrixXd block;
  const auto res = propagate(
      plan, kernel,
      [&](int k) {
        const Grid& g = plan.grids[static_cast<std::size_t>(k)];
        kernel.block(0, k, {z}, g, block);
        GridField f(g);
        for (std::size_t b = 0; b < g.size(); ++b) f.values[b] = block(static_cast<Eigen::Index>(b), 0);
        return f;
      },
      R - 1);
  const int K = plan.last();
  const auto idx = final_grid.index_of(zp, 1e-9 * (1.0 + zp.norm()));
  for (int r = 0; r < R; ++r) {
    const GridField& f = res.terms[static_cast<std::size_t>(r)][static_cast<std::size_t>(K)];
    out.value += idx ? f.values[*idx] : f.interpolate(zp);
  }
  out.orders_used = R;
  return out;
}

}  // namespace parametrix
