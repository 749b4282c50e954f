#include "parametrix/chain.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace parametrix {

namespace {

constexpr double kMassLeakage = 1e-2;
// Grid spacing relative to the narrowest one-step scale sqrt(h sigma_lower).
constexpr double kStepResolution = 0.6;

void check_indices(const Discretization& disc, int j, int k) {
  if (!(0 <= j && j < k && k <= disc.n)) {
    std::ostringstream os;
    os << "time indices must satisfy 0 <= j < k <= n (got j = " << j << ", k = " << k
       << ", n = " << disc.n << ")";
    throw std::invalid_argument(os.str());
  }
}

void check_mass(const GridField& f, int step) {
  const double mass = f.integral();
  if (mass < 1.0 - kMassLeakage) {
    std::ostringstream os;
    os << "mass leakage " << 1.0 - mass << " after step " << step
       << "; enlarge the grid (kappa or half-width)";
    throw NumericalError(os.str());
  }
}

// Frozen one-step density of the increment u = z - x for the chain frozen at y.
double frozen_increment_density(const ModelSpec& model, const Discretization& disc, int l,
                                const Vector& y, const Vector& u) {
  const double h = disc.h;
  const double t = disc.time(l);
  const Vector m = model.coefficients.drift(t, y);
  const Vector xi = (u - m * h) / std::sqrt(h);
  return std::pow(h, -0.5 * model.dim()) * model.innovations.density(t, y, xi);
}

// Sparse transition matrix M(b, a) = kernel(w_a, z_b) over pairs within `reach`.
template <class Kernel>
Eigen::SparseMatrix<double, Eigen::RowMajor> transition_matrix(const Grid& grid, double reach,
                                                               Kernel&& kernel) {
  const auto pts = grid.points();
  std::vector<Eigen::Triplet<double>> trip;
  const int d = grid.dim;
  for (std::size_t b = 0; b < grid.size(); ++b) {
    const auto idx = grid.unflatten(b);
    std::array<int, kMaxGridDim> lo{}, hi{};
    for (int a = 0; a < d; ++a) {
      const auto i = static_cast<std::size_t>(a);
      const int r = static_cast<int>(std::ceil(reach / grid.spacing[i]));
      lo[i] = std::max(0, idx[i] - r);
      hi[i] = std::min(grid.count[i] - 1, idx[i] + r);
    }
    std::array<int, kMaxGridDim> cur = lo;
    while (true) {
      const std::size_t a = grid.flatten(cur);
      const double v = kernel(pts[a], pts[b]);
      if (v != 0.0) trip.emplace_back(static_cast<int>(b), static_cast<int>(a), v);
      int ax = d - 1;
      for (; ax >= 0; --ax) {
        const auto i = static_cast<std::size_t>(ax);
        if (++cur[i] <= hi[i]) break;
        cur[i] = lo[i];
      }
      if (ax < 0) break;
    }
  }
  const auto n = static_cast<int>(grid.size());
  Eigen::SparseMatrix<double, Eigen::RowMajor> M(n, n);
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

double step_reach(const ModelSpec& model, const Discretization& disc) {
  return model.innovations.support_halfwidth * std::sqrt(disc.h) +
         model.coefficients.drift_bound * disc.h;
}

// Density of the frozen increment sum S = sum_{l=j}^{k-1} (m(l h, y) h + sqrt(h) xi_l)
// on a grid holding `anchor` as a node.
GridField frozen_sum_field(const ModelSpec& model, const Discretization& disc, int j, int k,
                           const Vector& y, const Vector& anchor) {
  const auto& f = model.coefficients;
  Vector centre = Vector::Zero(model.dim());
  for (int l = j; l < k; ++l) centre += f.drift(disc.time(l), y) * disc.h;
  const Grid grid = chain_grid(model, disc, centre, k - j, anchor);
  const auto pts = grid.points();
  GridField p(grid);
  for (std::size_t b = 0; b < grid.size(); ++b)
    p.values[b] = frozen_increment_density(model, disc, j, y, pts[b]);
  const auto trap = grid.trapezoid_weights();
  Eigen::SparseMatrix<double, Eigen::RowMajor> M;
  for (int l = j + 1; l < k; ++l) {
    if (l == j + 1 || !f.time_homogeneous)
      M = transition_matrix(grid, step_reach(model, disc), [&](const Vector& w, const Vector& z) {
        return frozen_increment_density(model, disc, l, y, Vector(z - w));
      });
    Eigen::VectorXd src(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t a = 0; a < grid.size(); ++a) src(static_cast<Eigen::Index>(a)) = trap[a] * p.values[a];
    const Eigen::VectorXd next = M * src;
    for (std::size_t b = 0; b < grid.size(); ++b) p.values[b] = next(static_cast<Eigen::Index>(b));
  }
  return p;
}

double value_at(const GridField& f, const Vector& y) {
  const auto idx = f.grid.index_of(y, 1e-9 * (1.0 + y.norm()));
  return idx ? f.values[*idx] : f.interpolate(y);
}

// Integrated frozen coefficients over steps l = a..b-1 at y.
void frozen_sums(const ModelSpec& model, const Discretization& disc, int a, int b, const Vector& y,
                 Vector& M, Matrix& S) {
  const auto& f = model.coefficients;
  const int d = model.dim();
  M = Vector::Zero(d);
  S = Matrix::Zero(d, d);
  if (b <= a) return;
  if (f.time_homogeneous) {
    M = (b - a) * disc.h * f.drift(disc.time(a), y);
    S = (b - a) * disc.h * f.diffusion(disc.time(a), y);
    return;
  }
  for (int l = a; l < b; ++l) {
    M += disc.h * f.drift(disc.time(l), y);
    S += disc.h * f.diffusion(disc.time(l), y);
  }
}

// Slices t_i = t0 + i h, i = 0..K, weights h for 0 <= i < k, point mass at x.
SlicePlan uniform_plan(const ModelSpec& model, const Vector& x, double t0, double h, int K,
                       const Grid& final_grid, const QuadratureSpec& quad) {
  SlicePlan plan;
  plan.start = x;
  plan.delta_start = true;
  plan.times.resize(static_cast<std::size_t>(K) + 1);
  plan.grids.resize(static_cast<std::size_t>(K) + 1);
  for (int i = 0; i <= K; ++i) plan.times[static_cast<std::size_t>(i)] = t0 + i * h;
  for (int i = 1; i <= K; ++i)
    plan.grids[static_cast<std::size_t>(i)] =
        i == K ? final_grid : slice_grid(model, x, i * h, quad.kappa, quad.points_per_axis);
  plan.grids[0] = plan.grids[1];
  plan.weights = Eigen::MatrixXd::Zero(K + 1, K + 1);
  for (int k = 1; k <= K; ++k)
    for (int i = 0; i < k; ++i) plan.weights(k, i) = h;
  return plan;
}

}  // namespace

Discretization Discretization::from_horizon(int n, double T) {
  Discretization d;
  d.n = n;
  d.T = T;
  d.h = T / n;
  d.validate();
  return d;
}

void Discretization::validate() const {
  if (n < 2) throw std::invalid_argument("discretization needs n >= 2");
  if (!(h > 0.0)) throw std::invalid_argument("discretization needs h > 0");
  if (std::abs(n * h - T) > 1e-12 * std::max(1.0, T))
    throw std::invalid_argument("discretization needs T = n h");
  if (T > 1.0 + 1e-12) throw std::invalid_argument("discretization needs T = n h <= 1");
}

double one_step_density(const ModelSpec& model, const Discretization& disc, int j, const Vector& x,
                        const Vector& z) {
  if (j < 0 || j >= disc.n) throw std::invalid_argument("one_step_density: need 0 <= j < n");
  const double h = disc.h;
  const double t = disc.time(j);
  const Vector m = model.coefficients.drift(t, x);
  const Vector xi = (z - x - m * h) / std::sqrt(h);
  return std::pow(h, -0.5 * model.dim()) * model.innovations.density(t, x, xi);
}

Grid chain_grid(const ModelSpec& model, const Discretization& disc, const Vector& x, int steps,
                const std::optional<Vector>& anchor, double kappa, int min_points) {
  const auto& f = model.coefficients;
  const int d = model.dim();
  if (d > kMaxGridDim) throw std::invalid_argument("grid-based evaluation supports d <= 2");
  const double elapsed = steps * disc.h;
  const double hw = kappa * std::sqrt(elapsed * f.sigma_upper) + f.drift_bound * elapsed;
  const double fine = kStepResolution * model.innovations.resolution_scale *
                      std::sqrt(disc.h * f.sigma_lower);
  const double spacing = std::min(fine, 2.0 * hw / (min_points - 1));
  const Vector half = Vector::Constant(d, hw);
  if (anchor) return Grid::aligned(x, half, *anchor, spacing, spacing);
  const int points = 2 * static_cast<int>(std::ceil(hw / spacing)) + 1;
  return Grid::centered(x, half, points);
}

DensityField chain_density(const ModelSpec& model, const Discretization& disc, int j, int k,
                           const Vector& x, const Grid& grid) {
  disc.validate();
  check_indices(disc, j, k);
  if (grid.dim != model.dim()) throw std::invalid_argument("grid dimension does not match model");
  const auto pts = grid.points();
  const auto trap = grid.trapezoid_weights();
  GridField p(grid);
  for (std::size_t b = 0; b < grid.size(); ++b) p.values[b] = one_step_density(model, disc, j, x, pts[b]);
  check_mass(p, j + 1);
  Eigen::SparseMatrix<double, Eigen::RowMajor> M;
  for (int i = j + 1; i < k; ++i) {
    if (i == j + 1 || !model.coefficients.time_homogeneous)
      M = transition_matrix(grid, step_reach(model, disc), [&](const Vector& w, const Vector& z) {
        return one_step_density(model, disc, i, w, z);
      });
    Eigen::VectorXd src(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t a = 0; a < grid.size(); ++a) src(static_cast<Eigen::Index>(a)) = trap[a] * p.values[a];
    const Eigen::VectorXd next = M * src;
    for (std::size_t b = 0; b < grid.size(); ++b) p.values[b] = next(static_cast<Eigen::Index>(b));
    check_mass(p, i + 1);
  }
  return {j, k, x, std::move(p)};
}

double frozen_chain_density(const ModelSpec& model, const Discretization& disc, int j, int k,
                            const Vector& x, const Vector& y) {
  check_indices(disc, j, k);
  if (!model.gaussian()) return frozen_chain_density_recursion(model, disc, j, k, x, y);
  Vector M;
  Matrix S;
  frozen_sums(model, disc, j, k, y, M, S);
  return normal_density(S, Vector(y - x - M));
}

double frozen_chain_density_recursion(const ModelSpec& model, const Discretization& disc, int j,
                                      int k, const Vector& x, const Vector& y) {
  check_indices(disc, j, k);
  const Vector u = y - x;
  return value_at(frozen_sum_field(model, disc, j, k, y, u), u);
}

double kernel_Hh(const ModelSpec& model, const Discretization& disc, int j, int k,
                 const Vector& x, const Vector& y) {
  check_indices(disc, j, k);
  const auto& f = model.coefficients;
  const double h = disc.h;
  const double t = disc.time(j);
  if (model.gaussian()) {
    Vector M;
    Matrix S;
    frozen_sums(model, disc, j + 1, k, y, M, S);
    const Vector mx = f.drift(t, x), my = f.drift(t, y);
    const Matrix sx = f.diffusion(t, x), sy = f.diffusion(t, y);
    return (normal_density(Matrix(sx * h + S), Vector(y - x - mx * h - M)) -
            normal_density(Matrix(sy * h + S), Vector(y - x - my * h - M))) /
           h;
  }
  auto frozen_step = [&](const Vector& z) {
    return frozen_increment_density(model, disc, j, y, Vector(z - x));
  };
  if (k == j + 1) return (one_step_density(model, disc, j, x, y) - frozen_step(y)) / h;
  // p~_h(j+1, k, z, y) = density of the frozen increment sum at y - z.
  const GridField sum = frozen_sum_field(model, disc, j + 1, k, y, Vector(y - x));
  const Grid grid = chain_grid(model, disc, x, 1, x);
  const auto pts = grid.points();
  const auto trap = grid.trapezoid_weights();
  double total = 0.0;
  for (std::size_t b = 0; b < grid.size(); ++b) {
    const double diff = one_step_density(model, disc, j, x, pts[b]) - frozen_step(pts[b]);
    if (diff == 0.0) continue;
    total += trap[b] * diff * sum.interpolate(Vector(y - pts[b]));
  }
  return total / h;
}

DiscreteKernel::DiscreteKernel(const ModelSpec& model, const Discretization& disc, int j0)
    : model_(&model), disc_(disc), j0_(j0) {
  if (!model.gaussian())
    throw std::invalid_argument("the discrete kernel grid path requires Gaussian innovations");
}

double DiscreteKernel::width(int i, int k) const {
  return std::sqrt((k - i) * disc_.h * model_->coefficients.sigma_lower);
}

double DiscreteKernel::reach(int i, int k) const {
  const double dt = (k - i) * disc_.h;
  const auto& f = model_->coefficients;
  return std::sqrt(64.0 * dt * f.sigma_upper) + f.drift_bound * dt;
}

void DiscreteKernel::block(int i, int k, const std::vector<Vector>& src, const Grid& dst,
                           Eigen::MatrixXd& out) const {
  const auto& f = model_->coefficients;
  const int ji = j0_ + i, jk = j0_ + k;
  const double h = disc_.h;
  const double t = disc_.time(ji);
  const auto targets = dst.points();
  const auto nd = static_cast<Eigen::Index>(targets.size());
  const auto ns = static_cast<Eigen::Index>(src.size());
  out.resize(nd, ns);
  std::vector<Vector> M(targets.size()), my(targets.size());
  std::vector<Matrix> S(targets.size()), sy(targets.size());
  for (std::size_t b = 0; b < targets.size(); ++b) {
    frozen_sums(*model_, disc_, ji + 1, jk, targets[b], M[b], S[b]);
    my[b] = f.drift(t, targets[b]);
    sy[b] = f.diffusion(t, targets[b]);
  }
  for (Eigen::Index a = 0; a < ns; ++a) {
    const Vector& z = src[static_cast<std::size_t>(a)];
    const Vector mz = f.drift(t, z);
    const Matrix sz = f.diffusion(t, z);
    for (Eigen::Index b = 0; b < nd; ++b) {
      const auto bb = static_cast<std::size_t>(b);
      const Vector& y = targets[bb];
      if (mz == my[bb] && sz == sy[bb]) {
        out(b, a) = 0.0;
        continue;
      }
      if (z.size() == 1) {
        const double v1 = sz(0, 0) * h + S[bb](0, 0), v2 = sy[bb](0, 0) * h + S[bb](0, 0);
        const double w1 = y(0) - z(0) - mz(0) * h - M[bb](0);
        const double w2 = y(0) - z(0) - my[bb](0) * h - M[bb](0);
        out(b, a) = (std::exp(-0.5 * w1 * w1 / v1) / std::sqrt(2.0 * std::numbers::pi * v1) -
                     std::exp(-0.5 * w2 * w2 / v2) / std::sqrt(2.0 * std::numbers::pi * v2)) /
                    h;
        continue;
      }
      out(b, a) = (normal_density(Matrix(sz * h + S[bb]), Vector(y - z - mz * h - M[bb])) -
                   normal_density(Matrix(sy[bb] * h + S[bb]), Vector(y - z - my[bb] * h - M[bb]))) /
                  h;
    }
  }
}

SeriesResult discrete_parametrix_field(const ModelSpec& model, const Discretization& disc, int j,
                                       int k, const Vector& x, int R, const Grid& grid,
                                       const QuadratureSpec& quad) {
  disc.validate();
  check_indices(disc, j, k);
  if (R < 0 || R > k - j) throw std::invalid_argument("discrete parametrix: need 0 <= R <= k - j");
  if (!model.gaussian())
    throw std::invalid_argument("discrete parametrix field requires Gaussian innovations");
  const int K = k - j;
  const SlicePlan plan = uniform_plan(model, x, disc.time(j), disc.h, K, grid, quad);
  const DiscreteKernel kernel(model, disc, j);
  const auto res = propagate(
      plan, kernel,
      [&](int i) {
        const Grid& g = plan.grids[static_cast<std::size_t>(i)];
        GridField f(g);
        for (std::size_t b = 0; b < g.size(); ++b)
          f.values[b] = frozen_chain_density(model, disc, j, j + i, x, g.point(b));
        return f;
      },
      R);
  SeriesResult out;
  for (int r = 0; r <= R; ++r) {
    out.terms.push_back(res.terms[static_cast<std::size_t>(r)][static_cast<std::size_t>(K)]);
    out.term_norms.push_back(out.terms.back().sup_norm());
  }
  out.density = GridField(grid);
  for (const auto& t : out.terms)
    for (std::size_t b = 0; b < grid.size(); ++b) out.density.values[b] += t.values[b];
  out.orders_used = R;
  return out;
}

double discrete_parametrix_density(const ModelSpec& model, const Discretization& disc, int j,
                                   int k, const Vector& x, const Vector& y, int R,
                                   const QuadratureSpec& quad) {
  check_indices(disc, j, k);
  if (R < 0 || R > k - j) throw std::invalid_argument("discrete parametrix: need 0 <= R <= k - j");
  if (R == 0) return frozen_chain_density(model, disc, j, k, x, y);
  const Grid grid = evaluation_grid(model, disc.time(j), disc.time(k), x, y, quad);
  return value_at(discrete_parametrix_field(model, disc, j, k, x, R, grid, quad).density, y);
}

SlicePlan mesh_plan(const ModelSpec& model, const Discretization& disc, const Vector& x,
                    const Grid& final_grid, const QuadratureSpec& quad) {
  disc.validate();
  return uniform_plan(model, x, 0.0, disc.h, disc.n, final_grid, quad);
}

SeriesResult pd_field(const ModelSpec& model, const Discretization& disc, const Vector& x,
                      const TruncationPolicy& policy, const QuadratureSpec& quad,
                      const Grid& grid) {
  if (policy.max_order_R < 0) throw std::invalid_argument("max_order_R must be >= 0");
  // Orders above n vanish: an r-fold term needs r distinct mesh times.
  TruncationPolicy capped = policy;
  capped.max_order_R = std::min(policy.max_order_R, disc.n);
  const SlicePlan plan = mesh_plan(model, disc, x, grid, quad);
  const FrozenKernel kernel(model, plan.times, FrozenKernelKind::H);
  const auto res = propagate(
      plan, kernel,
      [&](int i) {
        return frozen_field(model, 0.0, plan.times[static_cast<std::size_t>(i)], x,
                            plan.grids[static_cast<std::size_t>(i)]);
      },
      capped.max_order_R);
  std::vector<GridField> terms;
  for (int r = 0; r <= capped.max_order_R; ++r)
    terms.push_back(res.terms[static_cast<std::size_t>(r)][static_cast<std::size_t>(disc.n)]);
  return summarize_series(std::move(terms), capped, x, std::sqrt(disc.T), model.dim());
}

DensityValue pd_density(const ModelSpec& model, const Discretization& disc, const Vector& x,
                        const Vector& y, const TruncationPolicy& policy,
                        const QuadratureSpec& quad) {
  disc.validate();
  const Grid grid = evaluation_grid(model, 0.0, disc.T, x, y, quad);
  const auto res = pd_field(model, disc, x, policy, quad, grid);
  DensityValue v;
  v.value = value_at(res.density, y);
  v.truncation_estimate = res.truncation_estimate;
  v.orders_used = res.orders_used;
  v.converged = res.converged;
  return v;
}

CorrectionReport correction_terms(const ModelSpec& model, const Discretization& disc,
                                  const Vector& x, const Vector& y, int R_phi,
                                  const QuadratureSpec& quad) {
  disc.validate();
  if (disc.n < 4) throw std::invalid_argument("correction terms need n >= 4");
  if (R_phi < 1) throw std::invalid_argument("correction terms need R_phi >= 1");
  const int n = disc.n;
  const Grid grid = evaluation_grid(model, 0.0, disc.T, x, y, quad);
  const TruncationPolicy policy;
  CorrectionReport rep;
  rep.n = n;
  rep.h = disc.h;
  rep.T = disc.T;

  // p(0, i h, x, .) on the mesh slices.
  SlicePlan plan = mesh_plan(model, disc, x, grid, quad);
  std::vector<GridField> p(static_cast<std::size_t>(n) + 1);
  for (int i = 1; i <= n; ++i) {
    const auto res = diffusion_density_field(model, 0.0, plan.times[static_cast<std::size_t>(i)],
                                             x, policy, quad, plan.grids[static_cast<std::size_t>(i)]);
    rep.converged = rep.converged && res.converged;
    p[static_cast<std::size_t>(i)] = res.density;
  }
  rep.p = value_at(p.back(), y);

  const auto pd = pd_field(model, disc, x, policy, quad, grid);
  rep.converged = rep.converged && pd.converged;
  rep.pd = value_at(pd.density, y);
  rep.p_minus_pd = rep.p - rep.pd;

  // C = p (x)_h K for K = H_1, A_0; then C (x)_h Phi with Phi = sum_{r <= R_phi} H^(r).
  const std::array<FrozenKernelKind, 2> kinds{FrozenKernelKind::H1, FrozenKernelKind::A0};
  SlicePlan phi_plan = plan;
  phi_plan.delta_start = false;
  const FrozenKernel H(model, plan.times, FrozenKernelKind::H);
  for (std::size_t c = 0; c < kinds.size(); ++c) {
    const FrozenKernel K(model, plan.times, kinds[c]);
    const auto C = propagate(plan, K, [&](int i) { return p[static_cast<std::size_t>(i)]; }, 1);
    rep.terms[c] = 0.5 * disc.h * value_at(C.terms[1][static_cast<std::size_t>(n)], y);
    const auto D = propagate(
        phi_plan, H, [&](int i) { return C.terms[1][static_cast<std::size_t>(i)]; }, R_phi);
    double phi = 0.0;
    for (int r = 1; r <= R_phi; ++r)
      phi += value_at(D.terms[static_cast<std::size_t>(r)][static_cast<std::size_t>(n)], y);
    rep.terms[c + 2] = 0.5 * disc.h * phi;
  }
  rep.residual = rep.p_minus_pd;
  for (double t : rep.terms) rep.residual -= t;
  return rep;
}

}  // namespace parametrix
