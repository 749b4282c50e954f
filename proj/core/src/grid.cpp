#include "parametrix/grid.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace parametrix {

namespace {

void check_dim(int d) {
  if (d < 1 || d > kMaxGridDim)
    throw std::invalid_argument("grid dimension must be 1 or 2, got " + std::to_string(d));
}

// Cubic Lagrange weights for nodes -1, 0, 1, 2 at offset t in [0, 1).
std::array<double, 4> cubic_weights(double t) {
  return {-t * (t - 1.0) * (t - 2.0) / 6.0, (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
          -(t + 1.0) * t * (t - 2.0) / 2.0, (t + 1.0) * t * (t - 1.0) / 6.0};
}

}  // namespace

Grid Grid::centered(const Vector& center, const Vector& halfwidth, int points_per_axis) {
  const int d = static_cast<int>(center.size());
  check_dim(d);
  if (points_per_axis < 3) throw std::invalid_argument("grid needs at least 3 points per axis");
  Grid g;
  g.dim = d;
  for (int a = 0; a < d; ++a) {
    const auto i = static_cast<std::size_t>(a);
    if (!(halfwidth(a) > 0.0)) throw std::invalid_argument("grid halfwidth must be positive");
    g.origin[i] = center(a) - halfwidth(a);
    g.spacing[i] = 2.0 * halfwidth(a) / (points_per_axis - 1);
    g.count[i] = points_per_axis;
  }
  return g;
}

Grid Grid::aligned(const Vector& center, const Vector& halfwidth, const Vector& anchor,
                   double base_spacing, double max_spacing) {
  const int d = static_cast<int>(center.size());
  check_dim(d);
  if (!(base_spacing > 0.0) || !(max_spacing > 0.0))
    throw std::invalid_argument("grid spacing must be positive");
  const double refine = std::ceil(base_spacing / max_spacing - 1e-12);
  const double delta = base_spacing / std::max(1.0, refine);
  Grid g;
  g.dim = d;
  for (int a = 0; a < d; ++a) {
    const auto i = static_cast<std::size_t>(a);
    const double lo = std::floor((center(a) - halfwidth(a) - anchor(a)) / delta);
    const double hi = std::ceil((center(a) + halfwidth(a) - anchor(a)) / delta);
    g.origin[i] = anchor(a) + lo * delta;
    g.spacing[i] = delta;
    g.count[i] = static_cast<int>(hi - lo) + 1;
  }
  return g;
}

std::size_t Grid::size() const {
  std::size_t n = 1;
  for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(count[static_cast<std::size_t>(a)]);
  return n;
}

std::array<int, kMaxGridDim> Grid::unflatten(std::size_t flat) const {
  std::array<int, kMaxGridDim> idx{};
  for (int a = dim - 1; a >= 0; --a) {
    const auto c = static_cast<std::size_t>(count[static_cast<std::size_t>(a)]);
    idx[static_cast<std::size_t>(a)] = static_cast<int>(flat % c);
    flat /= c;
  }
  return idx;
}

std::size_t Grid::flatten(const std::array<int, kMaxGridDim>& idx) const {
  std::size_t flat = 0;
  for (int a = 0; a < dim; ++a)
    flat = flat * static_cast<std::size_t>(count[static_cast<std::size_t>(a)]) +
           static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
  return flat;
}

Vector Grid::point(std::size_t flat) const {
  const auto idx = unflatten(flat);
  Vector p(dim);
  for (int a = 0; a < dim; ++a) p(a) = coordinate(a, idx[static_cast<std::size_t>(a)]);
  return p;
}

std::vector<Vector> Grid::points() const {
  std::vector<Vector> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(point(i));
  return out;
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim; ++a) v *= spacing[static_cast<std::size_t>(a)];
  return v;
}

std::vector<double> Grid::trapezoid_weights() const {
  std::vector<double> w(size(), cell_volume());
  for (std::size_t f = 0; f < w.size(); ++f) {
    const auto idx = unflatten(f);
    for (int a = 0; a < dim; ++a) {
      const int i = idx[static_cast<std::size_t>(a)];
      if (i == 0 || i == count[static_cast<std::size_t>(a)] - 1) w[f] *= 0.5;
    }
  }
  return w;
}

std::optional<std::size_t> Grid::index_of(const Vector& p, double tol) const {
  std::array<int, kMaxGridDim> idx{};
  for (int a = 0; a < dim; ++a) {
    const auto i = static_cast<std::size_t>(a);
    const double r = (p(a) - origin[i]) / spacing[i];
    const double k = std::round(r);
    if (std::abs(r - k) * spacing[i] > tol || k < 0 || k >= count[i]) return std::nullopt;
    idx[i] = static_cast<int>(k);
  }
  return flatten(idx);
}

double GridField::integral() const {
  const auto w = grid.trapezoid_weights();
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += w[i] * values[i];
  return s;
}

double GridField::sup_norm() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double GridField::interpolate(const Vector& p) const {
  const int d = grid.dim;
  std::array<int, kMaxGridDim> base{};
  std::array<std::array<double, 4>, kMaxGridDim> w{};
  for (int a = 0; a < d; ++a) {
    const auto i = static_cast<std::size_t>(a);
    const double r = (p(a) - grid.origin[i]) / grid.spacing[i];
    if (r < 0.0 || r > grid.count[i] - 1) return 0.0;
    int k = static_cast<int>(std::floor(r));
    k = std::clamp(k, 1, grid.count[i] - 3);
    base[i] = k - 1;
    w[i] = cubic_weights(r - k);
  }
  double s = 0.0;
  if (d == 1) {
    for (int j = 0; j < 4; ++j)
      s += w[0][static_cast<std::size_t>(j)] * values[static_cast<std::size_t>(base[0] + j)];
    return s;
  }
  for (int j0 = 0; j0 < 4; ++j0)
    for (int j1 = 0; j1 < 4; ++j1) {
      const std::size_t f = grid.flatten({base[0] + j0, base[1] + j1});
      s += w[0][static_cast<std::size_t>(j0)] * w[1][static_cast<std::size_t>(j1)] * values[f];
    }
  return s;
}

Vector GridField::gradient_at(std::size_t flat) const {
  const int d = grid.dim;
  const auto idx = grid.unflatten(flat);
  Vector g = Vector::Zero(d);
  for (int a = 0; a < d; ++a) {
    const auto ia = static_cast<std::size_t>(a);
    const int i = idx[ia];
    const int n = grid.count[ia];
    auto val = [&](int k) {
      auto j = idx;
      j[ia] = k;
      return values[grid.flatten(j)];
    };
    const double h = grid.spacing[ia];
    if (i >= 2 && i <= n - 3) {
      g(a) = (val(i - 2) - 8.0 * val(i - 1) + 8.0 * val(i + 1) - val(i + 2)) / (12.0 * h);
    } else if (i >= 1 && i <= n - 2) {
      g(a) = (val(i + 1) - val(i - 1)) / (2.0 * h);
    } else if (i == 0) {
      g(a) = (val(1) - val(0)) / h;
    } else {
      g(a) = (val(n - 1) - val(n - 2)) / h;
    }
  }
  return g;
}

void write_csv(std::ostream& os, const GridField& field, const std::string& value_name) {
  for (int a = 0; a < field.grid.dim; ++a) os << "y" << (a + 1) << ",";
  os << value_name << "\n";
  os << std::setprecision(12);
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    const Vector p = field.grid.point(i);
    for (int a = 0; a < field.grid.dim; ++a) os << p(a) << ",";
    os << field.values[i] << "\n";
  }
}

}  // namespace parametrix
