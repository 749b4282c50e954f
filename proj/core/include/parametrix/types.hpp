#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace parametrix {

/// Largest state dimension the value types can hold without heap allocation.
/// Grid-based components (series, chain) accept d <= kMaxGridDim only.
inline constexpr int kMaxDim = 4;
inline constexpr int kMaxGridDim = 2;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// Spatial multi-index nu = (nu_1, ..., nu_d).
struct MultiIndex {
  std::array<int, kMaxDim> v{};
  int dim = 1;

  static MultiIndex zero(int d) {
    MultiIndex m;
    m.dim = d;
    return m;
  }
  static MultiIndex unit(int d, int i) {
    MultiIndex m = zero(d);
    m.v[static_cast<std::size_t>(i)] = 1;
    return m;
  }
  int order() const {
    int s = 0;
    for (int i = 0; i < dim; ++i) s += v[static_cast<std::size_t>(i)];
    return s;
  }
  int operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
  int& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
  MultiIndex plus(int i) const {
    MultiIndex m = *this;
    ++m[i];
    return m;
  }
  bool operator==(const MultiIndex& o) const {
    if (dim != o.dim) return false;
    for (int i = 0; i < dim; ++i)
      if (v[static_cast<std::size_t>(i)] != o.v[static_cast<std::size_t>(i)]) return false;
    return true;
  }
};

/// Raised when a computation cannot deliver a trustworthy number
/// (non-finite integrand, truncated tail too heavy, grid leakage).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Vector make_vector(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline Vector constant_vector(int d, double value) {
  return Vector::Constant(d, value);
}

}  // namespace parametrix
