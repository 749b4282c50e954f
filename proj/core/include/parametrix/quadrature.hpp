#pragma once

#include <functional>
#include <vector>

namespace parametrix::quad {

/// Nodes and weights of a one-dimensional rule on a fixed interval.
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// n-point Gauss-Legendre rule on [-1, 1].
const Rule& gauss_legendre(int n);

/// n-point Gauss-Jacobi rule on [-1, 1] for the weight (1-x)^alpha (1+x)^beta,
/// alpha, beta > -1 (Golub-Welsch).
Rule gauss_jacobi(int n, double alpha, double beta);

/// Maps a rule on [-1, 1] to [a, b].
Rule affine(const Rule& ref, double a, double b);

/// Composite Simpson weights for `intervals` equal intervals of unit length.
/// Odd interval counts close with a 3/8 panel; one interval falls back to the
/// trapezoid rule.
std::vector<double> composite_simpson(int intervals);

/// Trapezoid weights for `points` equally spaced nodes with unit spacing.
std::vector<double> trapezoid(int points);

/// Integral of f over [a, b] with 16-point Gauss-Legendre on both halves of
/// the interval. `error_estimate` (optional) receives |whole - halves|.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double* error_estimate = nullptr);

}  // namespace parametrix::quad
