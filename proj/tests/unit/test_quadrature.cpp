#include "parametrix/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

using namespace parametrix;

TEST_CASE("gauss-legendre integrates polynomials up to degree 2n-1") {
  const auto& rule = quad::gauss_legendre(8);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) s += rule.weights[i] * std::pow(rule.nodes[i], 14);
  CHECK(s == doctest::Approx(2.0 / 15.0).epsilon(1e-13));
  const double wsum = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
  CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("gauss-jacobi with alpha = -1/2 integrates the endpoint singularity") {
  // int_{-1}^{1} (1-x)^{-1/2} dx = 2 sqrt(2)
  const auto rule = quad::gauss_jacobi(12, -0.5, 0.0);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) s += rule.weights[i];
  CHECK(s == doctest::Approx(2.0 * std::numbers::sqrt2).epsilon(1e-12));

  // int (1-x)^{-1/2} (1+x)^{-1/2} x^2 dx = pi / 2
  const auto cheb = quad::gauss_jacobi(6, -0.5, -0.5);
  double c = 0.0;
  for (std::size_t i = 0; i < cheb.size(); ++i) c += cheb.weights[i] * cheb.nodes[i] * cheb.nodes[i];
  CHECK(c == doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-12));
}

TEST_CASE("composite simpson handles even, odd and single intervals") {
  for (int n : {1, 2, 3, 5, 8}) {
    const auto w = quad::composite_simpson(n);
    const double h = 1.0 / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double x = i * h;
      s += w[static_cast<std::size_t>(i)] * h * (n == 1 ? x : x * x * x);
    }
    CHECK(s == doctest::Approx(n == 1 ? 0.5 : 0.25).epsilon(1e-13));
  }
  CHECK_THROWS(quad::composite_simpson(0));
}

TEST_CASE("adaptive gauss-legendre reports an error estimate") {
  double err = 1.0;
  const double v = quad::integrate([](double x) { return std::exp(x); }, 0.0, 1.0, &err);
  CHECK(v == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
  CHECK(err < 1e-12);
}
