#include "oracles/finite_difference.hpp"
#include "parametrix/frozen.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace parametrix;

namespace {

ModelSpec make(const std::string& family, int d = 1, double c = 0.5, double e = 0.0) {
  ModelConfig cfg;
  cfg.family = family;
  cfg.d = d;
  cfg.c = c;
  cfg.e = e;
  return build_model(cfg);
}

MultiIndex idx1(int k) {
  MultiIndex m = MultiIndex::zero(1);
  m[0] = k;
  return m;
}

double relerr(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("integrated coefficients") {
  const ModelSpec constant = make("constant");
  const auto p = integrated_coeffs(constant, 0.0, 0.25, make_vector({0.3}));
  CHECK(p.integrated_cov(0, 0) == doctest::Approx(0.25));
  CHECK(p.integrated_drift(0) == 0.0);

  const ModelSpec s = make("sin1d");
  CHECK(integrated_coeffs(s, 0.0, 0.2, make_vector({std::numbers::pi / 2})).integrated_cov(0, 0) ==
        doctest::Approx(0.3));

  // sigma(u, y) = 1 + u via a custom field: a = 1, b + e t with sin(y) = 1.
  ModelSpec lin = make("sin1d", 1, 0.0, 0.0);
  lin.coefficients.diffusion = [](double u, const Vector&) { return Matrix(Matrix::Constant(1, 1, 1.0 + u)); };
  lin.coefficients.time_homogeneous = false;
  CHECK(integrated_coeffs(lin, 0.0, 1.0, make_vector({0.0})).integrated_cov(0, 0) ==
        doctest::Approx(1.5).epsilon(1e-14));

  // Additivity for a time-modulated model.
  const ModelSpec tm = make("sin1d", 1, 0.5, 0.25);
  const Vector y = make_vector({0.7});
  const auto a = integrated_coeffs(tm, 0.1, 0.3, y);
  const auto b = integrated_coeffs(tm, 0.3, 0.6, y);
  const auto ab = integrated_coeffs(tm, 0.1, 0.6, y);
  CHECK(std::abs(a.integrated_cov(0, 0) + b.integrated_cov(0, 0) - ab.integrated_cov(0, 0)) < 1e-14);
  CHECK(std::abs(a.integrated_drift(0) + b.integrated_drift(0) - ab.integrated_drift(0)) < 1e-14);
  CHECK_THROWS_AS(integrated_coeffs(tm, 0.3, 0.3, y), std::invalid_argument);
}

TEST_CASE("frozen density closed-form values") {
  const ModelSpec constant = make("constant");
  CHECK(frozen_density(constant, 0, 1, make_vector({0}), make_vector({0})) ==
        doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi)).epsilon(1e-14));
  CHECK(frozen_density(constant, 0, 0.25, make_vector({0}), make_vector({0.5})) ==
        doctest::Approx(0.483941449).epsilon(1e-8));

  const ModelSpec s = make("sin1d");
  const auto p = integrated_coeffs(s, 0.0, 0.1, make_vector({0.3}));
  const double w = 0.3 - 0.0 - p.integrated_drift(0);
  const double v = p.integrated_cov(0, 0);
  const double direct = std::exp(-0.5 * w * w / v) / std::sqrt(2 * std::numbers::pi * v);
  CHECK(relerr(frozen_density(s, 0, 0.1, make_vector({0}), make_vector({0.3})), direct) < 1e-12);
}

TEST_CASE("frozen density normalizes in the start point") {
  const ModelSpec s = make("sin1d");
  const double t = 0.2;
  const Vector y = make_vector({0.4});
  const auto p = integrated_coeffs(s, 0, t, y);
  const double centre = y(0) - p.integrated_drift(0);
  const double half = 8.0 * std::sqrt(t * 1.5);
  const int n = 2000;
  double total = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = centre - half + 2 * half * i / n;
    total += (i == 0 || i == n ? 0.5 : 1.0) * frozen_density(s, 0, t, make_vector({x}), y);
  }
  total *= 2 * half / n;
  CHECK(total >= 1.0 - 1e-6);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("hermite derivatives at known points") {
  const ModelSpec constant = make("constant");
  // First derivative vanishes at the mode, second equals -p / v.
  CHECK(std::abs(frozen_density_derivative(constant, 0, 1, make_vector({0.2}), make_vector({0.2}), idx1(1))) < 1e-15);
  CHECK(frozen_density_derivative(constant, 0, 1, make_vector({0}), make_vector({0}), idx1(2)) ==
        doctest::Approx(-1.0 / std::sqrt(2 * std::numbers::pi)).epsilon(1e-14));
  CHECK_THROWS_AS(frozen_density_derivative(constant, 0, 1, make_vector({0}), make_vector({0}), idx1(7)),
                  std::invalid_argument);
}

TEST_CASE("analytic derivatives match finite differences (1-d, random arguments)") {
  const ModelSpec s = make("sin1d", 1, 0.5, 0.25);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> ut(0.02, 0.5), ux(-1.0, 1.0);
  int checked = 0;
  for (int n = 0; n < 500; ++n) {
    const double t = ut(rng);
    const Vector y = make_vector({ux(rng)});
    const Vector x = make_vector({y(0) + std::sqrt(t) * 2.0 * ux(rng)});
    const double h = 1e-3 * std::sqrt(t);
    for (int k = 1; k <= 4; ++k) {
      const double analytic = frozen_density_derivative(s, 0, t, x, y, idx1(k));
      const double fd = oracle::central4(
          [&](const Vector& z) { return frozen_density_derivative(s, 0, t, z, y, idx1(k - 1)); }, x, 0, h);
      const double scale = frozen_density(s, 0, t, make_vector({y(0)}), y) * std::pow(t, -0.5 * k);
      CHECK(std::abs(analytic - fd) <= std::max(1e-5 * std::abs(analytic), 1e-8 * scale));
      ++checked;
    }
  }
  CHECK(checked == 2000);
}

TEST_CASE("analytic derivatives match finite differences (2-d, correlated covariance)") {
  ModelSpec m = make("sin2d", 2, 0.3);
  m.coefficients.diffusion = [](double, const Vector& x) {
    Matrix s(2, 2);
    s << 1.0 + 0.3 * std::sin(x(0)), 0.3, 0.3, 0.8 + 0.2 * std::cos(x(1));
    return s;
  };
  m.coefficients.diffusion_derivative = nullptr;
  m.coefficients = complete_derivatives(m.coefficients);
  const Vector y = make_vector({0.2, -0.1});
  const Vector x = make_vector({-0.1, 0.25});
  const double t = 0.3, h = 1e-3;
  for (int a = 0; a <= 3; ++a)
    for (int b = 0; a + b <= 4; ++b) {
      if (a + b == 0) continue;
      MultiIndex nu = MultiIndex::zero(2);
      nu[0] = a;
      nu[1] = b;
      MultiIndex lower = nu;
      const int axis = a > 0 ? 0 : 1;
      --lower[axis];
      const double analytic = frozen_density_derivative(m, 0, t, x, y, nu);
      const double fd = oracle::central4(
          [&](const Vector& z) { return frozen_density_derivative(m, 0, t, z, y, lower); }, x, axis, h);
      CHECK(std::abs(analytic - fd) <= std::max(1e-5 * std::abs(analytic), 1e-8));
    }
  // Sixth order is available.
  MultiIndex six = MultiIndex::zero(2);
  six[0] = 3;
  six[1] = 3;
  CHECK(std::isfinite(frozen_density_derivative(m, 0, t, x, y, six)));
}

TEST_CASE("kernel H") {
  const ModelSpec constant = make("constant");
  CHECK(kernel_H(constant, 0, 0.3, make_vector({0.1}), make_vector({0.7})) == 0.0);
  const ModelSpec s = make("sin1d");
  CHECK(kernel_H(s, 0, 0.3, make_vector({0.4}), make_vector({0.4})) == 0.0);

  // Assembly from finite-difference derivatives of p~ in x.
  const double t = 0.1;
  const Vector x = make_vector({0.2}), y = make_vector({0.5});
  auto p = [&](const Vector& z) { return frozen_density(s, 0, t, z, y); };
  const double h = 1e-3;
  const double d1 = oracle::central4(p, x, 0, h);
  const double d2 = oracle::central4_mixed(p, x, 0, 0, h);
  const auto& f = s.coefficients;
  const double expected = 0.5 * (f.diffusion(0, x)(0, 0) - f.diffusion(0, y)(0, 0)) * d2 +
                          (f.drift(0, x)(0) - f.drift(0, y)(0)) * d1;
  CHECK(relerr(kernel_H(s, 0, t, x, y), expected) < 1e-5);
}

TEST_CASE("kernel H_l") {
  const ModelSpec s = make("sin1d");
  CHECK(kernel_Hl(s, 0, 0.3, make_vector({0.1}), make_vector({0.7}), 1) == 0.0);
  CHECK(kernel_Hl(s, 0, 0.3, make_vector({0.1}), make_vector({0.7}), 2) == 0.0);
  CHECK_THROWS_AS(kernel_Hl(s, 0, 0.3, make_vector({0.1}), make_vector({0.7}), 3), std::invalid_argument);

  // sigma(t, x) = 1 + 0.5 t sin x: a = 1, b = 0, e = 0.5.
  ModelConfig cfg;
  cfg.family = "sin1d";
  cfg.b = 0.0;
  cfg.e = 0.5;
  cfg.c = 0.0;
  const ModelSpec tm = build_model(cfg);
  const Vector v = make_vector({0.3}), z = make_vector({-0.4});
  CHECK(kernel_Hl(tm, 0.2, 0.5, v, v, 1) == 0.0);
  MultiIndex two = MultiIndex::zero(1);
  two[0] = 2;
  const double expected = 0.5 * 0.5 * (std::sin(v(0)) - std::sin(z(0))) *
                          frozen_density_derivative(tm, 0.2, 0.5, v, z, two);
  CHECK(relerr(kernel_Hl(tm, 0.2, 0.5, v, z, 1), expected) < 1e-8);
  CHECK(kernel_Hl(tm, 0.2, 0.5, v, z, 2) == 0.0);
}

TEST_CASE("kernel A0 against the explicit one-dimensional expansion") {
  const ModelSpec constant = make("constant");
  CHECK(kernel_A0(constant, 0, 0.3, make_vector({0.1}), make_vector({0.7})) == 0.0);

  const ModelSpec s = make("sin1d", 1, 0.6, 0.4);
  const auto& f = s.coefficients;
  for (double vv : {-0.7, 0.1, 0.45}) {
    const double sv = 0.17, t = 0.4;
    const Vector v = make_vector({vv}), z = make_vector({0.3});
    auto der = [&](int k) { return frozen_density_derivative(s, sv, t, v, z, idx1(k)); };
    auto sd = [&](int k) { return f.diffusion_derivative(sv, v, idx1(k))(0, 0); };
    auto md = [&](int k) { return f.drift_derivative(sv, v, idx1(k))(0); };
    const double a = sd(0), a1 = sd(1), a2 = sd(2), b = md(0), b1 = md(1), b2 = md(2);
    const double at = f.diffusion(sv, z)(0, 0), bt = f.drift(sv, z)(0);
    const double f1 = der(1), f2 = der(2), f3 = der(3), f4 = der(4);
    // L g = b g' + a g'' / 2 with v-dependent a, b.
    const double Lf_1 = b1 * f1 + b * f2 + 0.5 * a1 * f2 + 0.5 * a * f3;
    const double Lf_2 = b2 * f1 + 2 * b1 * f2 + b * f3 + 0.5 * a2 * f2 + a1 * f3 + 0.5 * a * f4;
    const double LL = b * Lf_1 + 0.5 * a * Lf_2;
    const double Ltf_1 = bt * f2 + 0.5 * at * f3;
    const double Ltf_2 = bt * f3 + 0.5 * at * f4;
    const double LLt = b * Ltf_1 + 0.5 * a * Ltf_2;
    const double LtLt = bt * Ltf_1 + 0.5 * at * Ltf_2;
    const double expected = LL - 2 * LLt + LtLt;
    CHECK(relerr(kernel_A0(s, sv, t, v, z), expected) < 1e-12);

    // Orders 4 and 3 of the expansion: 1/4 (a - a~)^2 f'''' + (a - a~)(b - b~) f''' + a a'/2 f'''.
    const double top = 0.25 * (a - at) * (a - at) * f4 + (a - at) * (b - bt) * f3 + 0.5 * a * a1 * f3;
    const double rest = expected - top;
    // The remainder only involves derivatives of order <= 2.
    const double low = (b * b1 + 0.5 * a * b2) * f1 +
                       (b * b + 0.5 * b * a1 + a * b1 + 0.25 * a * a2 - 2 * b * bt +
                        bt * bt) * f2;
    CHECK(relerr(rest, low) < 1e-10);
  }
}
