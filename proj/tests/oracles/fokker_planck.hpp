#pragma once

// Crank-Nicolson solver of the one-dimensional forward equation
//   dp/dt = -d/dy (m p) + 1/2 d^2/dy^2 (sigma p)
// used as an independent reference for diffusion densities.

#include "parametrix/model.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace oracle {

struct FokkerPlanckSolution {
  double lo = 0.0;
  double dx = 0.0;
  std::vector<double> p;

  double at(double y) const {
    const double r = (y - lo) / dx;
    const auto i = static_cast<std::size_t>(std::floor(r));
    if (i + 1 >= p.size()) return 0.0;
    const double f = r - static_cast<double>(i);
    return (1.0 - f) * p[i] + f * p[i + 1];
  }
};

/// Starts from the Euler Gaussian N(x + m t0, sigma t0) at t0 (moment error
/// O(t0^2)), takes four implicit Euler half steps, then Crank-Nicolson steps
/// of size growth * t (capped at max_dt).
inline FokkerPlanckSolution solve_fokker_planck(const parametrix::ModelSpec& model, double x,
                                                double t, double lo = -5.0, double hi = 5.0,
                                                double dx = 2.5e-3, double t0 = 1e-3,
                                                double growth = 0.01, double max_dt = 1e-3) {
  using parametrix::Vector;
  const auto& f = model.coefficients;
  const auto n = static_cast<std::size_t>(std::lround((hi - lo) / dx)) + 1;
  std::vector<double> y(n), p(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = lo + dx * static_cast<double>(i);
  const Vector xv = parametrix::make_vector({x});
  const double mean = x + f.drift(0.0, xv)(0) * t0;
  const double var = f.diffusion(0.0, xv)(0, 0) * t0;
  for (std::size_t i = 0; i < n; ++i)
    p[i] = std::exp(-0.5 * (y[i] - mean) * (y[i] - mean) / var) / std::sqrt(2 * std::numbers::pi * var);

  // Operator rows: (L p)_i = a_i p_{i-1} + b_i p_i + c_i p_{i+1}.
  std::vector<double> a(n), b(n), c(n), rhs(n), cp(n), dp(n);
  auto build = [&](double time) {
    std::vector<double> m(n), s(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Vector yi = parametrix::make_vector({y[i]});
      m[i] = f.drift(time, yi)(0);
      s[i] = f.diffusion(time, yi)(0, 0);
    }
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = i > 0 ? (m[i - 1] / (2 * dx) + 0.5 * s[i - 1] / (dx * dx)) : 0.0;
      b[i] = -s[i] / (dx * dx);
      c[i] = i + 1 < n ? (-m[i + 1] / (2 * dx) + 0.5 * s[i + 1] / (dx * dx)) : 0.0;
    }
  };
  // (I - theta dt L) p_new = (I + (1 - theta) dt L) p_old, Dirichlet zero ends.
  auto step = [&](double time, double dt, double theta) {
    build(time + 0.5 * dt);
    for (std::size_t i = 0; i < n; ++i) {
      double lp = b[i] * p[i];
      if (i > 0) lp += a[i] * p[i - 1];
      if (i + 1 < n) lp += c[i] * p[i + 1];
      rhs[i] = p[i] + (1.0 - theta) * dt * lp;
    }
    // Thomas algorithm.
    for (std::size_t i = 0; i < n; ++i) {
      const double ai = -theta * dt * a[i], bi = 1.0 - theta * dt * b[i], ci = -theta * dt * c[i];
      const double denom = i == 0 ? bi : bi - ai * cp[i - 1];
      cp[i] = ci / denom;
      dp[i] = (rhs[i] - (i == 0 ? 0.0 : ai * dp[i - 1])) / denom;
    }
    for (std::size_t i = n; i-- > 0;) p[i] = dp[i] - (i + 1 < n ? cp[i] * p[i + 1] : 0.0);
    p.front() = p.back() = 0.0;
  };

  double time = t0;
  const double first = std::min(growth * t0, max_dt);
  for (int k = 0; k < 4; ++k) {
    step(time, 0.5 * first, 1.0);
    time += 0.5 * first;
  }
  while (time < t - 1e-15) {
    const double dt = std::min({growth * time, max_dt, t - time});
    step(time, dt, 0.5);
    time += dt;
  }
  return {lo, dx, p};
}

}  // namespace oracle
