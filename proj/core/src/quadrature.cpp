#include "parametrix/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace parametrix::quad {

namespace {

Rule compute_gauss_legendre(int n) {
  Rule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    // Newton on P_n from the Chebyshev-type initial guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 0 ? 1.0 : (n == 1 ? x : p1);
      const double pnm1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pnm1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[static_cast<std::size_t>(i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

}  // namespace

const Rule& gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  static std::mutex mu;
  static std::map<int, Rule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
  return it->second;
}

Rule gauss_jacobi(int n, double alpha, double beta) {
  if (n < 1) throw std::invalid_argument("gauss_jacobi: n must be positive");
  if (alpha <= -1.0 || beta <= -1.0)
    throw std::invalid_argument("gauss_jacobi: alpha and beta must exceed -1");

  // Three-term recurrence of the monic Jacobi polynomials.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  const double ab = alpha + beta;
  for (int k = 0; k < n; ++k) {
    const double denom = (2.0 * k + ab) * (2.0 * k + ab + 2.0);
    const double a_k = (k == 0 && std::abs(ab + 2.0) > 0.0)
                           ? (beta - alpha) / (ab + 2.0)
                           : (beta * beta - alpha * alpha) / denom;
    J(k, k) = a_k;
    if (k + 1 < n) {
      const double m = k + 1.0;
      const double d2 = (2.0 * m + ab) * (2.0 * m + ab);
      double b2 = 0.0;
      if (k == 0) {
        // (m + ab) cancels against (2m + ab - 1); keeps alpha + beta = -1 finite.
        b2 = 4.0 * (1.0 + alpha) * (1.0 + beta) / (d2 * (3.0 + ab));
      } else {
        const double num = 4.0 * m * (m + alpha) * (m + beta) * (m + ab);
        b2 = num / (d2 * (2.0 * m + ab + 1.0) * (2.0 * m + ab - 1.0));
      }
      const double b = std::sqrt(b2);
      J(k, k + 1) = b;
      J(k + 1, k) = b;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
  const double mu0 = std::pow(2.0, ab + 1.0) * std::tgamma(alpha + 1.0) * std::tgamma(beta + 1.0) /
                     std::tgamma(ab + 2.0);
  Rule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    rule.nodes[static_cast<std::size_t>(i)] = eig.eigenvalues()(i);
    const double v0 = eig.eigenvectors()(0, i);
    rule.weights[static_cast<std::size_t>(i)] = mu0 * v0 * v0;
  }
  return rule;
}

Rule affine(const Rule& ref, double a, double b) {
  Rule out;
  out.nodes.resize(ref.size());
  out.weights.resize(ref.size());
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    out.nodes[i] = mid + half * ref.nodes[i];
    out.weights[i] = half * ref.weights[i];
  }
  return out;
}

std::vector<double> composite_simpson(int intervals) {
  if (intervals < 1) throw std::invalid_argument("composite_simpson: need at least one interval");
  std::vector<double> w(static_cast<std::size_t>(intervals) + 1, 0.0);
  if (intervals == 1) {
    w[0] = w[1] = 0.5;
    return w;
  }
  int simpson_end = intervals;
  if (intervals % 2 == 1) simpson_end = intervals - 3;
  for (int i = 0; i + 2 <= simpson_end; i += 2) {
    w[static_cast<std::size_t>(i)] += 1.0 / 3.0;
    w[static_cast<std::size_t>(i) + 1] += 4.0 / 3.0;
    w[static_cast<std::size_t>(i) + 2] += 1.0 / 3.0;
  }
  if (intervals % 2 == 1) {
    const auto b = static_cast<std::size_t>(simpson_end);
    w[b] += 3.0 / 8.0;
    w[b + 1] += 9.0 / 8.0;
    w[b + 2] += 9.0 / 8.0;
    w[b + 3] += 3.0 / 8.0;
  }
  return w;
}

std::vector<double> trapezoid(int points) {
  if (points < 2) throw std::invalid_argument("trapezoid: need at least two points");
  std::vector<double> w(static_cast<std::size_t>(points), 1.0);
  w.front() = 0.5;
  w.back() = 0.5;
  return w;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double* error_estimate) {
  const Rule& ref = gauss_legendre(16);
  auto apply = [&](double lo, double hi) {
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    double s = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) s += ref.weights[i] * f(mid + half * ref.nodes[i]);
    return s * half;
  };
  const double whole = apply(a, b);
  const double m = 0.5 * (a + b);
  const double halves = apply(a, m) + apply(m, b);
  if (error_estimate) *error_estimate = std::abs(whole - halves);
  return halves;
}

}  // namespace parametrix::quad
