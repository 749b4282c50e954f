#pragma once

#include "parametrix/types.hpp"

#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

namespace parametrix {

/// Q_delta(u) = delta^d (1 + |u / delta|^{2 S' - 2}).
double weight_Q(double delta, const Vector& u, int s_prime, int d);

enum class EnvelopeKind { Q, phi, zeta, xi };

/// One of the weight/envelope families with its parameters.
struct EnvelopeSpec {
  EnvelopeKind kind = EnvelopeKind::phi;
  /// delta for Q, rho otherwise.
  double scale = 1.0;
  /// Decay constant of phi_C.
  double C = 1.0;
  /// Moment order S (zeta uses |z|^{S-4}).
  int S = 10;
  /// S' (Q and xi use exponent 2 S' - 2).
  int s_prime = 3;
  int d = 1;
  /// Integral of the unnormalized unit-scale shape (1 for Q).
  double normalizer = 1.0;
};

/// Builds a spec and computes its normalizer. zeta/xi normalizers come from
/// radial quadrature; shapes with exponent <= d are rejected.
EnvelopeSpec make_envelope(EnvelopeKind kind, int d, double scale, double C = 1.0, int S = 10,
                           int s_prime = 3);

/// phi_{C,rho}(u), zeta_rho(u), xi_rho(u) (scaling exponent d) or Q_delta(u).
double envelope(const EnvelopeSpec& spec, const Vector& u);

/// int_0^inf r^{d-1} / (1 + r^n) dr by quadrature.
double radial_polynomial_integral(int d, int n);

/// Surface area of the unit sphere in R^d.
double unit_sphere_area(int d);

/// Evaluation point of a weighted comparison.
struct EvalPair {
  Vector x;
  Vector y;
};

struct WeightedError {
  double value = 0.0;
  /// Unweighted sup |pA - pB| over the same pairs.
  double unweighted = 0.0;
  std::size_t argmax = 0;
  /// The weighted maximum sits on the first or last y of the window.
  bool on_boundary = false;
};

using DensityEvaluator = std::function<double(const Vector&, const Vector&)>;

/// max over pairs of Q_delta(y - x) |pA(x, y) - pB(x, y)|. Pairs are assumed
/// ordered along the window so that the first and last count as its boundary.
WeightedError weighted_sup_error(const DensityEvaluator& pA, const DensityEvaluator& pB,
                                 double delta, const std::vector<EvalPair>& pairs, int s_prime,
                                 int d);

/// Same from precomputed values.
WeightedError weighted_sup_error(const std::vector<double>& a, const std::vector<double>& b,
                                 double delta, const std::vector<EvalPair>& pairs, int s_prime,
                                 int d);

struct RatePoint {
  int n = 0;
  double h = 0.0;
  double T = 0.0;
  double error = 0.0;
  double weighted_error = 0.0;
};

struct RateReport {
  std::vector<RatePoint> points;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares of log(weighted_error) on log(n).
RateReport fit_rate(std::vector<RatePoint> points);
RateReport fit_rate(const std::vector<std::pair<double, double>>& n_error);

/// Slope, intercept and r^2 of y on x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

/// max |value| / envelope over the samples.
double fit_envelope_constant(const std::vector<std::pair<double, double>>& samples);

/// CSV with header n,h,T,error,weighted_error.
void write_rate_csv(std::ostream& os, const RateReport& report);

}  // namespace parametrix
