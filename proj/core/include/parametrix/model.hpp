#pragma once

#include "parametrix/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace parametrix {

/// Drift m(t, x) and diffusion sigma(t, x) together with their derivatives.
///
/// Built-in families provide analytic derivatives. Custom fields may leave the
/// derivative callables empty; `complete_derivatives` fills them with
/// finite-difference probes.
struct CoefficientField {
  int dim = 1;
  std::function<Vector(double, const Vector&)> drift;
  std::function<Matrix(double, const Vector&)> diffusion;
  /// D_x^nu applied componentwise, |nu| <= 6.
  std::function<Vector(double, const Vector&, const MultiIndex&)> drift_derivative;
  std::function<Matrix(double, const Vector&, const MultiIndex&)> diffusion_derivative;
  /// d^l / dt^l, l in {1, 2}.
  std::function<Vector(double, const Vector&, int)> drift_time_derivative;
  std::function<Matrix(double, const Vector&, int)> diffusion_time_derivative;

  /// Declared ellipticity constants: sigma_lower <= theta' sigma theta <= sigma_upper.
  double sigma_lower = 1.0;
  double sigma_upper = 1.0;
  /// Declared bound on m, sigma and their first two t/x derivatives.
  double bound = 1.0;
  /// sup |m|, used to widen spatial grids.
  double drift_bound = 0.0;
  bool time_homogeneous = true;
};

/// Fills empty derivative callables with central differences (spatial step
/// 1e-2, temporal step 1e-4).
CoefficientField complete_derivatives(CoefficientField field);

enum class InnovationForm { gaussian, custom };

/// Conditional density q(t, x, .) of the normalized chain innovations.
struct InnovationFamily {
  InnovationForm form = InnovationForm::gaussian;
  std::function<double(double, const Vector&, const Vector&)> density;
  /// Dominating function psi of the derivative bounds.
  std::function<double(const Vector&)> envelope_psi;
  int s_prime = 3;
  /// Half-width of the box used when integrating against q.
  double support_halfwidth = 10.0;
  /// Smallest spatial scale of q relative to sqrt(sigma) (1 for Gaussians);
  /// sets the grid spacing of chain recursions.
  double resolution_scale = 1.0;
  std::string label = "gaussian";

  int moment_order(int d) const { return 2 * d * s_prime + 4; }
};

struct ModelSpec {
  std::string name;
  CoefficientField coefficients;
  InnovationFamily innovations;

  int dim() const { return coefficients.dim; }
  bool gaussian() const { return innovations.form == InnovationForm::gaussian; }
};

/// Built-in model description. `family` is one of
///   "constant": sigma(t,x) = sigma I, m(t,x) = m (every component)
///   "sin1d":    sigma(t,x) = a + (b + e t) sin x, m(t,x) = c tanh x
///   "sin2d":    diagonal sigma_ii = a + (b + e t) sin x_i, m_i = c tanh x_i
/// `innovation` is "gaussian" or "skewed"; a non-zero `innovation_shift`
/// moves the innovation mean away from zero (used to exercise A1).
struct ModelConfig {
  std::string family = "constant";
  int d = 1;
  double a = 1.0;
  double b = 0.5;
  double c = 0.0;
  double e = 0.0;
  double sigma = 1.0;
  double m = 0.0;
  int s_prime = 3;
  std::string innovation = "gaussian";
  double innovation_shift = 0.0;
};

ModelSpec build_model(const ModelConfig& config);

/// Density of N(0, cov) at w.
double normal_density(const Matrix& cov, const Vector& w);

/// Centered Gaussian innovations with covariance sigma(t, x).
InnovationFamily gaussian_innovations(const CoefficientField& field, int s_prime);
/// Skewed innovations: y = Lambda(t,x) zeta with i.i.d. standardized two-point
/// Gaussian-mixture components (mean 0, variance 1, third moment 0.384).
InnovationFamily skewed_innovations(const CoefficientField& field, int s_prime);
/// Gaussian innovations with covariance sigma(t, x) and mean `shift` * 1.
InnovationFamily shifted_gaussian_innovations(const CoefficientField& field, int s_prime,
                                              double shift);

/// Standardized skewed component density and its third moment.
double skewed_component_density(double z);
inline constexpr double kSkewedThirdMoment = 0.384;

/// Points at which assumptions are probed.
struct AssumptionSample {
  std::vector<double> times;
  std::vector<Vector> points;

  /// 11 times in [0, 1] times 41^d points in [-5, 5]^d.
  static AssumptionSample default_for(int d);
  std::string describe() const;
};

struct AssumptionCheck {
  std::string id;
  double max_violation = 0.0;
  bool pass = false;
  std::string note;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  std::string sample_description;

  bool all_pass() const;
  const AssumptionCheck& find(const std::string& id) const;
};

/// Evaluates A1, A2, A3, B1 and covariance consistency on `sample`. A check
/// passes iff its maximal violation is <= tol. Quadrature failures are
/// recorded on the offending check.
AssumptionReport validate_assumptions(const ModelSpec& model, const AssumptionSample& sample,
                                      double tol);

/// Default tolerance: 1e-6 for Gaussian innovations, 1e-4 otherwise.
double default_check_tolerance(const ModelSpec& model);

/// int y y' q(t, x, y) dy. Exact for Gaussian innovations; otherwise a
/// truncated tensor trapezoid rule whose tail is checked against `tol`.
Matrix innovation_covariance(const ModelSpec& model, double t, const Vector& x,
                             double tol = 1e-8);

/// int y q(t, x, y) dy by truncated quadrature.
Vector innovation_mean(const ModelSpec& model, double t, const Vector& x);

/// Symmetric positive definite square root of sigma(t, x).
Matrix diffusion_factor(const ModelSpec& model, double t, const Vector& x);

/// Symmetric square root of an SPD matrix via eigen-decomposition.
Matrix spd_sqrt(const Matrix& sigma);

/// n-th derivative of tanh.
double tanh_derivative(double x, int n);

/// Values and derivatives of the coefficients at one (t, x).
struct CoefficientJet {
  Vector m;
  Matrix sigma;
  std::array<Vector, kMaxDim> dm;
  std::array<Matrix, kMaxDim> dsigma;
  std::array<std::array<Vector, kMaxDim>, kMaxDim> d2m;
  std::array<std::array<Matrix, kMaxDim>, kMaxDim> d2sigma;
  std::array<Vector, 2> m_t;
  std::array<Matrix, 2> sigma_t;
};

enum JetParts : unsigned {
  kJetValues = 0u,
  kJetTime = 1u,
  kJetSpatial1 = 2u,
  kJetSpatial2 = 4u,
};

CoefficientJet coefficient_jet(const CoefficientField& field, double t, const Vector& x,
                               unsigned parts);

}  // namespace parametrix
