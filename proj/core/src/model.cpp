#include "parametrix/model.hpp"

#include "parametrix/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace parametrix {

namespace {

constexpr double kSpatialFdStep = 1e-2;
constexpr double kTimeFdStep = 1e-4;

// Derivatives of tanh as polynomials in T = tanh x: P_{k+1} = P_k'(T) (1 - T^2).
std::vector<std::vector<double>> tanh_polynomials(int max_order) {
  std::vector<std::vector<double>> polys;
  polys.push_back({0.0, 1.0});
  for (int k = 0; k < max_order; ++k) {
    const auto& p = polys.back();
    std::vector<double> dp(p.size() > 1 ? p.size() - 1 : 1, 0.0);
    for (std::size_t i = 1; i < p.size(); ++i) dp[i - 1] = static_cast<double>(i) * p[i];
    std::vector<double> next(dp.size() + 2, 0.0);
    for (std::size_t i = 0; i < dp.size(); ++i) {
      next[i] += dp[i];
      next[i + 2] -= dp[i];
    }
    polys.push_back(next);
  }
  return polys;
}

// Nested central differences D^nu f(x) with step h.
template <class F>
auto central_difference(const F& f, const Vector& x, const MultiIndex& nu, double h)
    -> decltype(f(x)) {
  for (int i = 0; i < nu.dim; ++i) {
    if (nu[i] > 0) {
      MultiIndex lower = nu;
      --lower[i];
      Vector xp = x;
      Vector xm = x;
      xp(i) += h;
      xm(i) -= h;
      return (central_difference(f, xp, lower, h) - central_difference(f, xm, lower, h)) /
             (2.0 * h);
    }
  }
  return f(x);
}

double gaussian_density(const Matrix& cov, const Vector& y) {
  const int d = static_cast<int>(y.size());
  if (d == 1) {
    const double v = cov(0, 0);
    return std::exp(-0.5 * y(0) * y(0) / v) / std::sqrt(2.0 * std::numbers::pi * v);
  }
  Eigen::LLT<Matrix> llt(cov);
  const Vector z = llt.matrixL().solve(y);
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return std::exp(-0.5 * z.squaredNorm() - 0.5 * logdet -
                  0.5 * d * std::log(2.0 * std::numbers::pi));
}

// C exp(-|y|^2 / (4 sigma_upper)) (1 + |y|^4): dominates q and its derivatives
// for the built-in innovation families (constant chosen from Hermite bounds).
std::function<double(const Vector&)> make_psi(const CoefficientField& field, double v_min,
                                              double extra) {
  const int d = field.dim;
  const double inv = std::max(1.0, 1.0 / v_min);
  const double amp = 6.0 * inv * inv * std::pow(2.0 * std::numbers::pi * v_min, -0.5 * d) *
                     std::pow(1.0 + field.bound, 2) * std::pow(6.0, d - 1) * extra;
  const double scale = 4.0 * field.sigma_upper;
  return [amp, scale](const Vector& y) {
    const double r2 = y.squaredNorm();
    return amp * std::exp(-r2 / scale) * (1.0 + r2 * r2);
  };
}

CoefficientField constant_field(int d, double sigma, double m) {
  if (!(sigma > 0.0))
    throw std::invalid_argument("constant family: sigma must be positive (ellipticity violated)");
  CoefficientField f;
  f.dim = d;
  f.drift = [d, m](double, const Vector&) { return Vector::Constant(d, m); };
  f.diffusion = [d, sigma](double, const Vector&) {
    return Matrix(sigma * Matrix::Identity(d, d));
  };
  f.drift_derivative = [d, m](double, const Vector&, const MultiIndex& nu) {
    return nu.order() == 0 ? Vector(Vector::Constant(d, m)) : Vector(Vector::Zero(d));
  };
  f.diffusion_derivative = [d, sigma](double, const Vector&, const MultiIndex& nu) {
    return nu.order() == 0 ? Matrix(sigma * Matrix::Identity(d, d)) : Matrix(Matrix::Zero(d, d));
  };
  f.drift_time_derivative = [d](double, const Vector&, int) { return Vector(Vector::Zero(d)); };
  f.diffusion_time_derivative = [d](double, const Vector&, int) {
    return Matrix(Matrix::Zero(d, d));
  };
  f.sigma_lower = sigma;
  f.sigma_upper = sigma;
  f.bound = std::max(sigma, std::abs(m));
  f.drift_bound = std::abs(m);
  f.time_homogeneous = true;
  return f;
}

// Diagonal sin/tanh family; d = 1 gives the scalar model.
CoefficientField sin_field(int d, double a, double b, double c, double e) {
  const double amp = std::max(std::abs(b), std::abs(b + e));
  if (!(amp < a)) {
    std::ostringstream os;
    os << "ellipticity violated: a + (b + e t) sin x reaches " << a - amp
       << " <= 0 (need max(|b|, |b + e|) < a)";
    throw std::invalid_argument(os.str());
  }
  CoefficientField f;
  f.dim = d;
  auto amplitude = [b, e](double t) { return b + e * t; };
  f.drift = [d, c](double, const Vector& x) {
    Vector m(d);
    for (int i = 0; i < d; ++i) m(i) = c * std::tanh(x(i));
    return m;
  };
  f.diffusion = [d, a, amplitude](double t, const Vector& x) {
    Matrix s = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) s(i, i) = a + amplitude(t) * std::sin(x(i));
    return s;
  };
  // Only D^nu with nu supported on one axis i touches component i.
  auto single_axis = [d](const MultiIndex& nu, int i) {
    for (int j = 0; j < d; ++j)
      if (j != i && nu[j] != 0) return false;
    return true;
  };
  f.drift_derivative = [d, c, single_axis](double, const Vector& x, const MultiIndex& nu) {
    Vector m = Vector::Zero(d);
    for (int i = 0; i < d; ++i)
      if (single_axis(nu, i)) m(i) = c * tanh_derivative(x(i), nu[i]);
    return m;
  };
  f.diffusion_derivative = [d, a, amplitude, single_axis](double t, const Vector& x,
                                                          const MultiIndex& nu) {
    Matrix s = Matrix::Zero(d, d);
    const int k = nu.order();
    for (int i = 0; i < d; ++i) {
      if (!single_axis(nu, i)) continue;
      s(i, i) = (k == 0 ? a : 0.0) + amplitude(t) * std::sin(x(i) + 0.5 * k * std::numbers::pi);
    }
    return s;
  };
  f.drift_time_derivative = [d](double, const Vector&, int) { return Vector(Vector::Zero(d)); };
  f.diffusion_time_derivative = [d, e](double, const Vector& x, int l) {
    Matrix s = Matrix::Zero(d, d);
    if (l == 1)
      for (int i = 0; i < d; ++i) s(i, i) = e * std::sin(x(i));
    return s;
  };
  f.sigma_lower = a - amp;
  f.sigma_upper = a + amp;
  f.bound = a + std::abs(b) + std::abs(e) + std::abs(c);
  f.drift_bound = std::abs(c);
  f.time_homogeneous = (e == 0.0);
  return f;
}

}  // namespace

double tanh_derivative(double x, int n) {
  static const auto polys = tanh_polynomials(8);
  if (n < 0 || n >= static_cast<int>(polys.size()))
    throw std::invalid_argument("tanh_derivative: order out of range");
  const double T = std::tanh(x);
  const auto& p = polys[static_cast<std::size_t>(n)];
  double s = 0.0;
  for (std::size_t i = p.size(); i-- > 0;) s = s * T + p[i];
  return s;
}

CoefficientField complete_derivatives(CoefficientField f) {
  if (!f.drift || !f.diffusion)
    throw std::invalid_argument("coefficient field needs drift and diffusion callables");
  if (!f.drift_derivative) {
    auto drift = f.drift;
    f.drift_derivative = [drift](double t, const Vector& x, const MultiIndex& nu) {
      return central_difference([&](const Vector& y) { return Vector(drift(t, y)); }, x, nu,
                                kSpatialFdStep);
    };
  }
  if (!f.diffusion_derivative) {
    auto diffusion = f.diffusion;
    f.diffusion_derivative = [diffusion](double t, const Vector& x, const MultiIndex& nu) {
      return central_difference([&](const Vector& y) { return Matrix(diffusion(t, y)); }, x, nu,
                                kSpatialFdStep);
    };
  }
  if (!f.drift_time_derivative) {
    auto drift = f.drift;
    f.drift_time_derivative = [drift](double t, const Vector& x, int l) -> Vector {
      const double h = kTimeFdStep;
      if (l == 1) return (drift(t + h, x) - drift(t - h, x)) / (2.0 * h);
      return (drift(t + h, x) - 2.0 * drift(t, x) + drift(t - h, x)) / (h * h);
    };
  }
  if (!f.diffusion_time_derivative) {
    auto diffusion = f.diffusion;
    f.diffusion_time_derivative = [diffusion](double t, const Vector& x, int l) -> Matrix {
      const double h = kTimeFdStep;
      if (l == 1) return (diffusion(t + h, x) - diffusion(t - h, x)) / (2.0 * h);
      return (diffusion(t + h, x) - 2.0 * diffusion(t, x) + diffusion(t - h, x)) / (h * h);
    };
  }
  return f;
}

double normal_density(const Matrix& cov, const Vector& w) { return gaussian_density(cov, w); }

double skewed_component_density(double z) {
  constexpr double w1 = 0.25, mu1 = 1.2, w2 = 0.75, mu2 = -0.4, v = 0.52;
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * v);
  return norm * (w1 * std::exp(-0.5 * (z - mu1) * (z - mu1) / v) +
                 w2 * std::exp(-0.5 * (z - mu2) * (z - mu2) / v));
}

InnovationFamily gaussian_innovations(const CoefficientField& field, int s_prime) {
  InnovationFamily q;
  q.form = InnovationForm::gaussian;
  auto diffusion = field.diffusion;
  q.density = [diffusion](double t, const Vector& x, const Vector& y) {
    return gaussian_density(diffusion(t, x), y);
  };
  q.envelope_psi = make_psi(field, field.sigma_lower, 1.0);
  q.s_prime = s_prime;
  q.support_halfwidth = 10.0 * std::sqrt(field.sigma_upper);
  q.label = "gaussian";
  return q;
}

InnovationFamily skewed_innovations(const CoefficientField& field, int s_prime) {
  InnovationFamily q;
  q.form = InnovationForm::custom;
  auto diffusion = field.diffusion;
  const int d = field.dim;
  q.density = [diffusion, d](double t, const Vector& x, const Vector& y) {
    const Matrix sigma = diffusion(t, x);
    if (d == 1) {
      const double s = std::sqrt(sigma(0, 0));
      return skewed_component_density(y(0) / s) / s;
    }
    const Matrix lambda = spd_sqrt(sigma);
    const Vector z = lambda.ldlt().solve(y);
    double p = 1.0 / lambda.determinant();
    for (int i = 0; i < d; ++i) p *= skewed_component_density(z(i));
    return p;
  };
  q.envelope_psi = make_psi(field, 0.52 * field.sigma_lower, 100.0);
  q.s_prime = s_prime;
  q.support_halfwidth = 12.0 * std::sqrt(field.sigma_upper);
  q.resolution_scale = 0.72;
  q.label = "skewed";
  return q;
}

InnovationFamily shifted_gaussian_innovations(const CoefficientField& field, int s_prime,
                                              double shift) {
  InnovationFamily q;
  q.form = InnovationForm::custom;
  auto diffusion = field.diffusion;
  const int d = field.dim;
  q.density = [diffusion, d, shift](double t, const Vector& x, const Vector& y) {
    return gaussian_density(diffusion(t, x), Vector(y - Vector::Constant(d, shift)));
  };
  q.envelope_psi = make_psi(field, field.sigma_lower, 10.0 * std::exp(shift * shift));
  q.s_prime = s_prime;
  q.support_halfwidth = 10.0 * std::sqrt(field.sigma_upper) + std::abs(shift);
  q.label = "shifted-gaussian";
  return q;
}

ModelSpec build_model(const ModelConfig& config) {
  if (config.d < 1 || config.d > kMaxDim)
    throw std::invalid_argument("model dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  if (config.s_prime < 2) throw std::invalid_argument("s_prime must be >= 2");

  CoefficientField field;
  if (config.family == "constant") {
    field = constant_field(config.d, config.sigma, config.m);
  } else if (config.family == "sin1d") {
    if (config.d != 1) throw std::invalid_argument("sin1d family requires d = 1");
    field = sin_field(1, config.a, config.b, config.c, config.e);
  } else if (config.family == "sin2d") {
    if (config.d != 2) throw std::invalid_argument("sin2d family requires d = 2");
    field = sin_field(2, config.a, config.b, config.c, config.e);
  } else {
    throw std::invalid_argument("unknown model family '" + config.family + "'");
  }

  ModelSpec spec;
  spec.name = config.family;
  spec.coefficients = field;
  if (config.innovation_shift != 0.0) {
    spec.innovations = shifted_gaussian_innovations(field, config.s_prime, config.innovation_shift);
  } else if (config.innovation == "gaussian") {
    spec.innovations = gaussian_innovations(field, config.s_prime);
  } else if (config.innovation == "skewed") {
    spec.innovations = skewed_innovations(field, config.s_prime);
  } else {
    throw std::invalid_argument("unknown innovation family '" + config.innovation + "'");
  }
  return spec;
}

AssumptionSample AssumptionSample::default_for(int d) {
  AssumptionSample s;
  for (int i = 0; i <= 10; ++i) s.times.push_back(i / 10.0);
  const int per_axis = 41;
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= per_axis;
  for (std::size_t f = 0; f < total; ++f) {
    Vector p(d);
    std::size_t r = f;
    for (int a = d - 1; a >= 0; --a) {
      p(a) = -5.0 + 10.0 * static_cast<double>(r % per_axis) / (per_axis - 1);
      r /= per_axis;
    }
    s.points.push_back(p);
  }
  return s;
}

std::string AssumptionSample::describe() const {
  std::ostringstream os;
  os << times.size() << " times x " << points.size() << " points";
  if (!points.empty()) {
    double lo = points.front().minCoeff(), hi = points.front().maxCoeff();
    for (const auto& p : points) {
      lo = std::min(lo, p.minCoeff());
      hi = std::max(hi, p.maxCoeff());
    }
    os << " in [" << lo << ", " << hi << "]^" << points.front().size();
  }
  return os.str();
}

bool AssumptionReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

const AssumptionCheck& AssumptionReport::find(const std::string& id) const {
  for (const auto& c : checks)
    if (c.id == id) return c;
  throw std::out_of_range("no assumption check named " + id);
}

double default_check_tolerance(const ModelSpec& model) {
  return model.gaussian() ? 1e-6 : 1e-4;
}

namespace {

// Tensor trapezoid rule over [-L, L]^d with `per_axis` nodes per axis.
struct BoxRule {
  std::vector<Vector> nodes;
  std::vector<double> weights;
};

BoxRule box_rule(int d, double L, int per_axis) {
  BoxRule r;
  const double h = 2.0 * L / (per_axis - 1);
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(per_axis);
  r.nodes.reserve(total);
  r.weights.reserve(total);
  for (std::size_t f = 0; f < total; ++f) {
    Vector p(d);
    double w = 1.0;
    std::size_t rem = f;
    for (int a = d - 1; a >= 0; --a) {
      const auto i = static_cast<int>(rem % static_cast<std::size_t>(per_axis));
      rem /= static_cast<std::size_t>(per_axis);
      p(a) = -L + h * i;
      w *= (i == 0 || i == per_axis - 1) ? 0.5 * h : h;
    }
    r.nodes.push_back(p);
    r.weights.push_back(w);
  }
  return r;
}

int moment_nodes(int d) { return d == 1 ? 801 : (d == 2 ? 121 : 31); }

struct Moments {
  double mass = 0.0;
  Vector mean;
  Matrix second;
  bool finite = true;
};

Moments innovation_moments(const ModelSpec& model, double t, const Vector& x, double L,
                           int per_axis) {
  const int d = model.dim();
  const auto rule = box_rule(d, L, per_axis);
  Moments m;
  m.mean = Vector::Zero(d);
  m.second = Matrix::Zero(d, d);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double q = model.innovations.density(t, x, rule.nodes[i]);
    if (!std::isfinite(q)) {
      m.finite = false;
      continue;
    }
    const double w = rule.weights[i] * q;
    m.mass += w;
    m.mean += w * rule.nodes[i];
    m.second += w * rule.nodes[i] * rule.nodes[i].transpose();
  }
  return m;
}

double max_abs(const Matrix& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace

Vector innovation_mean(const ModelSpec& model, double t, const Vector& x) {
  const auto m = innovation_moments(model, t, x, model.innovations.support_halfwidth,
                                    moment_nodes(model.dim()));
  if (!m.finite) throw NumericalError("innovation density is not finite on the quadrature box");
  return m.mean;
}

Matrix innovation_covariance(const ModelSpec& model, double t, const Vector& x, double tol) {
  if (model.gaussian()) return model.coefficients.diffusion(t, x);
  const double L = model.innovations.support_halfwidth;
  const int n = moment_nodes(model.dim());
  const auto inner = innovation_moments(model, t, x, L, n);
  // Same spacing on a box 1.25 times wider: the difference is the tail mass.
  const int n_wide = static_cast<int>(std::lround(1.25 * (n - 1))) + 1;
  const auto outer = innovation_moments(model, t, x, 1.25 * L, n_wide);
  if (!inner.finite || !outer.finite)
    throw NumericalError("innovation density is not finite on the quadrature box");
  const double tail = max_abs(outer.second - inner.second);
  if (tail > tol) {
    std::ostringstream os;
    os << "non-convergent tail in innovation covariance: truncation change " << tail
       << " exceeds " << tol;
    throw NumericalError(os.str());
  }
  return outer.second;
}

Matrix spd_sqrt(const Matrix& sigma) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
  if (eig.info() != Eigen::Success)
    throw std::invalid_argument("eigen-decomposition of the diffusion matrix failed");
  const Vector lambda = eig.eigenvalues();
  if (lambda.minCoeff() <= 0.0)
    throw std::invalid_argument("diffusion matrix is not positive definite");
  return eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

Matrix diffusion_factor(const ModelSpec& model, double t, const Vector& x) {
  const Matrix sigma = model.coefficients.diffusion(t, x);
  Matrix lambda = spd_sqrt(sigma);
  return 0.5 * (lambda + lambda.transpose());
}

CoefficientJet coefficient_jet(const CoefficientField& field, double t, const Vector& x,
                               unsigned parts) {
  const int d = field.dim;
  CoefficientJet j;
  j.m = field.drift(t, x);
  j.sigma = field.diffusion(t, x);
  if (parts & kJetTime) {
    for (int l = 1; l <= 2; ++l) {
      j.m_t[static_cast<std::size_t>(l - 1)] = field.drift_time_derivative(t, x, l);
      j.sigma_t[static_cast<std::size_t>(l - 1)] = field.diffusion_time_derivative(t, x, l);
    }
  }
  if (parts & (kJetSpatial1 | kJetSpatial2)) {
    for (int i = 0; i < d; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      const MultiIndex e = MultiIndex::unit(d, i);
      j.dm[ii] = field.drift_derivative(t, x, e);
      j.dsigma[ii] = field.diffusion_derivative(t, x, e);
    }
  }
  if (parts & kJetSpatial2) {
    for (int i = 0; i < d; ++i)
      for (int k = i; k < d; ++k) {
        const MultiIndex e = MultiIndex::unit(d, i).plus(k);
        const auto ii = static_cast<std::size_t>(i), kk = static_cast<std::size_t>(k);
        j.d2m[ii][kk] = field.drift_derivative(t, x, e);
        j.d2sigma[ii][kk] = field.diffusion_derivative(t, x, e);
        j.d2m[kk][ii] = j.d2m[ii][kk];
        j.d2sigma[kk][ii] = j.d2sigma[ii][kk];
      }
  }
  return j;
}

namespace {

AssumptionCheck finish(std::string id, double violation, double tol, std::string note = {}) {
  AssumptionCheck c;
  c.id = std::move(id);
  c.max_violation = violation;
  c.pass = std::isfinite(violation) && violation <= tol && note.empty();
  c.note = std::move(note);
  return c;
}

std::vector<MultiIndex> multi_indices_up_to(int d, int order) {
  std::vector<MultiIndex> out;
  std::vector<MultiIndex> frontier{MultiIndex::zero(d)};
  out.push_back(frontier.front());
  for (int k = 1; k <= order; ++k) {
    std::vector<MultiIndex> next;
    for (const auto& nu : frontier) {
      int first = 0;
      for (int i = d - 1; i >= 0; --i)
        if (nu[i] > 0) {
          first = i;
          break;
        }
      for (int i = first; i < d; ++i) next.push_back(nu.plus(i));
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

}  // namespace

AssumptionReport validate_assumptions(const ModelSpec& model, const AssumptionSample& sample,
                                      double tol) {
  if (sample.times.empty() || sample.points.empty())
    throw std::invalid_argument("assumption sample must be nonempty");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const int d = model.dim();
  const auto& field = model.coefficients;
  const auto& q = model.innovations;

  AssumptionReport report;
  report.sample_description = sample.describe();

  // A1: q(t, x, .) is a density with mean zero.
  {
    double viol = 0.0;
    std::string note;
    for (double t : sample.times)
      for (const auto& x : sample.points) {
        const auto m = innovation_moments(model, t, x, q.support_halfwidth, moment_nodes(d));
        if (!m.finite) {
          note = "non-finite innovation density";
          continue;
        }
        viol = std::max({viol, std::abs(m.mass - 1.0), m.mean.cwiseAbs().maxCoeff()});
      }
    report.checks.push_back(finish("A1", viol, tol, note));
  }

  // A2: uniform ellipticity with the declared constants.
  {
    double viol = 0.0;
    for (double t : sample.times)
      for (const auto& x : sample.points) {
        const Matrix s = field.diffusion(t, x);
        const double asym = max_abs(s - s.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (s + s.transpose()));
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().maxCoeff();
        viol = std::max({viol, asym, field.sigma_lower - lo, hi - field.sigma_upper});
      }
    report.checks.push_back(finish("A2", std::max(0.0, viol), tol));
  }

  // A3: |D_y^nu q| <= psi (|nu| <= 4), |D_x^nu q| <= psi (|nu| <= 2) on a
  // sub-sample, plus finiteness of the S-th moment of psi.
  {
    double viol = 0.0;
    std::string note;
    const double L = q.support_halfwidth;
    const int y_nodes = d == 1 ? 41 : 11;
    const auto yrule = box_rule(d, L, y_nodes);
    const auto y_orders = multi_indices_up_to(d, 4);
    const auto x_orders = multi_indices_up_to(d, 2);
    const std::size_t stride = d == 1 ? 1 : 41;
    const double h = 0.05;
    for (std::size_t ti = 0; ti < sample.times.size(); ti += (d == 1 ? 1 : 5)) {
      const double t = sample.times[ti];
      for (std::size_t xi = 0; xi < sample.points.size(); xi += stride) {
        const Vector& x = sample.points[xi];
        for (const auto& y : yrule.nodes) {
          const double psi = q.envelope_psi(y);
          if (!std::isfinite(psi)) note = "psi is not finite";
          for (const auto& nu : y_orders) {
            const double dq = central_difference(
                [&](const Vector& yy) { return q.density(t, x, yy); }, y, nu, h);
            viol = std::max(viol, std::abs(dq) - psi);
          }
          for (const auto& nu : x_orders) {
            const double dq = central_difference(
                [&](const Vector& xx) { return q.density(t, xx, y); }, x, nu, h);
            viol = std::max(viol, std::abs(dq) - psi);
          }
        }
      }
    }
    // Radial moment int |y|^S psi(y) dy, truncated at R and 2R.
    const int S = q.moment_order(d);
    const double omega = 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
    auto radial = [&](double R) {
      double total = 0.0;
      const int pieces = 64;
      for (int k = 0; k < pieces; ++k) {
        const double lo = R * k / pieces, hi = R * (k + 1) / pieces;
        total += quad::integrate(
            [&](double r) {
              Vector y = Vector::Zero(d);
              y(0) = r;
              return std::pow(r, d - 1 + S) * q.envelope_psi(y);
            },
            lo, hi);
      }
      return omega * total;
    };
    const double R = 2.0 * L;
    const double inner = radial(R), outer = radial(2.0 * R);
    if (!std::isfinite(outer) || outer <= 0.0) {
      note = "S-th moment of psi is not finite";
    } else {
      viol = std::max(viol, (outer - inner) / outer);
    }
    report.checks.push_back(finish("A3", std::max(0.0, viol), tol, note));
  }

  // B1: m, sigma and their first two t/x derivatives bounded by the declared constant.
  {
    double worst = 0.0;
    const auto orders = multi_indices_up_to(d, 2);
    for (double t : sample.times)
      for (const auto& x : sample.points) {
        for (const auto& nu : orders) {
          worst = std::max(worst, field.drift_derivative(t, x, nu).cwiseAbs().maxCoeff());
          worst = std::max(worst, max_abs(field.diffusion_derivative(t, x, nu)));
        }
        for (int l = 1; l <= 2; ++l) {
          worst = std::max(worst, field.drift_time_derivative(t, x, l).cwiseAbs().maxCoeff());
          worst = std::max(worst, max_abs(field.diffusion_time_derivative(t, x, l)));
        }
      }
    std::string note = std::isfinite(worst) ? "" : "non-finite coefficient derivative";
    report.checks.push_back(finish("B1", std::max(0.0, worst - field.bound), tol, note));
  }

  // Innovation covariance equals the diffusion matrix.
  {
    double viol = 0.0;
    std::string note;
    for (double t : sample.times)
      for (const auto& x : sample.points) {
        Matrix cov;
        if (model.gaussian()) {
          const auto m = innovation_moments(model, t, x, q.support_halfwidth, moment_nodes(d));
          if (!m.finite) {
            note = "non-finite innovation density";
            continue;
          }
          cov = m.second - m.mean * m.mean.transpose();
        } else {
          try {
            cov = innovation_covariance(model, t, x, 1e-6);
          } catch (const NumericalError& err) {
            note = err.what();
            continue;
          }
        }
        viol = std::max(viol, max_abs(cov - field.diffusion(t, x)));
      }
    report.checks.push_back(finish("covariance-consistency", viol, tol, note));
  }
  return report;
}

}  // namespace parametrix
