#include "parametrix/metrics.hpp"

#include "parametrix/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace parametrix {

double weight_Q(double delta, const Vector& u, int s_prime, int d) {
  if (!(delta > 0.0)) throw std::invalid_argument("weight_Q: delta must be positive");
  if (s_prime < 2) throw std::invalid_argument("weight_Q: S' must be >= 2");
  const double r = u.norm() / delta;
  return std::pow(delta, d) * (1.0 + std::pow(r, 2 * s_prime - 2));
}

double unit_sphere_area(int d) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

double radial_polynomial_integral(int d, int n) {
  if (n <= d) throw std::invalid_argument("envelope shape is not normalizable (exponent <= d)");
  static std::mutex mu;
  static std::map<std::pair<int, int>, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  const auto key = std::make_pair(d, n);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  // [0, 1] directly and [1, inf) through r = 1 / s; both integrands are smooth.
  auto piece = [](const std::function<double(double)>& f) {
    double s = 0.0;
    const int panels = 32;
    for (int k = 0; k < panels; ++k) s += quad::integrate(f, double(k) / panels, double(k + 1) / panels);
    return s;
  };
  const double inner = piece([&](double r) { return std::pow(r, d - 1) / (1.0 + std::pow(r, n)); });
  const double outer =
      piece([&](double s) { return std::pow(s, n - d - 1) / (std::pow(s, n) + 1.0); });
  const double v = inner + outer;
  cache.emplace(key, v);
  return v;
}

EnvelopeSpec make_envelope(EnvelopeKind kind, int d, double scale, double C, int S, int s_prime) {
  if (d < 1) throw std::invalid_argument("envelope dimension must be positive");
  if (!(scale > 0.0)) throw std::invalid_argument("envelope scale must be positive");
  EnvelopeSpec e;
  e.kind = kind;
  e.d = d;
  e.scale = scale;
  e.C = C;
  e.S = S;
  e.s_prime = s_prime;
  switch (kind) {
    case EnvelopeKind::Q:
      if (s_prime < 2) throw std::invalid_argument("Q needs S' >= 2");
      e.normalizer = 1.0;
      break;
    case EnvelopeKind::phi:
      if (!(C > 0.0)) throw std::invalid_argument("phi needs C > 0");
      e.normalizer = std::pow(std::numbers::pi / C, 0.5 * d);
      break;
    case EnvelopeKind::zeta:
      e.normalizer = unit_sphere_area(d) * radial_polynomial_integral(d, S - 4);
      break;
    case EnvelopeKind::xi:
      e.normalizer = unit_sphere_area(d) * radial_polynomial_integral(d, 2 * s_prime - 2);
      break;
  }
  return e;
}

double envelope(const EnvelopeSpec& spec, const Vector& u) {
  if (spec.kind == EnvelopeKind::Q) return weight_Q(spec.scale, u, spec.s_prime, spec.d);
  const double rho = spec.scale;
  const double r = u.norm() / rho;
  double shape = 0.0;
  switch (spec.kind) {
    case EnvelopeKind::phi:
      shape = std::exp(-spec.C * r * r);
      break;
    case EnvelopeKind::zeta:
      shape = 1.0 / (1.0 + std::pow(r, spec.S - 4));
      break;
    case EnvelopeKind::xi:
      shape = 1.0 / (1.0 + std::pow(r, 2 * spec.s_prime - 2));
      break;
    case EnvelopeKind::Q:
      break;
  }
  return std::pow(rho, -spec.d) * shape / spec.normalizer;
}

WeightedError weighted_sup_error(const std::vector<double>& a, const std::vector<double>& b,
                                 double delta, const std::vector<EvalPair>& pairs, int s_prime,
                                 int d) {
  if (a.size() != pairs.size() || b.size() != pairs.size())
    throw std::invalid_argument("weighted_sup_error: size mismatch");
  if (pairs.empty()) throw std::invalid_argument("weighted_sup_error: empty evaluation grid");
  WeightedError out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i]))
      throw NumericalError("weighted_sup_error: non-finite density value");
    const double gap = std::abs(a[i] - b[i]);
    const double w = weight_Q(delta, Vector(pairs[i].y - pairs[i].x), s_prime, d) * gap;
    out.unweighted = std::max(out.unweighted, gap);
    if (w > out.value) {
      out.value = w;
      out.argmax = i;
    }
  }
  out.on_boundary = out.value > 0.0 && (out.argmax == 0 || out.argmax + 1 == pairs.size());
  return out;
}

WeightedError weighted_sup_error(const DensityEvaluator& pA, const DensityEvaluator& pB,
                                 double delta, const std::vector<EvalPair>& pairs, int s_prime,
                                 int d) {
  std::vector<double> a, b;
  a.reserve(pairs.size());
  b.reserve(pairs.size());
  for (const auto& p : pairs) {
    a.push_back(pA(p.x, p.y));
    b.push_back(pB(p.x, p.y));
  }
  return weighted_sup_error(a, b, delta, pairs, s_prime, d);
}

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least_squares: need >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("least_squares: degenerate abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

RateReport fit_rate(std::vector<RatePoint> points) {
  if (points.size() < 3) throw std::invalid_argument("fit_rate: need at least 3 points");
  std::vector<double> lx, ly;
  for (const auto& p : points) {
    if (p.n < 1) throw std::invalid_argument("fit_rate: n must be positive");
    if (!(p.weighted_error > 0.0) || !std::isfinite(p.weighted_error))
      throw std::invalid_argument("fit_rate: errors must be positive and finite");
    lx.push_back(std::log(static_cast<double>(p.n)));
    ly.push_back(std::log(p.weighted_error));
  }
  const LinearFit f = least_squares(lx, ly);
  RateReport r;
  r.points = std::move(points);
  r.slope = f.slope;
  r.intercept = f.intercept;
  r.r_squared = f.r_squared;
  return r;
}

RateReport fit_rate(const std::vector<std::pair<double, double>>& n_error) {
  std::vector<RatePoint> pts;
  for (const auto& [n, e] : n_error) {
    RatePoint p;
    p.n = static_cast<int>(std::lround(n));
    p.error = e;
    p.weighted_error = e;
    pts.push_back(p);
  }
  return fit_rate(std::move(pts));
}

double fit_envelope_constant(const std::vector<std::pair<double, double>>& samples) {
  if (samples.empty()) throw std::invalid_argument("fit_envelope_constant: empty sample");
  double c = 0.0;
  for (const auto& [value, env] : samples) {
    if (!(env > 0.0)) throw std::invalid_argument("fit_envelope_constant: envelope must be positive");
    c = std::max(c, std::abs(value) / env);
  }
  return c;
}

void write_rate_csv(std::ostream& os, const RateReport& report) {
  os << "n,h,T,error,weighted_error\n" << std::setprecision(12);
  for (const auto& p : report.points)
    os << p.n << "," << p.h << "," << p.T << "," << p.error << "," << p.weighted_error << "\n";
}

}  // namespace parametrix
