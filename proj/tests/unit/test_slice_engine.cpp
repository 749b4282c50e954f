#include "parametrix/series.hpp"
#include "parametrix/slice_engine.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace parametrix;

namespace {

ModelSpec modulated(int d) {
  ModelConfig cfg;
  cfg.family = d == 1 ? "sin1d" : "sin2d";
  cfg.d = d;
  cfg.c = 0.5;
  cfg.e = 0.25;
  return build_model(cfg);
}

// Heat kernel of variance (t_k - t_i) in d = 1.
class HeatKernel : public PairKernel {
 public:
  HeatKernel(std::vector<double> times, bool local) : times_(std::move(times)), local_(local) {}
  void block(int i, int k, const std::vector<Vector>& src, const Grid& dst,
             Eigen::MatrixXd& out) const override {
    const double v = times_[static_cast<std::size_t>(k)] - times_[static_cast<std::size_t>(i)];
    out.resize(static_cast<Eigen::Index>(dst.size()), static_cast<Eigen::Index>(src.size()));
    for (std::size_t b = 0; b < dst.size(); ++b)
      for (std::size_t a = 0; a < src.size(); ++a) {
        const double w = dst.point(b)(0) - src[a](0);
        out(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) =
            std::exp(-0.5 * w * w / v) / std::sqrt(2.0 * std::numbers::pi * v);
      }
  }
  std::vector<double> diagonal(int, const GridField& f) const override { return f.values; }
  double width(int i, int k) const override {
    return std::sqrt(times_[static_cast<std::size_t>(k)] - times_[static_cast<std::size_t>(i)]);
  }
  double reach(int i, int k) const override {
    return local_ ? 9.0 * width(i, k) : std::numeric_limits<double>::infinity();
  }

 private:
  std::vector<double> times_;
  bool local_;
};

double normal(double y, double var) {
  return std::exp(-0.5 * y * y / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

}  // namespace

TEST_CASE("frozen kernel blocks match pointwise kernels in d = 1") {
  const ModelSpec m = modulated(1);
  const std::vector<double> times{0.0, 0.05, 0.2};
  const std::vector<Vector> src{make_vector({-0.3}), make_vector({0.1}), make_vector({0.45})};
  const Grid dst = Grid::centered(make_vector({0.0}), make_vector({1.0}), 9);
  for (auto kind : {FrozenKernelKind::H, FrozenKernelKind::H1, FrozenKernelKind::H2, FrozenKernelKind::A0}) {
    const FrozenKernel K(m, times, kind);
    Eigen::MatrixXd out;
    K.block(1, 2, src, dst, out);
    for (std::size_t b = 0; b < dst.size(); ++b)
      for (std::size_t a = 0; a < src.size(); ++a) {
        const Vector y = dst.point(b);
        double ref = 0.0;
        switch (kind) {
          case FrozenKernelKind::H: ref = kernel_H(m, 0.05, 0.2, src[a], y); break;
          case FrozenKernelKind::H1: ref = kernel_Hl(m, 0.05, 0.2, src[a], y, 1); break;
          case FrozenKernelKind::H2: ref = kernel_Hl(m, 0.05, 0.2, src[a], y, 2); break;
          case FrozenKernelKind::A0: ref = kernel_A0(m, 0.05, 0.2, src[a], y); break;
        }
        CHECK(out(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) ==
              doctest::Approx(ref).epsilon(1e-10).scale(1e-12));
      }
  }
}

TEST_CASE("frozen kernel blocks match pointwise kernels in d = 2") {
  const ModelSpec m = modulated(2);
  const std::vector<double> times{0.0, 0.05, 0.2};
  const std::vector<Vector> src{make_vector({-0.3, 0.2}), make_vector({0.1, -0.5})};
  const Grid dst = Grid::centered(make_vector({0.0, 0.0}), make_vector({1.0, 1.0}), 5);
  for (auto kind : {FrozenKernelKind::H, FrozenKernelKind::H1, FrozenKernelKind::A0}) {
    const FrozenKernel K(m, times, kind);
    Eigen::MatrixXd out;
    K.block(1, 2, src, dst, out);
    for (std::size_t b = 0; b < dst.size(); ++b)
      for (std::size_t a = 0; a < src.size(); ++a) {
        const Vector y = dst.point(b);
        const double ref = kind == FrozenKernelKind::H    ? kernel_H(m, 0.05, 0.2, src[a], y)
                           : kind == FrozenKernelKind::H1 ? kernel_Hl(m, 0.05, 0.2, src[a], y, 1)
                                                          : kernel_A0(m, 0.05, 0.2, src[a], y);
        CHECK(out(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) ==
              doctest::Approx(ref).epsilon(1e-10).scale(1e-12));
      }
  }
}

TEST_CASE("diagonal limit is only defined for H") {
  const ModelSpec m = modulated(1);
  const FrozenKernel K(m, {0.0, 0.1}, FrozenKernelKind::A0);
  GridField f(Grid::centered(make_vector({0.0}), make_vector({1.0}), 5));
  CHECK_THROWS_AS(K.diagonal(1, f), std::logic_error);
}

TEST_CASE("propagation with the heat kernel") {
  // F_r(t_k) = (t_k - s)^r / r! N(x, t_k - s) when F_0 is that Gaussian.
  const ModelSpec m = modulated(1);
  QuadratureSpec q;
  q.time_nodes = 16;
  q.points_per_axis = 201;
  const double s = 0.0, t = 0.5;
  const Vector x = make_vector({0.2});
  SlicePlan plan = series_plan(m, s, t, x, q, std::nullopt);
  auto base = [&](int k) {
    const Grid& g = plan.grids[static_cast<std::size_t>(k)];
    GridField f(g);
    const double v = plan.times[static_cast<std::size_t>(k)] - s;
    for (std::size_t b = 0; b < g.size(); ++b) f.values[b] = normal(g.point(b)(0) - x(0), v);
    return f;
  };
  const HeatKernel dense(plan.times, false), local(plan.times, true);
  const auto a = propagate(plan, dense, base, 3);
  const auto b = propagate(plan, local, base, 3);
  const int K = plan.last();
  for (int r = 1; r <= 3; ++r) {
    const GridField& fa = a.terms[static_cast<std::size_t>(r)][static_cast<std::size_t>(K)];
    const GridField& fb = b.terms[static_cast<std::size_t>(r)][static_cast<std::size_t>(K)];
    const double scale = std::pow(t - s, r) / std::tgamma(r + 1.0);
    double err = 0.0, tiled = 0.0;
    for (std::size_t n = 0; n < fa.values.size(); ++n) {
      const double ref = scale * normal(fa.grid.point(n)(0) - x(0), t - s);
      err = std::max(err, std::abs(fa.values[n] - ref));
      tiled = std::max(tiled, std::abs(fb.values[n] - fa.values[n]));
    }
    // Orders 1 and 2 are polynomials of degree <= 3 in theta, exact under Simpson.
    CHECK(err <= (r <= 2 ? 1e-6 : 1e-4) * scale);
    CHECK(tiled <= 1e-12 * scale);
  }
}

TEST_CASE("propagation rejects inconsistent plans") {
  const ModelSpec m = modulated(1);
  QuadratureSpec q;
  q.time_nodes = 8;
  q.points_per_axis = 33;
  SlicePlan plan = series_plan(m, 0.0, 0.1, make_vector({0.0}), q, std::nullopt);
  const FrozenKernel K(m, plan.times, FrozenKernelKind::H);
  auto base = [&](int k) { return GridField(plan.grids[static_cast<std::size_t>(k)]); };
  CHECK_THROWS_AS(propagate(plan, K, base, -1), std::invalid_argument);
  plan.weights.resize(3, 3);
  CHECK_THROWS_AS(propagate(plan, K, base, 1), std::invalid_argument);
}
