#include "parametrix/grid.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace parametrix;

TEST_CASE("centered grid spans the requested box") {
  const Grid g = Grid::centered(make_vector({1.0}), make_vector({2.0}), 5);
  CHECK(g.size() == 5);
  CHECK(g.point(0)(0) == doctest::Approx(-1.0));
  CHECK(g.point(4)(0) == doctest::Approx(3.0));
  CHECK(g.index_of(make_vector({2.0})).value() == 3);
  CHECK_FALSE(g.index_of(make_vector({2.1})).has_value());
}

TEST_CASE("aligned grid contains the anchor lattice") {
  const Grid g = Grid::aligned(make_vector({0.0}), make_vector({1.0}), make_vector({0.05}), 0.3,
                               0.1);
  CHECK(g.spacing[0] == doctest::Approx(0.1));
  CHECK(g.index_of(make_vector({0.35})).has_value());
  CHECK(g.index_of(make_vector({0.05 - 0.9})).has_value());
  CHECK(g.point(0)(0) <= -1.0);
  CHECK(g.point(g.size() - 1)(0) >= 1.0);
}

TEST_CASE("2-d flattening is row-major with the last axis fastest") {
  const Grid g = Grid::centered(make_vector({0.0, 0.0}), make_vector({1.0, 2.0}), 3);
  CHECK(g.size() == 9);
  CHECK(g.flatten({1, 2}) == 5);
  const auto idx = g.unflatten(7);
  CHECK(idx[0] == 2);
  CHECK(idx[1] == 1);
  CHECK(g.point(5)(1) == doctest::Approx(2.0));
}

TEST_CASE("trapezoid integral, interpolation and gradient of a Gaussian") {
  const Grid g = Grid::centered(make_vector({0.0}), make_vector({8.0}), 321);
  GridField f(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.point(i)(0);
    f.values[i] = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  }
  CHECK(f.integral() == doctest::Approx(1.0).epsilon(1e-12));
  const double x = 0.123;
  const double exact = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  CHECK(std::abs(f.interpolate(make_vector({x})) - exact) < 1e-6);
  CHECK(f.interpolate(make_vector({9.0})) == 0.0);
  const std::size_t mid = 170;
  const double xm = g.point(mid)(0);
  CHECK(f.gradient_at(mid)(0) ==
        doctest::Approx(-xm * std::exp(-0.5 * xm * xm) / std::sqrt(2.0 * std::numbers::pi))
            .epsilon(1e-5));
}

TEST_CASE("csv output has a header and one row per node") {
  const Grid g = Grid::centered(make_vector({0.0}), make_vector({1.0}), 3);
  GridField f(g, {1.0, 2.0, 3.0});
  std::ostringstream os;
  write_csv(os, f, "p");
  CHECK(os.str() == "y1,p\n-1,1\n0,2\n1,3\n");
}
