#pragma once

#include "parametrix/types.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace parametrix {

/// Uniform tensor-product grid in d <= kMaxGridDim dimensions. Nodes are
/// stored in row-major order with the last axis fastest.
struct Grid {
  int dim = 1;
  std::array<double, kMaxGridDim> origin{};
  std::array<double, kMaxGridDim> spacing{};
  std::array<int, kMaxGridDim> count{};

  /// Grid with `points_per_axis` nodes spanning center +- halfwidth.
  static Grid centered(const Vector& center, const Vector& halfwidth, int points_per_axis);

  /// Grid with spacing at most `max_spacing` that has `anchor + m * base_spacing`
  /// (integer m) among its nodes and covers center +- halfwidth.
  static Grid aligned(const Vector& center, const Vector& halfwidth, const Vector& anchor,
                      double base_spacing, double max_spacing);

  std::size_t size() const;
  Vector point(std::size_t flat) const;
  double coordinate(int axis, int index) const {
    return origin[static_cast<std::size_t>(axis)] +
           spacing[static_cast<std::size_t>(axis)] * index;
  }
  std::array<int, kMaxGridDim> unflatten(std::size_t flat) const;
  std::size_t flatten(const std::array<int, kMaxGridDim>& idx) const;
  double cell_volume() const;
  /// Tensor-product trapezoid weights (cell volume included).
  std::vector<double> trapezoid_weights() const;
  /// Flat index of the node within `tol` of p, if any.
  std::optional<std::size_t> index_of(const Vector& p, double tol = 1e-9) const;
  std::vector<Vector> points() const;
};

/// Real values on the nodes of a Grid.
struct GridField {
  Grid grid;
  std::vector<double> values;

  GridField() = default;
  explicit GridField(Grid g) : grid(g), values(g.size(), 0.0) {}
  GridField(Grid g, std::vector<double> v) : grid(g), values(std::move(v)) {}

  /// Trapezoid integral over the grid.
  double integral() const;
  double sup_norm() const;
  /// Piecewise-cubic (4-point Lagrange) interpolation; zero outside the grid.
  double interpolate(const Vector& p) const;
  /// Gradient at a node by central differences (4th order in the interior).
  Vector gradient_at(std::size_t flat) const;
};

/// Writes "y_1,...,y_d,value" rows (with header) for every node.
void write_csv(std::ostream& os, const GridField& field, const std::string& value_name = "value");

}  // namespace parametrix
