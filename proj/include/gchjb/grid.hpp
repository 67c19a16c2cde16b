// Uniform tensor grids over a box, with an explicit one-cell boundary layer.
#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "gchjb/errors.hpp"

namespace gchjb {

struct Grid {
  int dim = 1;
  std::array<int, 2> n{1, 1};  // interior points per axis
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{1.0, 1.0};
  std::array<double, 2> h{0.5, 0.5};

  // h_i = (hi_i - lo_i)/(n_i + 1). Throws InputError for fewer than 3
  // interior points per axis or an empty box.
  static Grid make(int dim, std::array<double, 2> lo, std::array<double, 2> hi,
                   std::array<int, 2> shape);

  int points(int axis) const { return n[axis] + 2; }
  std::size_t full_size() const {
    return dim == 1 ? static_cast<std::size_t>(n[0] + 2)
                    : static_cast<std::size_t>(n[0] + 2) * static_cast<std::size_t>(n[1] + 2);
  }
  std::size_t interior_size() const {
    return dim == 1 ? static_cast<std::size_t>(n[0])
                    : static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(n[1]);
  }
  // Full-grid index of node (i, j), 0 <= i <= n1+1; row-major with x2 fastest.
  std::size_t index(int i, int j = 0) const {
    return dim == 1 ? static_cast<std::size_t>(i)
                    : static_cast<std::size_t>(i) * static_cast<std::size_t>(n[1] + 2) +
                          static_cast<std::size_t>(j);
  }
  // Interior unknown number of interior node (i, j), 1 <= i <= n1.
  std::size_t unknown(int i, int j = 1) const {
    return dim == 1 ? static_cast<std::size_t>(i - 1)
                    : static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(n[1]) +
                          static_cast<std::size_t>(j - 1);
  }
  // Node of interior unknown k.
  std::array<int, 2> node_of(std::size_t k) const {
    if (dim == 1) return {static_cast<int>(k) + 1, 0};
    return {static_cast<int>(k / static_cast<std::size_t>(n[1])) + 1,
            static_cast<int>(k % static_cast<std::size_t>(n[1])) + 1};
  }
  double coord(int axis, int k) const { return k == n[axis] + 1 ? hi[axis] : lo[axis] + k * h[axis]; }
  bool on_boundary(int i, int j = 1) const {
    return i == 0 || i == n[0] + 1 || (dim == 2 && (j == 0 || j == n[1] + 1));
  }
  bool same_shape(const Grid& o) const;
};

class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(Grid grid, double fill = 0.0)
      : grid_(grid), values_(grid.full_size(), fill) {}
  GridFunction(Grid grid, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  double& at(int i, int j = 0) { return values_[grid_.index(i, j)]; }
  double at(int i, int j = 0) const { return values_[grid_.index(i, j)]; }

  std::vector<double> interior() const;
  void set_interior(const std::vector<double>& v);

  // Largest |value| over interior nodes.
  double interior_max_abs() const;

 private:
  Grid grid_;
  std::vector<double> values_;
};

}  // namespace gchjb
