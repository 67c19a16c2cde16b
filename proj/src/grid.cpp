#include "gchjb/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gchjb {

Grid Grid::make(int dim, std::array<double, 2> lo, std::array<double, 2> hi,
                std::array<int, 2> shape) {
  if (dim != 1 && dim != 2) throw InputError("grid dimension must be 1 or 2");
  Grid g;
  g.dim = dim;
  for (int axis = 0; axis < dim; ++axis) {
    if (shape[axis] < 3) {
      throw InputError("grid needs at least 3 interior points per axis, got " +
                       std::to_string(shape[axis]));
    }
    if (!(hi[axis] > lo[axis])) throw InputError("box must satisfy lo < hi on every axis");
    g.n[axis] = shape[axis];
    g.lo[axis] = lo[axis];
    g.hi[axis] = hi[axis];
    g.h[axis] = (hi[axis] - lo[axis]) / (shape[axis] + 1);
  }
  if (dim == 1) {
    g.n[1] = 1;
    g.lo[1] = g.hi[1] = 0.0;
    g.h[1] = 1.0;
  }
  return g;
}

bool Grid::same_shape(const Grid& o) const {
  if (dim != o.dim) return false;
  for (int a = 0; a < dim; ++a) {
    if (n[a] != o.n[a] || lo[a] != o.lo[a] || hi[a] != o.hi[a]) return false;
  }
  return true;
}

GridFunction::GridFunction(Grid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.full_size()) throw InputError("grid function size mismatch");
}

std::vector<double> GridFunction::interior() const {
  std::vector<double> out(grid_.interior_size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto [i, j] = grid_.node_of(k);
    out[k] = at(i, j);
  }
  return out;
}

void GridFunction::set_interior(const std::vector<double>& v) {
  if (v.size() != grid_.interior_size()) throw InputError("interior size mismatch");
  for (std::size_t k = 0; k < v.size(); ++k) {
    const auto [i, j] = grid_.node_of(k);
    at(i, j) = v[k];
  }
}

double GridFunction::interior_max_abs() const {
  double m = 0.0;
  for (std::size_t k = 0; k < grid_.interior_size(); ++k) {
    const auto [i, j] = grid_.node_of(k);
    m = std::max(m, std::abs(at(i, j)));
  }
  return m;
}

}  // namespace gchjb
