#include "gchjb/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gchjb {

namespace {

double eval_at(const Expression& e, const Grid& grid, int i, int j) {
  if (grid.dim == 1) return e.eval(grid.coord(0, i));
  return e.eval(grid.coord(0, i), grid.coord(1, j));
}

template <typename F>
void for_each_node(const Grid& grid, F&& fn) {
  const int nj = grid.dim == 1 ? 1 : grid.points(1);
  for (int i = 0; i < grid.points(0); ++i) {
    for (int j = 0; j < nj; ++j) fn(i, j);
  }
}

std::string coord_text(const Grid& grid, int i, int j) {
  std::ostringstream os;
  os << "x1=" << grid.coord(0, i);
  if (grid.dim == 2) os << ", x2=" << grid.coord(1, j);
  return os.str();
}

}  // namespace

EllipticProblem EllipticProblem::from_sources(int dim, std::array<double, 2> lo,
                                              std::array<double, 2> hi,
                                              const std::vector<std::string>& a,
                                              const std::vector<std::string>& b,
                                              const std::string& c, const std::string& f,
                                              const std::string& g) {
  if (dim != 1 && dim != 2) throw InputError("problem dimension must be 1 or 2");
  if (static_cast<int>(a.size()) != dim) {
    throw InputError("diffusion needs " + std::to_string(dim) + " diagonal expression(s)");
  }
  if (static_cast<int>(b.size()) != dim) {
    throw InputError("drift needs " + std::to_string(dim) + " expression(s)");
  }
  EllipticProblem p;
  p.dim = dim;
  p.lo = lo;
  p.hi = hi;
  for (const auto& s : a) p.a.push_back(Expression::parse(s));
  for (const auto& s : b) p.b.push_back(Expression::parse(s));
  p.c = Expression::parse(c);
  p.f = Expression::parse(f);
  p.g = Expression::parse(g);
  for (const Expression* e : {&p.c, &p.f, &p.g}) {
    if (e->arity() > dim) throw InputError("expression uses x2 in a 1D problem");
  }
  for (const auto* list : {&p.a, &p.b}) {
    for (const auto& e : *list) {
      if (e.arity() > dim) throw InputError("expression uses x2 in a 1D problem");
    }
  }
  return p;
}

CoefficientFloors validate(const EllipticProblem& problem, std::array<int, 2> shape) {
  const Grid grid = problem.grid(shape);
  if (static_cast<int>(problem.a.size()) != problem.dim ||
      static_cast<int>(problem.b.size()) != problem.dim) {
    throw InputError("coefficient count does not match the dimension");
  }
  CoefficientFloors floors{std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::infinity()};
  double f_min = std::numeric_limits<double>::infinity();
  int fi = 0, fj = 0, ai = 0, aj = 0, ci = 0, cj = 0;
  for_each_node(grid, [&](int i, int j) {
    for (const auto& a : problem.a) {
      const double v = eval_at(a, grid, i, j);
      if (v < floors.gamma) {
        floors.gamma = v;
        ai = i;
        aj = j;
      }
    }
    const double c = eval_at(problem.c, grid, i, j);
    if (c < floors.delta) {
      floors.delta = c;
      ci = i;
      cj = j;
    }
    const double f = eval_at(problem.f, grid, i, j);
    if (f < f_min) {
      f_min = f;
      fi = i;
      fj = j;
    }
    for (const auto& b : problem.b) eval_at(b, grid, i, j);
    if (grid.on_boundary(i, j)) eval_at(problem.g, grid, i, j);
  });
  if (!(floors.gamma > 0.0)) {
    throw InputError("ellipticity violated: a = " + std::to_string(floors.gamma) + " at " +
                     coord_text(grid, ai, aj));
  }
  if (!(floors.delta > 0.0)) {
    throw InputError("c floor violated: c = " + std::to_string(floors.delta) + " at " +
                     coord_text(grid, ci, cj));
  }
  if (f_min < 0.0) {
    throw InputError("negative f: f = " + std::to_string(f_min) + " at " + coord_text(grid, fi, fj));
  }
  return floors;
}

DiscreteOperator assemble(const EllipticProblem& problem, std::array<int, 2> shape) {
  DiscreteOperator op;
  op.floors = validate(problem, shape);
  const Grid grid = problem.grid(shape);
  op.grid = grid;
  op.boundary.assign(grid.interior_size(), 0.0);
  op.source.assign(grid.interior_size(), 0.0);
  op.boundary_values = GridFunction(grid);
  for_each_node(grid, [&](int i, int j) {
    if (grid.on_boundary(i, j)) op.boundary_values.at(i, j) = eval_at(problem.g, grid, i, j);
  });

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(grid.interior_size() * (2 * grid.dim + 1));
  double max_admissible_h = std::numeric_limits<double>::infinity();
  bool monotone = true;

  for (std::size_t k = 0; k < grid.interior_size(); ++k) {
    const auto [i, j] = grid.node_of(k);
    op.source[k] = eval_at(problem.f, grid, i, j);
    double diag = eval_at(problem.c, grid, i, j);
    double off_sum = 0.0;

    const auto couple = [&](int ni, int nj, double coeff) {
      if (coeff > 0.0) monotone = false;
      off_sum += std::abs(coeff);
      if (grid.on_boundary(ni, nj)) {
        op.boundary[k] += coeff * op.boundary_values.at(ni, nj);
      } else {
        triplets.emplace_back(static_cast<int>(k), static_cast<int>(grid.unknown(ni, nj)), coeff);
      }
    };

    for (int axis = 0; axis < grid.dim; ++axis) {
      const double h = grid.h[axis];
      const double a = eval_at(problem.a[axis], grid, i, j);
      const double b = eval_at(problem.b[axis], grid, i, j);
      double lower = -a / (h * h);
      double upper = -a / (h * h);
      diag += 2.0 * a / (h * h);
      if (problem.drift == DriftScheme::kUpwind) {
        if (b > 0.0) {
          diag += b / h;
          lower -= b / h;
        } else if (b < 0.0) {
          diag -= b / h;
          upper += b / h;
        }
      } else {
        lower -= b / (2.0 * h);
        upper += b / (2.0 * h);
        if (b != 0.0) max_admissible_h = std::min(max_admissible_h, 2.0 * a / std::abs(b));
      }
      const int li = axis == 0 ? i - 1 : i;
      const int lj = axis == 0 ? j : j - 1;
      const int ui = axis == 0 ? i + 1 : i;
      const int uj = axis == 0 ? j : j + 1;
      couple(li, lj, lower);
      couple(ui, uj, upper);
    }
    if (!(diag > 0.0) || diag < off_sum * (1.0 - 1e-14)) monotone = false;
    triplets.emplace_back(static_cast<int>(k), static_cast<int>(k), diag);
  }

  if (!monotone) {
    std::ostringstream os;
    os << "monotonicity violated: the discretization is not an M-matrix at h = " << grid.h[0];
    if (std::isfinite(max_admissible_h)) os << "; max admissible h = " << max_admissible_h;
    throw InputError(os.str());
  }

  const int n = static_cast<int>(grid.interior_size());
  op.matrix.resize(n, n);
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  op.matrix.makeCompressed();
  return op;
}

GridFunction apply(const DiscreteOperator& op, const GridFunction& u) {
  if (!u.grid().same_shape(op.grid)) throw InputError("apply: grid shape mismatch");
  const auto interior = u.interior();
  const Eigen::Map<const Eigen::VectorXd> x(interior.data(), static_cast<Eigen::Index>(interior.size()));
  const Eigen::VectorXd y = op.matrix * x;
  GridFunction out(op.grid);
  for (std::size_t k = 0; k < interior.size(); ++k) {
    const auto [i, j] = op.grid.node_of(k);
    out.at(i, j) = y(static_cast<Eigen::Index>(k)) + op.boundary[k];
  }
  return out;
}

std::vector<Vec> gradient(const GridFunction& u) {
  const Grid& grid = u.grid();
  std::vector<Vec> out(grid.interior_size(), Vec::Zero());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto [i, j] = grid.node_of(k);
    out[k](0) = (u.at(i + 1, j) - u.at(i - 1, j)) / (2.0 * grid.h[0]);
    if (grid.dim == 2) out[k](1) = (u.at(i, j + 1) - u.at(i, j - 1)) / (2.0 * grid.h[1]);
  }
  return out;
}

GridFunction with_boundary(const DiscreteOperator& op, const std::vector<double>& interior) {
  GridFunction u = op.boundary_values;
  u.set_interior(interior);
  return u;
}

}  // namespace gchjb
