// The linear elliptic operator L u = -a : D^2 u + b . Du + c u on a box, its
// data checks, and a monotone finite-difference discretization with Dirichlet
// boundary values g.
#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "gchjb/convex.hpp"
#include "gchjb/expr.hpp"
#include "gchjb/grid.hpp"

namespace gchjb {

enum class DriftScheme {
  kUpwind,   // first order, monotone for every h
  kCentral,  // second order, monotone only for h <= 2 a / |b|
};

struct EllipticProblem {
  int dim = 1;
  std::array<double, 2> lo{-1.0, -1.0};
  std::array<double, 2> hi{1.0, 1.0};
  // Diffusion: one expression in 1D, the diagonal (a11, a22) in 2D.
  std::vector<Expression> a;
  // Drift, one expression per axis.
  std::vector<Expression> b;
  Expression c;
  Expression f;
  Expression g;  // boundary data
  DriftScheme drift = DriftScheme::kUpwind;

  // Builds a problem from expression sources; throws on parse errors or a
  // coefficient count that does not match `dim`.
  static EllipticProblem from_sources(int dim, std::array<double, 2> lo, std::array<double, 2> hi,
                                      const std::vector<std::string>& a,
                                      const std::vector<std::string>& b, const std::string& c,
                                      const std::string& f, const std::string& g = "0");

  Grid grid(std::array<int, 2> shape) const { return Grid::make(dim, lo, hi, shape); }
};

struct CoefficientFloors {
  double gamma = 0.0;  // min of a over the grid
  double delta = 0.0;  // min of c over the grid
};

// Evaluates a, c, f on every grid node (boundary included) and returns the
// empirical floors. Throws InputError on "ellipticity violated", "c floor
// violated" or "negative f".
CoefficientFloors validate(const EllipticProblem& problem, std::array<int, 2> shape);

using SparseMatrix = Eigen::SparseMatrix<double>;

struct DiscreteOperator {
  Grid grid;
  // Interior-by-interior matrix of L_h.
  SparseMatrix matrix;
  // Contribution of the Dirichlet data to each interior row.
  std::vector<double> boundary;
  // Source f sampled on interior nodes.
  std::vector<double> source;
  // Boundary data on the full grid (interior entries zero).
  GridFunction boundary_values;
  CoefficientFloors floors;
};

// Throws InputError when the assembled matrix is not an M-matrix; the message
// carries the largest admissible spacing.
DiscreteOperator assemble(const EllipticProblem& problem, std::array<int, 2> shape);

// A_h u + boundary contribution on interior nodes; boundary layer set to 0.
GridFunction apply(const DiscreteOperator& op, const GridFunction& u);

// Central differences at interior nodes, in unknown order.
std::vector<Vec> gradient(const GridFunction& u);

// Grid function equal to the boundary data on the boundary layer and to
// `interior` inside.
GridFunction with_boundary(const DiscreteOperator& op, const std::vector<double>& interior);

}  // namespace gchjb
