// Executable checks on solver output: sub/supersolution sandwich, free
// boundary extraction, regularity statistics, comparison and convergence
// studies.
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "gchjb/convex.hpp"
#include "gchjb/expr.hpp"
#include "gchjb/operator.hpp"
#include "gchjb/solver.hpp"

namespace gchjb {

struct SandwichResult {
  bool pass = false;
  double max_violation = 0.0;  // max of (-u)^+ and (u - ubar)^+
  double max_gap = 0.0;        // max (ubar - u)
  bool strictly_below = false;  // u < ubar - tol somewhere
};

// Checks -tol <= u <= ubar + tol at every node.
SandwichResult sandwich_check(const GridFunction& u, const GridFunction& u_bar, double tol = 1e-8);

struct FreeBoundaryMask {
  Grid grid;
  std::vector<int> flags;  // Activity per interior unknown
  double tol = 0.0;
  // Midpoints between neighbouring nodes where a constraint-active node meets
  // a PDE-active or both-near node.
  std::vector<Vec> interface_points;

  int count(Activity a) const;
  int flag_at(int i, int j = 1) const { return flags[grid.unknown(i, j)]; }
};

FreeBoundaryMask free_boundary(const DiscreteOperator& op, const GridFunction& u,
                               const ConstraintFunction& h, double tol);

// Largest Chebyshev distance, in cells, from the image of a non-PDE node to the
// nearest non-PDE node, over the symmetries of the box (x -> -x in 1D; axis
// reflections in 2D, the full dihedral group on a square grid). 0 for an
// exactly symmetric mask or one with no such nodes.
int mask_symmetry_defect(const FreeBoundaryMask& mask);

// sup |D_h u| and sup of axis second differences over nodes at least
// `margin_cells` from the boundary.
double gradient_sup(const GridFunction& u, int margin_cells);
double second_difference_sup(const GridFunction& u, int margin_cells);

struct HolderFit {
  double alpha = 0.0;      // regression slope
  double r_squared = 0.0;
  int scales = 0;
  int min_pairs = 0;       // fewest point pairs used at any scale
};

// Regresses log max|Du(x) - Du(y)| on log|x - y| over dyadic separations.
HolderFit holder_fit(const GridFunction& u, int margin_cells);

struct RegularityRun {
  double eps = 0.0;
  GridFunction u;
};

struct RegularityRow {
  double eps = 0.0;
  double h = 0.0;
  double sup_grad = 0.0;
  double sup_second_diff = 0.0;
  HolderFit holder;
};

struct RegularityReport {
  double interior_margin = 0.0;  // physical distance excluded near the boundary
  std::vector<RegularityRow> rows;
  double sup_grad = 0.0;
  double sup_second_diff = 0.0;
  double holder_alpha_estimate = 0.0;  // median fit, clamped to (0, 1]
  // Per distinct h: (max - min)/min of sup_second_diff across eps.
  std::vector<std::pair<double, double>> second_diff_spread;

  // True when every spread is below `threshold`.
  bool bounded_in_eps(double threshold) const;
};

// Needs at least 3 distinct eps and 2 distinct h; throws InputError otherwise.
RegularityReport regularity_scan(const std::vector<RegularityRun>& runs, int margin_cells = 5);

struct OrderedPair {
  // Expression sources; empty strings keep the base problem's data.
  std::string f_low, f_high;
  std::string g_low, g_high;
};

struct ComparisonRow {
  OrderedPair pair;
  double max_violation = 0.0;  // max (u_low - u_high)^+
  bool pass = false;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  bool all_passed() const;
};

// Solves both members of every pair and checks u_low <= u_high + 1e-8. Throws
// InputError if a pair's data is not ordered on the grid.
ComparisonReport comparison_test(const EllipticProblem& problem, const ConstraintFunction& h,
                                 const ContinuationSchedule& schedule, std::array<int, 2> shape,
                                 const std::vector<OrderedPair>& pairs, double tol = 1e-8);

struct StudyRow {
  int level = 0;
  double h = 0.0;
  double eps = 0.0;
  double value_error = 0.0;
  double gradient_error = 0.0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  double value_rate_h = 0.0;     // slope of log error vs log h at the smallest eps
  double gradient_rate_h = 0.0;
  double value_rate_eps = 0.0;   // slope vs log eps at the finest h
  double gradient_rate_eps = 0.0;
  // Sup differences between successive eps at the finest h.
  std::vector<double> eps_increments;
  // Sup difference of the two finest levels on the coarser one (fine reference only).
  std::optional<double> reference_consistency;
};

// With `exact`, errors are against that expression; otherwise against the
// finest-shape, smallest-eps solve (grids must nest). Needs >= 3 shapes.
StudyResult convergence_study(const EllipticProblem& problem, const ConstraintFunction& h,
                              const ContinuationSchedule& schedule,
                              const std::vector<std::array<int, 2>>& shapes,
                              const std::optional<Expression>& exact = std::nullopt);

// Least-squares slope and R^2 of y against x.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace gchjb
