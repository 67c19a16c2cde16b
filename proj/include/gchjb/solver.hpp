// Discrete penalized equation L_h u + beta_eps(H(D_h u)) = f solved by damped
// semismooth Newton along a decreasing eps ladder, and the unconstrained
// problem L_h u = f.
#pragma once

#include <array>
#include <optional>
#include <vector>

#include "gchjb/convex.hpp"
#include "gchjb/grid.hpp"
#include "gchjb/operator.hpp"
#include "gchjb/penalty.hpp"

namespace gchjb {

struct NewtonOptions {
  int max_iter = 100;
  double abs_tol = 1e-10;  // on the residual sup norm
  double armijo = 1e-4;
  double min_step = 0x1p-20;
};

struct ContinuationSchedule {
  std::vector<double> eps;
  NewtonOptions newton;

  // eps_k = start * factor^k for k = 0..count-1.
  static ContinuationSchedule geometric(double start, double factor, int count);
  // start, start*factor, ... until the value reaches `final_eps` (included).
  static ContinuationSchedule down_to(double start, double final_eps, double factor = 0.5);
  // 0.5 * 2^-k, k = 0..10.
  static ContinuationSchedule standard() { return geometric(0.5, 0.5, 11); }

  // Throws InputError unless eps is non-empty, positive and strictly decreasing
  // and the Newton options are positive.
  void validate() const;
};

// Interior-point bounds tracked for every eps.
struct StageRecord {
  double eps = 0.0;
  int iterations = 0;
  double residual = 0.0;
  double tolerance = 0.0;       // the residual target actually used
  double max_penalty = 0.0;     // max beta_eps(H(D_h u))
  double max_grad = 0.0;        // ||D_h u||_inf
  double max_second_diff = 0.0;  // interior, margin cells excluded
  double max_constraint = 0.0;  // max H(D_h u)
  double sandwich_violation = 0.0;  // max of (-u)^+ and (u - ubar)^+
  bool below_theta = true;      // eps < theta of a convexified constraint
};

struct ComplementarityStats {
  double residual = 0.0;        // max (max{L_h u - f, H(D_h u)})^+
  double max_constraint = 0.0;  // max H(D_h u)
  double max_pde = 0.0;         // max (L_h u - f)
  double max_min_slack = 0.0;   // max min{f - L_h u, -H(D_h u)}
};

struct SolveReport {
  GridFunction u;
  GridFunction u_bar;  // solution of L_h u = f
  std::vector<StageRecord> stages;
  ComplementarityStats complementarity;
  // Per interior unknown: 0 PDE active, 1 constraint active, 2 both within tol.
  std::vector<int> free_boundary_mask;
  double activity_tol = 0.0;
  std::optional<double> theta;  // weight of a convexified constraint
  // One solution per stage when ConstrainedOptions::keep_stages is set.
  std::vector<GridFunction> stage_solutions;
};

struct PenalizedResult {
  GridFunction u;
  int iterations = 0;
  double residual = 0.0;
  double tolerance = 0.0;
};

// Exact LU solve of L_h u = f with boundary data g.
GridFunction solve_unconstrained(const DiscreteOperator& op);
GridFunction solve_unconstrained(const EllipticProblem& problem, std::array<int, 2> shape);

// Throws SolveError on Newton stagnation or iteration exhaustion, InputError
// if H(0) >= 0.
PenalizedResult solve_penalized(const DiscreteOperator& op, const ConstraintFunction& h,
                                const PenaltyFamily& family, const GridFunction& initial_guess,
                                const NewtonOptions& newton = {});
PenalizedResult solve_penalized(const DiscreteOperator& op, const ConstraintFunction& h,
                                const PenaltyFamily& family, const NewtonOptions& newton = {});

struct ConstrainedOptions {
  int margin_cells = 5;
  // Activity band for the free-boundary mask; <= 0 selects 10 (eps + h).
  double activity_tol = 0.0;
  PenaltyFamily::Bridge bridge = PenaltyFamily::Bridge::kQuadratic;
  bool keep_stages = false;
};

SolveReport solve_constrained(const DiscreteOperator& op, const ConstraintFunction& h,
                              const ContinuationSchedule& schedule,
                              const ConstrainedOptions& options = {});
SolveReport solve_constrained(const EllipticProblem& problem, const ConstraintFunction& h,
                              const ContinuationSchedule& schedule, std::array<int, 2> shape,
                              const ConstrainedOptions& options = {});

// Residual vector A_h u + bc + beta(H(D_h u)) - f on interior unknowns.
std::vector<double> penalized_residual(const DiscreteOperator& op, const ConstraintFunction& h,
                                       const PenaltyFamily& family, const GridFunction& u);

ComplementarityStats complementarity(const DiscreteOperator& op, const ConstraintFunction& h,
                                     const GridFunction& u);

enum Activity : int { kPdeActive = 0, kConstraintActive = 1, kBothNear = 2 };

// Classifies interior unknowns: kBothNear when |L_h u - f| <= tol and
// |H(D_h u)| <= tol, otherwise the branch with the larger value is active.
std::vector<int> activity_mask(const DiscreteOperator& op, const ConstraintFunction& h,
                               const GridFunction& u, double tol);

// The eps list actually run: entries at or above theta are kept as warm-up
// stages and theta/2 is appended when the last entry is not below theta.
std::vector<double> effective_eps(const ContinuationSchedule& schedule,
                                  const ConstraintFunction& h);

}  // namespace gchjb
