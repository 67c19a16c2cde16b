#include "gchjb/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gchjb/linear_solve.hpp"

namespace gchjb {

namespace {

struct PointState {
  std::vector<Vec> grad;
  std::vector<double> constraint;
};

PointState evaluate_constraint(const ConstraintFunction& h, const GridFunction& u) {
  PointState s;
  s.grad = gradient(u);
  s.constraint.resize(s.grad.size());
  for (std::size_t k = 0; k < s.grad.size(); ++k) s.constraint[k] = h.value(s.grad[k]);
  return s;
}

Eigen::VectorXd linear_part(const DiscreteOperator& op, const GridFunction& u) {
  const auto interior = u.interior();
  const Eigen::Map<const Eigen::VectorXd> x(interior.data(),
                                            static_cast<Eigen::Index>(interior.size()));
  Eigen::VectorXd y = op.matrix * x;
  for (std::size_t k = 0; k < interior.size(); ++k) y(static_cast<Eigen::Index>(k)) += op.boundary[k];
  return y;
}

double sup_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Size of rounding noise in the residual: a few ulps of the largest term.
double residual_noise_floor(const DiscreteOperator& op, const GridFunction& u,
                            const std::vector<double>& penalty) {
  const auto interior = u.interior();
  std::vector<double> scale(interior.size(), 0.0);
  for (int col = 0; col < op.matrix.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(op.matrix, col); it; ++it) {
      scale[static_cast<std::size_t>(it.row())] += std::abs(it.value() * interior[static_cast<std::size_t>(col)]);
    }
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < scale.size(); ++k) {
    worst = std::max(worst, scale[k] + std::abs(op.boundary[k]) + std::abs(op.source[k]) +
                                std::abs(penalty[k]));
  }
  return 16.0 * std::numeric_limits<double>::epsilon() * worst;
}

GridFunction attach_boundary(const DiscreteOperator& op, const GridFunction& guess) {
  if (!guess.grid().same_shape(op.grid)) throw InputError("initial guess has the wrong grid");
  return with_boundary(op, guess.interior());
}

double max_second_difference(const GridFunction& u, int margin) {
  const Grid& g = u.grid();
  double m = 0.0;
  for (std::size_t k = 0; k < g.interior_size(); ++k) {
    const auto [i, j] = g.node_of(k);
    if (i < margin || i > g.n[0] + 1 - margin) continue;
    if (g.dim == 2 && (j < margin || j > g.n[1] + 1 - margin)) continue;
    m = std::max(m, std::abs(u.at(i + 1, j) - 2.0 * u.at(i, j) + u.at(i - 1, j)) / (g.h[0] * g.h[0]));
    if (g.dim == 2) {
      m = std::max(m,
                   std::abs(u.at(i, j + 1) - 2.0 * u.at(i, j) + u.at(i, j - 1)) / (g.h[1] * g.h[1]));
    }
  }
  return m;
}

}  // namespace

ContinuationSchedule ContinuationSchedule::geometric(double start, double factor, int count) {
  ContinuationSchedule s;
  double e = start;
  for (int k = 0; k < count; ++k, e *= factor) s.eps.push_back(e);
  return s;
}

ContinuationSchedule ContinuationSchedule::down_to(double start, double final_eps, double factor) {
  if (!(factor > 0.0 && factor < 1.0)) throw InputError("continuation factor must lie in (0, 1)");
  if (!(final_eps > 0.0 && start >= final_eps)) throw InputError("need start >= final eps > 0");
  ContinuationSchedule s;
  for (double e = start; e > final_eps * (1.0 + 1e-12); e *= factor) s.eps.push_back(e);
  s.eps.push_back(final_eps);
  return s;
}

void ContinuationSchedule::validate() const {
  if (eps.empty()) throw InputError("continuation schedule is empty");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0) || !std::isfinite(eps[i])) throw InputError("eps values must be positive");
    if (i > 0 && !(eps[i] < eps[i - 1])) throw InputError("eps values must strictly decrease");
  }
  if (newton.max_iter < 1) throw InputError("newton.max_iter must be positive");
  if (!(newton.abs_tol >= 0.0)) throw InputError("newton.abs_tol must be non-negative");
  if (!(newton.armijo > 0.0 && newton.armijo < 1.0)) throw InputError("newton.armijo must lie in (0, 1)");
  if (!(newton.min_step > 0.0 && newton.min_step <= 1.0)) {
    throw InputError("newton.min_step must lie in (0, 1]");
  }
}

GridFunction solve_unconstrained(const DiscreteOperator& op) {
  const Eigen::Index n = static_cast<Eigen::Index>(op.grid.interior_size());
  Eigen::VectorXd rhs(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    rhs(k) = op.source[static_cast<std::size_t>(k)] - op.boundary[static_cast<std::size_t>(k)];
  }
  DirectSolver solver;
  if (!solver.factorize(op.matrix)) throw SolveError("singular discrete operator");
  const Eigen::VectorXd x = solver.solve(rhs);
  std::vector<double> interior(x.data(), x.data() + x.size());
  for (double v : interior) {
    if (!std::isfinite(v)) throw SolveError("singular discrete operator");
  }
  return with_boundary(op, interior);
}

GridFunction solve_unconstrained(const EllipticProblem& problem, std::array<int, 2> shape) {
  return solve_unconstrained(assemble(problem, shape));
}

std::vector<double> penalized_residual(const DiscreteOperator& op, const ConstraintFunction& h,
                                       const PenaltyFamily& family, const GridFunction& u) {
  const auto state = evaluate_constraint(h, u);
  const Eigen::VectorXd lin = linear_part(op, u);
  std::vector<double> r(state.constraint.size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    r[k] = lin(static_cast<Eigen::Index>(k)) + family.beta(state.constraint[k]) - op.source[k];
  }
  return r;
}

PenalizedResult solve_penalized(const DiscreteOperator& op, const ConstraintFunction& h,
                                const PenaltyFamily& family, const GridFunction& initial_guess,
                                const NewtonOptions& newton) {
  if (!(h.value(Vec::Zero()) < 0.0)) throw InputError("constraint must satisfy H(0) < 0");
  const Grid& grid = op.grid;
  if (h.dim() != grid.dim) throw InputError("constraint dimension does not match the problem");
  const std::size_t n = grid.interior_size();

  GridFunction u = attach_boundary(op, initial_guess);

  struct Evaluation {
    PointState state;
    std::vector<double> penalty;
    Eigen::VectorXd residual;
    double norm = 0.0;
  };
  const auto evaluate = [&](const GridFunction& v) {
    Evaluation e;
    e.state = evaluate_constraint(h, v);
    e.penalty.resize(n);
    e.residual = linear_part(op, v);
    for (std::size_t k = 0; k < n; ++k) {
      e.penalty[k] = family.beta(e.state.constraint[k]);
      e.residual(static_cast<Eigen::Index>(k)) += e.penalty[k] - op.source[k];
    }
    e.norm = sup_norm(e.residual);
    return e;
  };

  Evaluation current = evaluate(u);
  DirectSolver solver;
  std::vector<Eigen::Triplet<double>> triplets;

  for (int it = 0;; ++it) {
    const double floor = residual_noise_floor(op, u, current.penalty);
    const double tol = newton.abs_tol > 0.0 ? std::max(newton.abs_tol, floor) : 0.0;
    if (!std::isfinite(current.norm)) throw SolveError("residual became non-finite");
    if (current.norm <= tol) return {u, it, current.norm, tol};
    if (it >= newton.max_iter) {
      std::ostringstream os;
      os << "Newton did not converge in " << newton.max_iter << " iterations (residual "
         << current.norm << ", tolerance " << tol << ")";
      throw SolveError(os.str());
    }

    // Generalized Jacobian: A_h + beta'(H(p_k)) DH(p_k) . dp_k/du.
    triplets.clear();
    for (int col = 0; col < op.matrix.outerSize(); ++col) {
      for (SparseMatrix::InnerIterator itm(op.matrix, col); itm; ++itm) {
        triplets.emplace_back(static_cast<int>(itm.row()), col, itm.value());
      }
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double slope = family.beta_prime(current.state.constraint[k]);
      if (slope == 0.0) continue;
      const Vec dh = h.subgradient(current.state.grad[k]);
      const auto [i, j] = grid.node_of(k);
      for (int axis = 0; axis < grid.dim; ++axis) {
        const double coeff = slope * dh(axis) / (2.0 * grid.h[axis]);
        if (coeff == 0.0) continue;
        const int ui = axis == 0 ? i + 1 : i;
        const int uj = axis == 0 ? j : j + 1;
        const int li = axis == 0 ? i - 1 : i;
        const int lj = axis == 0 ? j : j - 1;
        if (!grid.on_boundary(ui, uj)) {
          triplets.emplace_back(static_cast<int>(k), static_cast<int>(grid.unknown(ui, uj)), coeff);
        }
        if (!grid.on_boundary(li, lj)) {
          triplets.emplace_back(static_cast<int>(k), static_cast<int>(grid.unknown(li, lj)), -coeff);
        }
      }
    }
    SparseMatrix jac(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    jac.setFromTriplets(triplets.begin(), triplets.end());
    jac.makeCompressed();
    if (!solver.factorize(jac)) throw SolveError("singular Newton Jacobian");
    const Eigen::VectorXd step = solver.solve(-current.residual);
    if (!step.allFinite()) throw SolveError("singular Newton Jacobian");

    const auto base = u.interior();
    bool accepted = false;
    for (double s = 1.0; s >= newton.min_step; s *= 0.5) {
      std::vector<double> trial(n);
      for (std::size_t k = 0; k < n; ++k) trial[k] = base[k] + s * step(static_cast<Eigen::Index>(k));
      GridFunction candidate = with_boundary(op, trial);
      Evaluation e = evaluate(candidate);
      if (e.norm <= (1.0 - newton.armijo * s) * current.norm) {
        u = std::move(candidate);
        current = std::move(e);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      std::ostringstream os;
      os << "Newton stagnated at iteration " << it << " (residual " << current.norm
         << ", tolerance " << tol << ")";
      throw SolveError(os.str());
    }
  }
}

PenalizedResult solve_penalized(const DiscreteOperator& op, const ConstraintFunction& h,
                                const PenaltyFamily& family, const NewtonOptions& newton) {
  return solve_penalized(op, h, family, solve_unconstrained(op), newton);
}

ComplementarityStats complementarity(const DiscreteOperator& op, const ConstraintFunction& h,
                                     const GridFunction& u) {
  const auto state = evaluate_constraint(h, u);
  const Eigen::VectorXd lin = linear_part(op, u);
  ComplementarityStats s;
  s.max_constraint = -std::numeric_limits<double>::infinity();
  s.max_pde = -std::numeric_limits<double>::infinity();
  s.max_min_slack = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < state.constraint.size(); ++k) {
    const double pde = lin(static_cast<Eigen::Index>(k)) - op.source[k];
    const double con = state.constraint[k];
    s.residual = std::max(s.residual, std::max(pde, con));
    s.max_constraint = std::max(s.max_constraint, con);
    s.max_pde = std::max(s.max_pde, pde);
    s.max_min_slack = std::max(s.max_min_slack, std::min(-pde, -con));
  }
  return s;
}

std::vector<int> activity_mask(const DiscreteOperator& op, const ConstraintFunction& h,
                               const GridFunction& u, double tol) {
  const auto state = evaluate_constraint(h, u);
  const Eigen::VectorXd lin = linear_part(op, u);
  std::vector<int> mask(state.constraint.size());
  for (std::size_t k = 0; k < mask.size(); ++k) {
    const double pde = lin(static_cast<Eigen::Index>(k)) - op.source[k];
    const double con = state.constraint[k];
    if (std::abs(pde) <= tol && std::abs(con) <= tol) {
      mask[k] = kBothNear;
    } else {
      mask[k] = con > pde ? kConstraintActive : kPdeActive;
    }
  }
  return mask;
}

std::vector<double> effective_eps(const ContinuationSchedule& schedule,
                                  const ConstraintFunction& h) {
  std::vector<double> eps = schedule.eps;
  if (const auto theta = h.convexification_weight(); theta && !eps.empty() && eps.back() >= *theta) {
    eps.push_back(0.5 * *theta);
  }
  return eps;
}

SolveReport solve_constrained(const DiscreteOperator& op, const ConstraintFunction& h,
                              const ContinuationSchedule& schedule,
                              const ConstrainedOptions& options) {
  schedule.validate();
  SolveReport report;
  report.theta = h.convexification_weight();
  report.u_bar = solve_unconstrained(op);
  GridFunction u = report.u_bar;

  for (double eps : effective_eps(schedule, h)) {
    const PenaltyFamily family(eps, options.bridge);
    PenalizedResult res;
    try {
      res = solve_penalized(op, h, family, u, schedule.newton);
    } catch (const SolveError& e) {
      std::ostringstream os;
      os << "at eps = " << eps << ": " << e.what();
      throw SolveError(os.str());
    }
    u = std::move(res.u);

    StageRecord rec;
    rec.eps = eps;
    rec.iterations = res.iterations;
    rec.residual = res.residual;
    rec.tolerance = res.tolerance;
    rec.below_theta = !report.theta || eps < *report.theta;
    const auto state = evaluate_constraint(h, u);
    rec.max_constraint = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < state.grad.size(); ++k) {
      rec.max_penalty = std::max(rec.max_penalty, family.beta(state.constraint[k]));
      rec.max_grad = std::max(rec.max_grad, state.grad[k].norm());
      rec.max_constraint = std::max(rec.max_constraint, state.constraint[k]);
    }
    rec.max_second_diff = max_second_difference(u, options.margin_cells);
    const auto& uv = u.values();
    const auto& bv = report.u_bar.values();
    for (std::size_t k = 0; k < op.grid.interior_size(); ++k) {
      const auto [i, j] = op.grid.node_of(k);
      const std::size_t idx = op.grid.index(i, j);
      rec.sandwich_violation = std::max({rec.sandwich_violation, -uv[idx], uv[idx] - bv[idx]});
    }
    report.stages.push_back(rec);
    if (options.keep_stages) report.stage_solutions.push_back(u);
  }

  report.u = u;
  report.complementarity = complementarity(op, h, u);
  const double h_min = op.grid.dim == 1 ? op.grid.h[0] : std::min(op.grid.h[0], op.grid.h[1]);
  report.activity_tol = options.activity_tol > 0.0
                            ? options.activity_tol
                            : 10.0 * (report.stages.back().eps + h_min);
  report.free_boundary_mask = activity_mask(op, h, u, report.activity_tol);
  return report;
}

SolveReport solve_constrained(const EllipticProblem& problem, const ConstraintFunction& h,
                              const ContinuationSchedule& schedule, std::array<int, 2> shape,
                              const ConstrainedOptions& options) {
  return solve_constrained(assemble(problem, shape), h, schedule, options);
}

}  // namespace gchjb
