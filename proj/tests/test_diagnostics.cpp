#include <doctest.h>

#include <cmath>
#include <string>

#include "gchjb/diagnostics.hpp"

using namespace gchjb;

namespace {

EllipticProblem benchmark(const std::string& f, const std::string& g = "0") {
  return EllipticProblem::from_sources(1, {-1.0, 0.0}, {1.0, 0.0}, {"1"}, {"0"}, "1", f, g);
}

const ConstraintFunction kNorm = norm_minus_constant(1, 1.0, 1.0);
const ConstraintFunction kQuad = quadratic_form(1, Mat::Identity(), 1.0);

GridFunction sampled(const Grid& g, double (*fn)(double)) {
  GridFunction u(g);
  for (int i = 0; i < g.points(0); ++i) u.at(i) = fn(g.coord(0, i));
  return u;
}

const char* kExactInactive = "1 - (exp(x1) + exp(-x1)) / (exp(1) + exp(-1))";

}  // namespace

TEST_CASE("sandwich check") {
  const Grid g = Grid::make(1, {-1, 0}, {1, 0}, {9, 1});
  const auto zero = sandwich_check(GridFunction(g), GridFunction(g));
  CHECK(zero.pass);
  CHECK(zero.max_violation == 0.0);
  CHECK_FALSE(zero.strictly_below);

  const auto inactive = solve_constrained(benchmark("1"), kNorm, ContinuationSchedule::down_to(0.5, 1e-3), {999, 1});
  const auto si = sandwich_check(inactive.u, inactive.u_bar);
  CHECK(si.pass);
  CHECK(si.max_violation <= 1e-10);

  const auto active = solve_constrained(benchmark("3"), kNorm, ContinuationSchedule::down_to(0.5, 1e-3), {999, 1});
  const auto sa = sandwich_check(active.u, active.u_bar);
  CHECK(sa.pass);
  CHECK(sa.strictly_below);
  // At the centre: u-bar(0) = 3 (1 - 1/cosh 1) and u(0) = 3 - 1/sinh x*, tanh x* = 1/(2 + x*).
  double xs = 0.4;
  for (int k = 0; k < 100; ++k) xs = std::atanh(1.0 / (2.0 + xs));
  const double centre_gap = 3.0 * (1.0 - 1.0 / std::cosh(1.0)) - (3.0 - 1.0 / std::sinh(xs));
  CHECK(sa.max_gap >= centre_gap - 1e-2);

  GridFunction above = active.u_bar;
  above.at(500) += 1e-6;
  CHECK_FALSE(sandwich_check(above, active.u_bar).pass);
}

TEST_CASE("free boundary extraction") {
  const auto schedule = ContinuationSchedule::down_to(0.5, 1e-3);
  {
    const auto op = assemble(benchmark("1"), {999, 1});
    const auto rep = solve_constrained(op, kNorm, schedule);
    const auto mask = free_boundary(op, rep.u, kNorm, rep.activity_tol);
    CHECK(mask.count(kPdeActive) == 999);
    CHECK(mask.interface_points.empty());
  }
  {
    const auto op = assemble(benchmark("0"), {99, 1});
    const auto mask = free_boundary(op, solve_unconstrained(op), kNorm, 0.01);
    CHECK(mask.count(kPdeActive) == 99);
  }
  {
    const auto op = assemble(benchmark("3"), {1999, 1});
    const auto rep = solve_constrained(op, kNorm, schedule);
    const auto mask = free_boundary(op, rep.u, kNorm, rep.activity_tol);
    CHECK(mask.flags.size() == 1999);
    CHECK(mask.flag_at(1) == kConstraintActive);
    CHECK(mask.flag_at(1999) == kConstraintActive);
    CHECK(mask.flag_at(1000) == kPdeActive);
    CHECK(mask_symmetry_defect(mask) <= 1);
    REQUIRE(mask.interface_points.size() == 2);
    double xs = 0.4;
    for (int k = 0; k < 100; ++k) xs = std::atanh(1.0 / (2.0 + xs));
    CHECK(std::abs(std::abs(mask.interface_points[0](0)) - xs) <= 0.02);
    CHECK(mask.interface_points[0](0) == doctest::Approx(-mask.interface_points[1](0)));
    // both_near lies in the activity band.
    const auto du = gradient(rep.u);
    for (std::size_t k = 0; k < mask.flags.size(); ++k) {
      if (mask.flags[k] == kBothNear) CHECK(std::abs(kNorm.value(du[k])) <= mask.tol);
    }
  }
}

TEST_CASE("symmetry defect of hand-made masks") {
  FreeBoundaryMask m;
  m.grid = Grid::make(2, {-1, -1}, {1, 1}, {5, 5});
  m.flags.assign(25, kPdeActive);
  m.flags[m.grid.unknown(1, 1)] = kConstraintActive;
  CHECK(mask_symmetry_defect(m) == 4);  // nearest active node to each image is the corner itself
  for (auto [i, j] : {std::array<int, 2>{1, 5}, {5, 1}, {5, 5}}) m.flags[m.grid.unknown(i, j)] = kConstraintActive;
  CHECK(mask_symmetry_defect(m) == 0);
  m.flags[m.grid.unknown(5, 5)] = kPdeActive;
  m.flags[m.grid.unknown(5, 4)] = kConstraintActive;
  CHECK(mask_symmetry_defect(m) == 1);
}

TEST_CASE("regularity statistics") {
  for (int n : {19, 99, 399}) {
    const Grid g = Grid::make(1, {-1, 0}, {1, 0}, {n, 1});
    const auto u = sampled(g, [](double x) { return x * x; });
    CHECK(second_difference_sup(u, 1) == doctest::Approx(2.0).epsilon(1e-9));
    const auto fit = holder_fit(u, 5);
    if (n > 19) CHECK(fit.alpha == doctest::Approx(1.0).epsilon(1e-6));
  }

  std::vector<RegularityRun> few;
  const Grid g = Grid::make(1, {-1, 0}, {1, 0}, {19, 1});
  few.push_back({0.1, GridFunction(g)});
  few.push_back({0.01, GridFunction(g)});
  CHECK_THROWS_WITH_AS(regularity_scan(few, 5), doctest::Contains("insufficient data"), InputError);

  // Inactive case: smooth solution, Lipschitz gradient.
  const auto smooth = solve_unconstrained(benchmark("1"), {1999, 1});
  const auto fit = holder_fit(smooth, 5);
  CHECK(fit.alpha >= 0.95);
  CHECK(fit.min_pairs >= 10);
}

TEST_CASE("second differences stay bounded in eps for a uniformly convex constraint") {
  ConstrainedOptions opts;
  opts.keep_stages = true;
  const auto schedule = ContinuationSchedule{{1e-1, 1e-2, 1e-3}, {}};
  std::vector<RegularityRun> runs;
  for (int n : {999, 1999}) {
    const auto rep = solve_constrained(benchmark("3"), kQuad, schedule, {n, 1}, opts);
    for (std::size_t k = 0; k < rep.stages.size(); ++k) runs.push_back({rep.stages[k].eps, rep.stage_solutions[k]});
  }
  const auto report = regularity_scan(runs, 5);
  CHECK(report.rows.size() == 6);
  CHECK(report.second_diff_spread.size() == 2);
  CHECK(report.bounded_in_eps(0.2));
  CHECK(report.interior_margin == doctest::Approx(5e-3));
  CHECK(report.holder_alpha_estimate > 0.0);
  CHECK(report.holder_alpha_estimate <= 1.0);
  // The gradient bound is approached as eps -> 0; check it on the smallest-eps rows.
  for (const auto& row : report.rows) {
    if (row.eps == 1e-3) CHECK(row.sup_grad <= 1.0 + 5.0 * (row.eps + row.h));
  }
}

TEST_CASE("comparison test") {
  const auto schedule = ContinuationSchedule::down_to(0.5, 1e-2);
  const std::vector<OrderedPair> pairs = {
      {"1", "1", "", ""}, {"1", "1.5", "", ""}, {"3", "3", "0", "0.1"}, {"", "", "0", "0.1"}};
  const auto report = comparison_test(benchmark("1"), kNorm, schedule, {399, 1}, pairs);
  REQUIRE(report.rows.size() == 4);
  CHECK(report.all_passed());
  CHECK(report.rows[0].max_violation == 0.0);  // equal data, equal solutions
  CHECK_THROWS_AS(comparison_test(benchmark("1"), kNorm, schedule, {399, 1}, {{"2", "1", "", ""}}), InputError);
  CHECK_THROWS_AS(comparison_test(benchmark("1"), kNorm, schedule, {399, 1}, {{"", "", "0.1", "0"}}), InputError);
}

TEST_CASE("convergence study") {
  const auto schedule = ContinuationSchedule::down_to(0.5, 1e-3);
  const std::vector<std::array<int, 2>> shapes = {{19, 1}, {39, 1}, {79, 1}};
  const auto exact = Expression::parse(kExactInactive);
  const auto r = convergence_study(benchmark("1"), kNorm, schedule, shapes, exact);
  CHECK(r.value_rate_h >= 1.8);
  CHECK(r.value_rate_h <= 2.2);
  CHECK(r.rows.size() == 3 * schedule.eps.size());

  const auto zero = convergence_study(benchmark("0"), kNorm, schedule, shapes, Expression::parse("0"));
  for (const auto& row : zero.rows) {
    CHECK(row.value_error == 0.0);
    CHECK(row.gradient_error == 0.0);
  }

  // Fine-reference mode on the active case: nested grids, eps increments shrink.
  const auto active = convergence_study(benchmark("3"), kNorm, ContinuationSchedule::down_to(0.1, 1e-3),
                                        {{99, 1}, {199, 1}, {399, 1}});
  REQUIRE(active.reference_consistency.has_value());
  CHECK(*active.reference_consistency <= 1e-2);
  for (std::size_t k = 1; k < active.eps_increments.size(); ++k) {
    CHECK(active.eps_increments[k] < active.eps_increments[k - 1]);
  }
  CHECK_THROWS_AS(convergence_study(benchmark("1"), kNorm, schedule, {{19, 1}, {39, 1}}), InputError);
  CHECK_THROWS_AS(convergence_study(benchmark("1"), kNorm, schedule, {{19, 1}, {40, 1}, {79, 1}}), InputError);
}

TEST_CASE("least-squares line") {
  const auto [slope, r2] = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(slope == doctest::Approx(2.0));
  CHECK(r2 == doctest::Approx(1.0));
}
