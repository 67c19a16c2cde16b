#include <doctest.h>

#include <cmath>
#include <string>

#include "gchjb/mc.hpp"

using namespace gchjb;

namespace {

EllipticProblem benchmark(const std::string& f, const std::string& a = "1") {
  return EllipticProblem::from_sources(1, {-1.0, 0.0}, {1.0, 0.0}, {a}, {"0"}, "1", f);
}

const ConvexBody kUnit = ConvexBody::interval(-1.0, 1.0);

McOptions quick(int n_paths, double dt, std::uint64_t seed = 7) {
  McOptions o;
  o.n_paths = n_paths;
  o.dt = dt;
  o.seed = seed;
  return o;
}

SolveReport active_solve() {
  return solve_constrained(benchmark("3"), norm_minus_constant(1, 1.0, 1.0),
                           ContinuationSchedule::down_to(0.5, 1e-3), {999, 1});
}

}  // namespace

TEST_CASE("volatility from the diffusion coefficient") {
  CHECK(sigma_from_a(benchmark("1"))(0.3) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(sigma_from_a(benchmark("1", "0.5"))(-0.7) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sigma_from_a(benchmark("1", "2 + sin(x1)"))(0.0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("control cost from the support function") {
  CHECK(support_cost(kUnit, 1) == 1.0);
  CHECK(support_cost(kUnit, -1) == 1.0);
  const auto skew = ConvexBody::interval(-1.0, 2.0);
  CHECK(support_cost(skew, 1) == 2.0);
  CHECK(support_cost(skew, -1) == 1.0);
  CHECK(support_cost(ConvexBody::ball(1, 0.3), 1) == doctest::Approx(0.3));
  CHECK(support_cost(ConvexBody::ball(1, 0.3), -1) == doctest::Approx(0.3));
  CHECK_THROWS_AS(support_cost(kUnit, 0), InputError);
}

TEST_CASE("policies") {
  const auto p = ControlPolicy::from_region(-1.0, 1.0, -0.4, 0.5);
  REQUIRE(p.bands().size() == 2);
  CHECK(p.bands()[0].rho == 1);   // left band pushes towards lo
  CHECK(p.bands()[1].rho == -1);  // right band pushes towards hi
  CHECK(p.band_of(-0.9) == 0);
  CHECK(p.band_of(0.0) == -1);
  CHECK(p.band_of(0.8) == 1);
  REQUIRE(p.continuation().size() == 1);
  CHECK(p.continuation()[0].first == doctest::Approx(-0.4));
  CHECK(p.continuation()[0].second == doctest::Approx(0.5));
  const auto s = p.shrunk(0.1);
  CHECK(s.continuation()[0].first == doctest::Approx(-0.3));
  CHECK(s.continuation()[0].second == doctest::Approx(0.4));
  CHECK_THROWS_AS(p.shrunk(0.5), InputError);
  CHECK(ControlPolicy::uncontrolled(-1.0, 1.0).bands().empty());
  CHECK_THROWS_AS(ControlPolicy::from_region(-1.0, 1.0, 0.5, 0.2), InputError);

  SolveReport empty;
  empty.u = GridFunction(Grid::make(1, {-1, 0}, {1, 0}, {9, 1}));
  CHECK_THROWS_WITH_AS(ControlPolicy::from_solution(empty), doctest::Contains("free boundary required"), InputError);

  // Active benchmark: two bands, symmetric about 0, pushing outward.
  const auto solved = ControlPolicy::from_solution(active_solve());
  REQUIRE(solved.bands().size() == 2);
  CHECK(solved.bands()[0].lo == -1.0);
  CHECK(solved.bands()[1].hi == 1.0);
  CHECK(solved.bands()[0].hi == doctest::Approx(-solved.bands()[1].lo));
  CHECK(solved.bands()[0].rho == 1);
  CHECK(solved.bands()[1].rho == -1);
}

TEST_CASE("zero running cost with no control gives zero") {
  const auto est = estimate_value(benchmark("0"), ControlPolicy::uncontrolled(-1.0, 1.0), kUnit, 0.0,
                                  quick(500, 1e-3));
  CHECK(est.mean == 0.0);
  CHECK(est.std_error == 0.0);
  CHECK(est.n_paths == 500);
}

TEST_CASE("inactive benchmark matches the Feynman-Kac value") {
  const auto est = estimate_value(benchmark("1"), ControlPolicy::uncontrolled(-1.0, 1.0), kUnit, 0.0,
                                  quick(20000, 1e-3));
  const double exact = 1.0 - 1.0 / std::cosh(1.0);
  CHECK(std::abs(est.mean - exact) <= 3.0 * est.std_error + 0.02);
  CHECK(est.std_error > 0.0);
  CHECK(est.std_error < 0.01);
}

TEST_CASE("reproducibility") {
  const auto policy = ControlPolicy::from_region(-1.0, 1.0, -0.43, 0.43);
  McOptions a = quick(3000, 1e-3, 11);
  a.threads = 1;
  McOptions b = a;
  b.threads = 3;
  const auto e1 = estimate_value(benchmark("3"), policy, kUnit, 0.1, a);
  const auto e2 = estimate_value(benchmark("3"), policy, kUnit, 0.1, a);
  const auto e3 = estimate_value(benchmark("3"), policy, kUnit, 0.1, b);
  CHECK(e1.mean == e2.mean);
  CHECK(e1.std_error == e2.std_error);
  CHECK(e1.mean == e3.mean);
  CHECK(e1.std_error == e3.std_error);
  a.seed = 12;
  CHECK(estimate_value(benchmark("3"), policy, kUnit, 0.1, a).mean != e1.mean);
}

TEST_CASE("control path invariants") {
  const auto policy = ControlPolicy::from_region(-1.0, 1.0, -0.43, 0.43);
  int controlled = 0;
  for (std::uint64_t index = 0; index < 40; ++index) {
    const auto path = trace_path(benchmark("3"), policy, kUnit, 0.2, 1e-3, 5, index);
    REQUIRE(!path.xi.empty());
    CHECK(path.xi.front() == 0.0);
    CHECK(path.x.front() == 0.2);
    CHECK(path.exited);
    CHECK(path.discount > 0.0);
    CHECK(path.discount <= 1.0);
    for (std::size_t k = 1; k < path.xi.size(); ++k) {
      const double dxi = path.xi[k] - path.xi[k - 1];
      CHECK(dxi >= 0.0);
      if (dxi > 0.0) CHECK(std::abs(path.rho[k]) == 1);
      if (path.rho[k] != 0) ++controlled;
    }
    // Control is charged at unit price for K = [-1, 1].
    CHECK(path.control_cost <= path.xi.back() + 1e-12);
  }
  CHECK(controlled > 0);
}

TEST_CASE("a shrunken continuation region costs more") {
  const auto report = active_solve();
  const auto policy = ControlPolicy::from_solution(report);
  const auto opts = quick(4000, 1e-4, 3);
  for (double x0 : {0.0, 0.2}) {
    const auto base = estimate_value(benchmark("3"), policy, kUnit, x0, opts);
    const auto worse = estimate_value(benchmark("3"), policy.shrunk(0.15), kUnit, x0, opts);
    CHECK(worse.mean > base.mean);
    // Any policy bounds the value from above, up to sampling and time-step error.
    const int i = static_cast<int>(std::lround((x0 + 1.0) / report.u.grid().h[0]));
    CHECK(base.mean >= report.u.at(i) - 3.0 * base.std_error - 0.05);
    CHECK(worse.mean >= report.u.at(i) - 3.0 * worse.std_error - 0.05);
  }
}

TEST_CASE("input errors and warnings") {
  const auto policy = ControlPolicy::from_region(-1.0, 1.0, -0.4, 0.4);
  const auto two_d = EllipticProblem::from_sources(2, {-1, -1}, {1, 1}, {"1", "1"}, {"0", "0"}, "1", "1");
  CHECK_THROWS_AS(estimate_value(two_d, policy, kUnit, 0.0, quick(200, 1e-3)), InputError);
  CHECK_THROWS_AS(estimate_value(benchmark("1"), policy, kUnit, 0.0, quick(50, 1e-3)), InputError);
  CHECK_THROWS_AS(estimate_value(benchmark("1"), policy, kUnit, 0.0, quick(200, 0.0)), InputError);
  CHECK_THROWS_WITH_AS(estimate_value(benchmark("1"), policy, kUnit, 0.7, quick(200, 1e-3)),
                       doctest::Contains("continuation region"), InputError);
  CHECK_THROWS_AS(estimate_value(benchmark("1"), policy, kUnit, 1.5, quick(200, 1e-3)), InputError);

  const auto narrow = ControlPolicy::from_region(-1.0, 1.0, -0.05, 0.05);
  const auto est = estimate_value(benchmark("1"), narrow, kUnit, 0.0, quick(200, 1e-2));
  CHECK_FALSE(est.warnings.empty());
  const auto fine = estimate_value(benchmark("1"), policy, kUnit, 0.0, quick(200, 1e-4));
  CHECK(fine.warnings.empty());
}
