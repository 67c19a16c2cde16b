#include <doctest.h>

#include <cmath>
#include <random>

#include "gchjb/convex.hpp"

using namespace gchjb;

namespace {

const Vec kOrigin = Vec::Zero();

Vec v1(double x) { return Vec(x, 0.0); }

// min over a uniform q-grid of H(q) + |p - q|^2/(2t) in 1D.
double brute_envelope_1d(const std::function<double(double)>& h, double p, double t,
                         double* argmin = nullptr) {
  double best = INFINITY;
  for (int k = 0; k <= 100000; ++k) {
    const double q = -5.0 + 1e-4 * k;
    const double v = h(q) + (p - q) * (p - q) / (2.0 * t);
    if (v < best) {
      best = v;
      if (argmin) *argmin = q;
    }
  }
  return best;
}

// Midpoint-rule convolution of f with the normalized bump of radius rho (1D).
double riemann_mollify_1d(const std::function<double(double)>& f, double rho, double p) {
  const int n = 20000;
  double num = 0.0, den = 0.0;
  for (int k = 0; k < n; ++k) {
    const double x = -1.0 + (k + 0.5) * 2.0 / n;
    const double w = std::exp(-1.0 / (1.0 - x * x));
    num += w * f(p - rho * x);
    den += w;
  }
  return num / den;
}

}  // namespace

TEST_CASE("catalog values") {
  CHECK(norm_minus_constant(1, 1.0, 1.0).value(kOrigin) == -1.0);
  CHECK(norm_minus_constant(2, 2.0, 1.0).value(Vec(3.0, 4.0)) == 9.0);
  CHECK(quadratic_form(2, Mat::Identity(), 1.0).value(Vec(1.0, 2.0)) == 4.0);
  CHECK(support_derived(ConvexBody::interval(-1.0, 2.0)).value(kOrigin) == -1.0);
  CHECK(support_derived(ConvexBody::ball(2, 0.5)).value(Vec(3.0, 4.0)) == doctest::Approx(4.5));
}

TEST_CASE("subgradients") {
  const Vec g = quadratic_form(2, Mat::Identity(), 1.0).subgradient(Vec(1.0, 2.0));
  CHECK(g(0) == doctest::Approx(2.0));
  CHECK(g(1) == doctest::Approx(4.0));
  CHECK(norm_minus_constant(2, 1.0, 1.0).subgradient(kOrigin).norm() == 0.0);
  CHECK(norm_minus_constant(1, 1.0, 1.0).subgradient(kOrigin).norm() == 0.0);
}

TEST_CASE("Moreau envelope of |p| - 1 against a grid oracle") {
  const auto base = norm_minus_constant(1, 1.0, 1.0);
  const auto env = moreau_envelope(base, 0.5);
  double q_star = 0.0;
  const double oracle = brute_envelope_1d([](double q) { return std::abs(q) - 1.0; }, 2.0, 0.5, &q_star);
  CHECK(oracle == doctest::Approx(0.75).epsilon(1e-8));
  CHECK(env.value(v1(2.0)) == doctest::Approx(oracle).epsilon(1e-7));
  CHECK(env.value(v1(2.0)) == doctest::Approx(2.0 - 1.0 - 0.25).epsilon(1e-12));
  // Envelope gradient (p - prox)/t.
  CHECK(env.subgradient(v1(2.0))(0) == doctest::Approx((2.0 - q_star) / 0.5).epsilon(1e-3));
  CHECK(env.subgradient(v1(2.0))(0) == doctest::Approx(1.0));
}

TEST_CASE("inner prox solve without a closed form") {
  // A custom convex function forces the numerical inner solve.
  const auto h = custom_constraint(
      1, [](const Vec& p) { return p(0) * p(0) * p(0) * p(0) + std::abs(p(0)) - 1.0; },
      [](const Vec& p) { return Vec(4.0 * p(0) * p(0) * p(0) + (p(0) > 0 ? 1.0 : p(0) < 0 ? -1.0 : 0.0), 0.0); });
  for (double p : {-1.7, -0.3, 0.0, 0.05, 0.9, 2.4}) {
    const double oracle =
        brute_envelope_1d([](double q) { return q * q * q * q + std::abs(q) - 1.0; }, p, 0.3);
    const ProxResult r = moreau_prox(h, v1(p), 0.3);
    CHECK(r.value == doctest::Approx(oracle).epsilon(1e-7));
    CHECK(moreau_envelope(h, 0.3).value(v1(p)) <= oracle + 1e-10);
  }
  const auto disk = custom_constraint(
      2, [](const Vec& p) { return std::abs(p(0)) + 2.0 * std::abs(p(1)) - 1.0; },
      [](const Vec& p) {
        return Vec(p(0) > 0 ? 1.0 : p(0) < 0 ? -1.0 : 0.0, p(1) > 0 ? 2.0 : p(1) < 0 ? -2.0 : 0.0);
      });
  // Separable: the envelope is the sum of 1D Huber functions.
  const auto huber = [](double x, double w, double t) {
    return std::abs(x) <= w * t ? x * x / (2 * t) : w * std::abs(x) - w * w * t / 2;
  };
  for (const Vec& p : {Vec(0.3, -0.9), Vec(-2.0, 0.1), Vec(0.0, 0.0), Vec(1.2, 1.5)}) {
    const double expected = huber(p(0), 1.0, 0.25) + huber(p(1), 2.0, 0.25) - 1.0;
    CHECK(moreau_envelope(disk, 0.25).value(p) == doctest::Approx(expected).epsilon(1e-8));
  }
}

TEST_CASE("support values") {
  CHECK(support_value(ConvexBody::ball(2, 0.5), Vec(0.6, 0.8)) == 0.5);
  CHECK(support_value(ConvexBody::interval(-1.0, 2.0), v1(-1.0)) == 1.0);
  CHECK(support_value(ConvexBody::interval(-1.0, 2.0), v1(1.0)) == 2.0);
  const auto square = ConvexBody::polytope({Vec(1, 1), Vec(-1, 1), Vec(-1, -1), Vec(1, -1)});
  CHECK(support_value(square, Vec(1.0, 0.0)) == 1.0);
  CHECK(support_value(square, Vec(std::sqrt(0.5), std::sqrt(0.5))) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(support_value(square, Vec(1.0, 1.0)), InputError);
  CHECK_THROWS_AS(ConvexBody::interval(0.5, 2.0), InputError);
  CHECK_THROWS_AS(ConvexBody::polytope({Vec(1, 1), Vec(2, 1), Vec(1, 2)}), InputError);
  CHECK_THROWS_AS(ConvexBody::polytope({Vec(1, 1), Vec(-1, 1), Vec(-1, -1), Vec(1, -1), Vec(0.5, 0)}), InputError);
}

TEST_CASE("support-derived H equals max over unit directions") {
  const auto tri = ConvexBody::polytope({Vec(2, 0), Vec(-1, 1.5), Vec(-0.5, -1)});
  const auto h = support_derived(tri);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 200; ++k) {
    const Vec p(u(rng), u(rng));
    // The maximizer can sit on a kink of the support function (an edge normal), so those
    // directions are added to the uniform sample.
    std::vector<Vec> dirs;
    for (int j = 0; j < 20000; ++j) {
      const double a = 2.0 * M_PI * j / 20000;
      dirs.emplace_back(std::cos(a), std::sin(a));
    }
    for (const Vec& a : tri.vertices()) {
      for (const Vec& b : tri.vertices()) {
        if (a == b) continue;
        const Vec e = (b - a).normalized();
        dirs.emplace_back(-e(1), e(0));
      }
    }
    double sampled = -INFINITY;
    for (const Vec& v : dirs) {
      double ell = -INFINITY;
      for (const Vec& w : tri.vertices()) ell = std::max(ell, v.dot(w));
      sampled = std::max(sampled, p.dot(v) - ell);
    }
    CHECK(h.value(p) >= sampled - 1e-12);
    CHECK(h.value(p) <= sampled + 1e-6);
  }
}

TEST_CASE("sublevel set of a support-derived H is K") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  const std::vector<ConvexBody> bodies = {
      ConvexBody::polytope({Vec(2, 0), Vec(0, 1), Vec(-1, 0.2), Vec(-0.5, -1.5)}),
      ConvexBody::ball(2, 1.3), ConvexBody::interval(-0.7, 1.9)};
  for (const auto& body : bodies) {
    const auto h = support_derived(body);
    int tested = 0;
    for (int k = 0; k < 1000; ++k) {
      const Vec p = body.dim() == 1 ? v1(u(rng)) : Vec(u(rng), u(rng));
      const double v = h.value(p);
      if (std::abs(v) <= 1e-9) continue;
      CHECK(body.contains(p) == (v < 0.0));
      ++tested;
    }
    CHECK(tested > 900);
  }
}

TEST_CASE("convexity and subgradient inequality on random points") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0), s01(0.0, 1.0);
  const std::vector<ConstraintFunction> hs = {
      norm_minus_constant(2, 1.5, 1.0),
      quadratic_form(2, (Mat() << 2.0, 0.5, 0.5, 1.0).finished(), 1.0),
      support_derived(ConvexBody::polytope({Vec(1, 1), Vec(-1, 1), Vec(-1, -1), Vec(1, -1)})),
      moreau_envelope(norm_minus_constant(2, 1.0, 1.0), 0.2),
      build_regularized(norm_minus_constant(2, 1.0, 1.0), 0.1, 0.05, 0.1)};
  for (const auto& h : hs) {
    CHECK(h.value(kOrigin) < 0.0);
    for (int k = 0; k < 1000; ++k) {
      const Vec p(u(rng), u(rng)), q(u(rng), u(rng));
      const double s = s01(rng);
      CHECK(h.value(s * p + (1 - s) * q) <= s * h.value(p) + (1 - s) * h.value(q) + 1e-9);
      CHECK(h.value(q) >= h.value(p) + h.subgradient(p).dot(q - p) - 1e-7);
    }
  }
}

TEST_CASE("envelope lies below its base and increases to it as t decreases") {
  const auto base = norm_minus_constant(1, 1.0, 1.0);
  for (double p : {-1.5, -0.2, 0.0, 0.05, 0.7, 3.0}) {
    double previous = -INFINITY;
    for (double t : {0.5, 0.25, 0.1, 0.05}) {
      const double v = moreau_envelope(base, t).value(v1(p));
      CHECK(v <= base.value(v1(p)) + 1e-12);
      CHECK(v >= previous - 1e-12);
      // Lipschitz constant 1: gap at most t L^2 / 2.
      CHECK(base.value(v1(p)) - v <= 10.0 * t + 1e-12);
      previous = v;
    }
  }
}

TEST_CASE("second differences of the envelope") {
  const auto quad = quadratic_form(1, Mat::Identity(), 1.0);
  const auto envq = moreau_envelope(quad, 0.5);
  // Envelope of q^2 - 1 is p^2/(1 + 2t) - 1.
  const double d2 = envq.value(v1(1.0)) - 2.0 * envq.value(kOrigin) + envq.value(v1(-1.0));
  CHECK(d2 == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(d2 >= 1.0 - 1e-10);
  CHECK(d2 <= 2.0);

  const auto envn = moreau_envelope(norm_minus_constant(1, 1.0, 1.0), 0.5);
  const double tight = envn.value(v1(0.25)) - 2.0 * envn.value(kOrigin) + envn.value(v1(-0.25));
  const auto oracle = [](double p) { return brute_envelope_1d([](double q) { return std::abs(q) - 1.0; }, p, 0.5); };
  CHECK(tight == doctest::Approx(0.125).epsilon(1e-10));
  CHECK(tight == doctest::Approx(oracle(0.25) - 2.0 * oracle(0.0) + oracle(-0.25)).epsilon(1e-6));
  CHECK(envn.value(v1(0.3)) - 2.0 * envn.value(v1(0.3)) + envn.value(v1(0.3)) == 0.0);
}

TEST_CASE("envelope property report on random samples") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> up(-2.0, 2.0), uz(-0.5, 0.5), ut(0.05, 0.9);
  const std::vector<ConstraintFunction> bases = {
      quadratic_form(2, (Mat() << 1.0, 0.2, 0.2, 0.5).finished(), 1.0), norm_minus_constant(2, 1.0, 1.0),
      support_derived(ConvexBody::polytope({Vec(2, 0), Vec(0, 1), Vec(-1, 0.2), Vec(-0.5, -1.5)}))};
  for (const auto& h0 : bases) {
    for (int k = 0; k < 10; ++k) {
      const double t = ut(rng);
      std::vector<EnvelopeSample> samples(100);
      for (auto& s : samples) {
        s.p = Vec(up(rng), up(rng));
        s.z = Vec(uz(rng), uz(rng));
      }
      const EnvelopeReport r = check_envelope_properties(h0, t, samples);
      CHECK(r.passed(1e-8));
      CHECK(r.lower_checked == (h0.kind() == ConstraintFunction::Kind::kQuadraticForm));
    }
  }
}

TEST_CASE("mollification") {
  // Affine functions are reproduced exactly.
  const auto affine = [](const Vec& q) { return 0.7 * q(0) - 1.3 * q(1) + 0.25; };
  for (double rho : {0.01, 0.3, 2.0}) {
    const Vec p(0.4, -1.1);
    CHECK(mollify(affine, 2, rho, p) == doctest::Approx(affine(p)).epsilon(1e-13));
    CHECK(mollify([](const Vec& q) { return 2.0 * q(0) - 1.0; }, 1, rho, v1(0.4)) ==
          doctest::Approx(-0.2).epsilon(1e-13));
  }
  const auto env = moreau_envelope(norm_minus_constant(1, 1.0, 1.0), 0.5);
  const auto mol = mollified(env, 0.01);
  CHECK(mollified_value(mol, v1(2.0)) == doctest::Approx(0.75).epsilon(1e-4));
  for (double p : {0.0, 0.495, 0.5, 0.507, 1.3}) {
    const double oracle = riemann_mollify_1d([&](double q) { return env.value(v1(q)); }, 0.2, p);
    CHECK(mollified_value(mollified(env, 0.2), v1(p)) == doctest::Approx(oracle).epsilon(1e-8));
  }
  // Small radius: within the oscillation of the base over the ball.
  const double p = 0.3, rho = 1e-3;
  const double osc = std::abs(env.value(v1(p + rho)) - env.value(v1(p - rho)));
  CHECK(std::abs(mollified_value(mollified(env, rho), v1(p)) - env.value(v1(p))) <= osc);
  CHECK_THROWS_AS(mollified(norm_minus_constant(1, 1.0, 1.0), 0.1), InputError);
}

TEST_CASE("regularization ladder") {
  const auto stub = custom_constraint(2, [](const Vec&) { return -1.0; }, [](const Vec&) { return Vec(0.0, 0.0); });
  CHECK(convexified_value(convexified(stub, 0.2), Vec(1.0, 1.0)) == doctest::Approx(-0.6));

  const auto h = build_regularized(norm_minus_constant(1, 1.0, 1.0), 0.1, 0.01, 0.01);
  CHECK(h.value(kOrigin) >= -1.01);
  CHECK(h.value(kOrigin) <= -0.9);
  CHECK(h.convexification_weight().value() == 0.01);
  CHECK(h.curvature_floor() >= 0.02 - 1e-12);

  // Heavy smoothing of a barely negative base: the constructor rejects it
  // exactly when the smoothed origin value is non-negative.
  const auto thin = norm_minus_constant(1, 1.0, 0.05);
  const auto env = moreau_envelope(thin, 0.1);
  const double smoothed = mollify([&](const Vec& q) { return env.value(q); }, 1, 0.4, kOrigin);
  if (smoothed >= 0.0) {
    CHECK_THROWS_AS(build_regularized(thin, 0.1, 0.4, 0.5), InputError);
  } else {
    CHECK(build_regularized(thin, 0.1, 0.4, 0.5).value(kOrigin) < 0.0);
  }
  CHECK(smoothed >= 0.0);
  CHECK_THROWS_AS(build_regularized(norm_minus_constant(1, 1.0, 1.0), 0.1, 0.01, 1.5), InputError);
}

TEST_CASE("locality radius") {
  // max |DH| = 1 for the norm: Q = 2 (R + t).
  CHECK(envelope_locality_radius(norm_minus_constant(2, 1.0, 1.0), 1.5, 0.2) == doctest::Approx(3.4));
  // |DH| = 2|w| for the quadratic: Q = 2 (R + 2 t R).
  CHECK(envelope_locality_radius(quadratic_form(1, Mat::Identity(), 1.0), 1.0, 0.5) == doctest::Approx(4.0).epsilon(1e-6));
}
