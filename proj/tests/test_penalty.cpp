#include <doctest.h>

#include <cmath>

#include "gchjb/penalty.hpp"

using gchjb::PenaltyFamily;

TEST_CASE("penalty values") {
  const PenaltyFamily f(0.1);
  CHECK(f.beta(0.2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(f.beta(-5.0) == 0.0);
  CHECK(f.beta(0.05) == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(f.beta(0.7) == doctest::Approx((0.7 - 0.1) / 0.1));
  CHECK(f.beta_prime(-1.0) == 0.0);
  CHECK(f.beta_prime(1.0) == doctest::Approx(10.0));
  CHECK(f.beta_prime(0.05) == doctest::Approx(0.5 / 2.0 / 0.1));
}

TEST_CASE("C1 joins at z = 0 and z = 2 eps") {
  for (double eps : {0.5, 0.1, 0.01}) {
    const PenaltyFamily f(eps);
    const double d = 1e-7 * eps;
    for (double z : {0.0, 2.0 * eps}) {
      const double left = (f.beta(z) - f.beta(z - d)) / d;
      const double right = (f.beta(z + d) - f.beta(z)) / d;
      CHECK(std::abs(left - right) * eps <= 1e-6);
      CHECK(std::abs(f.beta_prime(z) - 0.5 * (left + right)) * eps <= 1e-6);
    }
  }
}

TEST_CASE("certification on dense samples") {
  for (double eps : {0.5, 0.1, 0.01}) {
    const auto check = gchjb::certify_penalty(PenaltyFamily(eps), 10000, -3.0, 3.0);
    CHECK(check.samples == 10000);
    CHECK(check.passed(1e-9));
    CHECK(check.derivative_jump <= 1e-6);
  }
}

TEST_CASE("Euler inequality and blow-up") {
  for (double eps : {0.5, 0.1, 0.01}) {
    const PenaltyFamily f(eps);
    for (int k = 0; k <= 10000; ++k) {
      const double z = -3.0 + 6.0 * k / 10000.0;
      CHECK(z * f.beta_prime(z) - f.beta(z) >= -1e-12);
    }
  }
  const double z = 0.3;
  double previous = 0.0;
  for (double eps : {0.1, 0.05, 0.01, 0.001}) {
    const double b = PenaltyFamily(eps).beta(z);
    CHECK(b > previous);
    previous = b;
  }
  CHECK(previous > 250.0);
}

TEST_CASE("concave stub fails the convexity check") {
  const auto check = gchjb::certify_penalty(PenaltyFamily(0.1, PenaltyFamily::Bridge::kConcaveStub), 10000, -1.0, 1.0);
  CHECK_FALSE(check.passed(1e-9));
  CHECK(check.convexity > 1e-9);
  CHECK_THROWS_AS(PenaltyFamily(0.0), gchjb::InputError);
}
