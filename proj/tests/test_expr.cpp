#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "gchjb/expr.hpp"

using gchjb::EvalError;
using gchjb::Expression;
using gchjb::ParseError;

TEST_CASE("precedence and associativity") {
  CHECK(Expression::parse("1 + 2*3").eval(0.0) == 7.0);
  CHECK(Expression::parse("1 + 2*3").is_constant());
  CHECK(Expression::parse("8 - 3 - 2").eval(0.0) == 3.0);
  CHECK(Expression::parse("8 / 4 / 2").eval(0.0) == 1.0);
  CHECK(Expression::parse("2^3^2").eval(0.0) == 64.0);  // left-associative
  CHECK(Expression::parse("-2^2").eval(0.0) == -4.0);   // ^ binds tighter than unary minus
  CHECK(Expression::parse("2^-1").eval(0.0) == 0.5);
  CHECK(Expression::parse("(1 + 2) * 3").eval(0.0) == 9.0);
  CHECK(Expression::parse("-x1*3").eval(2.0) == -6.0);
}

TEST_CASE("functions and variables") {
  CHECK(Expression::parse("max(0, x1)").eval(-2.0) == 0.0);
  CHECK(Expression::parse("min(0, x1)").eval(-2.0) == -2.0);
  CHECK(Expression::parse("exp(-x1^2 - x2^2)").eval(0.0, 0.0) == 1.0);
  CHECK(Expression::parse("x1*x2").eval(3.0, 4.0) == 12.0);
  CHECK(Expression::parse("sin(x1)").eval(0.0) == 0.0);
  CHECK(Expression::parse("cos(x1)").eval(0.0) == 1.0);
  CHECK(Expression::parse("sqrt(x1)").eval(9.0) == 3.0);
  CHECK(Expression::parse("abs(x1)").eval(-1.5) == 1.5);
  CHECK(Expression::parse("2 + sin(x1)").eval(-1.0) == doctest::Approx(1.1585290151921035));
  CHECK(Expression::parse("1.5e-3").eval(0.0) == 1.5e-3);
  CHECK(Expression::parse("x2").arity() == 2);
  CHECK(Expression::parse("x1 + 1").arity() == 1);
  CHECK(Expression().eval(0.0) == 0.0);
}

TEST_CASE("parse errors carry offsets") {
  CHECK_THROWS_AS(Expression::parse(""), ParseError);
  CHECK_THROWS_AS(Expression::parse("1 +"), ParseError);
  CHECK_THROWS_AS(Expression::parse("foo(1)"), ParseError);
  CHECK_THROWS_AS(Expression::parse("x3"), ParseError);
  CHECK_THROWS_AS(Expression::parse("max(1)"), ParseError);
  CHECK_THROWS_AS(Expression::parse("sin(1, 2)"), ParseError);
  CHECK_THROWS_AS(Expression::parse("(1 + 2"), ParseError);
  CHECK_THROWS_AS(Expression::parse("1 2"), ParseError);
  try {
    Expression::parse("1 + $");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
  }
  try {
    Expression::parse("2 * bogus");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
}

TEST_CASE("evaluation errors instead of non-finite values") {
  CHECK_THROWS_AS(Expression::parse("1/x1").eval(0.0), EvalError);
  CHECK_THROWS_AS(Expression::parse("sqrt(x1)").eval(-1.0), EvalError);
  CHECK_THROWS_AS(Expression::parse("x1^0.5").eval(-4.0), EvalError);
  CHECK(Expression::parse("x1^3").eval(-2.0) == -8.0);
  CHECK_THROWS_AS(Expression::parse("exp(x1)").eval(1000.0), EvalError);
  CHECK_THROWS_AS(Expression::parse("x1 + x2").eval(1.0), EvalError);  // missing variable
}

TEST_CASE("long chains are not mistaken for deep nesting") {
  std::string s = "1";
  for (int k = 0; k < 2000; ++k) s += " + x1";
  CHECK(Expression::parse(s).eval(1.0) == 2001.0);
  std::string deep(500, '(');
  deep += "1" + std::string(500, ')');
  CHECK_THROWS_AS(Expression::parse(deep), ParseError);
}

namespace {

std::string random_tree(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, 13);
  const int k = depth == 0 ? pick(rng) % 3 : pick(rng);
  std::uniform_real_distribution<double> num(-3.0, 3.0);
  const auto sub = [&] { return random_tree(rng, depth - 1); };
  switch (k) {
    case 0: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.6g", std::abs(num(rng)));
      return buf;
    }
    case 1: return "x1";
    case 2: return "x2";
    case 3: return "(" + sub() + " + " + sub() + ")";
    case 4: return "(" + sub() + " - " + sub() + ")";
    case 5: return "(" + sub() + " * " + sub() + ")";
    case 6: return "(" + sub() + " / " + sub() + ")";
    case 7: return "(" + sub() + ")^2";
    case 8: return "-" + sub();
    case 9: return "sin(" + sub() + ")";
    case 10: return "exp(" + sub() + ")";
    case 11: return "abs(" + sub() + ")";
    case 12: return "max(" + sub() + ", " + sub() + ")";
    default: return "sqrt(abs(" + sub() + "))";
  }
}

}  // namespace

TEST_CASE("print then parse reproduces the tree and its values") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  int compared = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const Expression e = Expression::parse(random_tree(rng, 6));
    const Expression back = Expression::parse(e.print());
    CHECK(back.structurally_equal(e));
    CHECK(back.print() == e.print());
    const double x1 = coord(rng), x2 = coord(rng);
    try {
      const double v = e.eval(x1, x2);
      CHECK(std::isfinite(v));
      CHECK(back.eval(x1, x2) == v);
      CHECK(e.eval(x1, x2) == v);  // deterministic
      ++compared;
    } catch (const EvalError&) {
      CHECK_THROWS_AS(back.eval(x1, x2), EvalError);
    }
  }
  CHECK(compared > 1000);
}
