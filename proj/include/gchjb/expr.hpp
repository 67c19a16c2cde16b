// Scalar arithmetic expressions in the variables x1, x2.
//
// Grammar (lowest to highest precedence):
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' ['-'] primary)*
//   primary := number | x1 | x2 | fn '(' sum ')' | fn2 '(' sum ',' sum ')'
//            | '(' sum ')'
//   fn  := exp | sin | cos | sqrt | abs
//   fn2 := min | max
#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gchjb/errors.hpp"

namespace gchjb {

class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class EvalError : public InputError {
 public:
  using InputError::InputError;
};

enum class OpCode : unsigned char {
  kConst,
  kVar,
  kNeg,
  kAbs,
  kExp,
  kSin,
  kCos,
  kSqrt,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kPow,
  kMin,
  kMax,
};

class Expression {
 public:
  struct Node {
    OpCode op;
    double value = 0.0;  // kConst
    int var = 0;         // kVar: 0 for x1, 1 for x2
    int lhs = -1;        // child indices into the node arena
    int rhs = -1;
  };

  // The constant 0.
  Expression();

  // Parses `source`; throws ParseError.
  static Expression parse(std::string_view source);

  // Throws EvalError on a missing variable or a non-finite intermediate.
  double eval(std::span<const double> point) const;
  double eval(double x1) const { return eval(std::span<const double>(&x1, 1)); }
  double eval(double x1, double x2) const {
    const double p[2] = {x1, x2};
    return eval(std::span<const double>(p, 2));
  }

  // Fully parenthesized text that parses back to the same tree.
  std::string print() const;

  // Number of variables the expression needs (0, 1 or 2).
  int arity() const { return impl_->arity; }
  bool is_constant() const { return impl_->arity == 0; }

  const std::vector<Node>& nodes() const { return impl_->nodes; }
  int root() const { return impl_->root; }
  const std::string& source() const { return impl_->source; }

  bool structurally_equal(const Expression& other) const;

 private:
  struct Impl {
    std::vector<Node> nodes;
    // Postfix order of `nodes`, evaluated with a value stack.
    std::vector<int> program;
    int root = -1;
    int arity = 0;
    int max_depth = 0;
    int max_stack = 0;
    std::string source;
  };
  explicit Expression(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  std::shared_ptr<const Impl> impl_;
};

}  // namespace gchjb
