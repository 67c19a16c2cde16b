#include "gchjb/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>

namespace gchjb {

ParseError::ParseError(const std::string& what, std::size_t offset)
    : InputError(what + " at offset " + std::to_string(offset)), offset_(offset) {}

namespace {

constexpr int kMaxStack = 256;

struct FunctionInfo {
  std::string_view name;
  OpCode op;
  int arity;
};

constexpr std::array<FunctionInfo, 7> kFunctions{{
    {"exp", OpCode::kExp, 1},
    {"sin", OpCode::kSin, 1},
    {"cos", OpCode::kCos, 1},
    {"sqrt", OpCode::kSqrt, 1},
    {"abs", OpCode::kAbs, 1},
    {"min", OpCode::kMin, 2},
    {"max", OpCode::kMax, 2},
}};

bool is_unary(OpCode op) {
  switch (op) {
    case OpCode::kNeg:
    case OpCode::kAbs:
    case OpCode::kExp:
    case OpCode::kSin:
    case OpCode::kCos:
    case OpCode::kSqrt:
      return true;
    default:
      return false;
  }
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  std::vector<Expression::Node> nodes;

  int parse_all() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("empty expression", pos_);
    int root = parse_sum();
    skip_ws();
    if (pos_ != src_.size()) {
      throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
    }
    return root;
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  int depth_ = 0;

  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' ||
                                  src_[pos_] == '\r')) {
      ++pos_;
    }
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= src_.size()) {
        throw ParseError(std::string("expected '") + c + "' but reached end of input", pos_);
      }
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  int add(Expression::Node n) {
    nodes.push_back(n);
    return static_cast<int>(nodes.size()) - 1;
  }

  int binary(OpCode op, int lhs, int rhs) { return add({op, 0.0, 0, lhs, rhs}); }

  struct DepthGuard {
    Parser& p;
    explicit DepthGuard(Parser& parser) : p(parser) {
      if (++p.depth_ > 200) throw ParseError("expression nested too deeply", p.pos_);
    }
    ~DepthGuard() { --p.depth_; }
  };

  int parse_sum() {
    DepthGuard guard(*this);
    int lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = binary(OpCode::kAdd, lhs, parse_product());
      } else if (accept('-')) {
        lhs = binary(OpCode::kSub, lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  int parse_product() {
    int lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = binary(OpCode::kMul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = binary(OpCode::kDiv, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  int parse_unary() {
    DepthGuard guard(*this);
    if (accept('-')) return add({OpCode::kNeg, 0.0, 0, parse_unary(), -1});
    return parse_power();
  }

  int parse_power() {
    int lhs = parse_primary();
    while (accept('^')) {
      int rhs;
      if (accept('-')) {
        rhs = add({OpCode::kNeg, 0.0, 0, parse_primary(), -1});
      } else {
        rhs = parse_primary();
      }
      lhs = binary(OpCode::kPow, lhs, rhs);
    }
    return lhs;
  }

  int parse_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      } else {
        pos_ = save;
      }
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (ec != std::errc() || ptr != src_.data() + pos_) {
      throw ParseError("malformed number", start);
    }
    return add({OpCode::kConst, value, 0, -1, -1});
  }

  int parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (c == '(') {
      ++pos_;
      int inner = parse_sum();
      expect(')');
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        ++pos_;
      }
      const std::string_view name = src_.substr(start, pos_ - start);
      if (name == "x1") return add({OpCode::kVar, 0.0, 0, -1, -1});
      if (name == "x2") return add({OpCode::kVar, 0.0, 1, -1, -1});
      for (const auto& fn : kFunctions) {
        if (fn.name != name) continue;
        expect('(');
        std::vector<int> args{parse_sum()};
        while (accept(',')) args.push_back(parse_sum());
        if (static_cast<int>(args.size()) != fn.arity) {
          throw ParseError("function '" + std::string(name) + "' takes " +
                               std::to_string(fn.arity) + " argument(s), got " +
                               std::to_string(args.size()),
                           start);
        }
        expect(')');
        return add({fn.op, 0.0, 0, args[0], fn.arity == 2 ? args[1] : -1});
      }
      throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    }
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }
};

void postorder(const std::vector<Expression::Node>& nodes, int idx, std::vector<int>& out,
               int depth, int& max_depth) {
  max_depth = std::max(max_depth, depth);
  const auto& n = nodes[idx];
  if (n.lhs >= 0) postorder(nodes, n.lhs, out, depth + 1, max_depth);
  if (n.rhs >= 0) postorder(nodes, n.rhs, out, depth + 1, max_depth);
  out.push_back(idx);
}

const char* op_name(OpCode op) {
  switch (op) {
    case OpCode::kAbs: return "abs";
    case OpCode::kExp: return "exp";
    case OpCode::kSin: return "sin";
    case OpCode::kCos: return "cos";
    case OpCode::kSqrt: return "sqrt";
    case OpCode::kMin: return "min";
    case OpCode::kMax: return "max";
    case OpCode::kAdd: return "+";
    case OpCode::kSub: return "-";
    case OpCode::kMul: return "*";
    case OpCode::kDiv: return "/";
    case OpCode::kPow: return "^";
    default: return "?";
  }
}

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw EvalError(std::string("non-finite result in ") + what);
  return v;
}

double power(double base, double expo) {
  if (base < 0.0 && expo != std::floor(expo)) {
    throw EvalError("non-integer power of a negative base");
  }
  if (base == 0.0 && expo < 0.0) throw EvalError("non-finite result: zero to a negative power");
  return checked(std::pow(base, expo), "^");
}

}  // namespace

Expression::Expression() {
  static const Expression zero = parse("0");
  impl_ = zero.impl_;
}

Expression Expression::parse(std::string_view source) {
  Parser parser(source);
  const int root = parser.parse_all();
  auto impl = std::make_shared<Impl>();
  impl->nodes = std::move(parser.nodes);
  impl->root = root;
  impl->source = std::string(source);
  postorder(impl->nodes, root, impl->program, 1, impl->max_depth);
  int height = 0;
  for (int idx : impl->program) {
    const Node& n = impl->nodes[idx];
    if (n.lhs < 0) {
      impl->max_stack = std::max(impl->max_stack, ++height);
    } else if (n.rhs >= 0) {
      --height;
    }
  }
  if (impl->max_stack > kMaxStack) throw ParseError("expression nested too deeply", 0);
  for (const auto& n : impl->nodes) {
    if (n.op == OpCode::kVar) impl->arity = std::max(impl->arity, n.var + 1);
  }
  return Expression(std::move(impl));
}

double Expression::eval(std::span<const double> point) const {
  if (static_cast<int>(point.size()) < impl_->arity) {
    throw EvalError("missing variable x" + std::to_string(point.size() + 1));
  }
  std::array<double, kMaxStack> stack;
  int top = 0;
  for (int idx : impl_->program) {
    const Node& n = impl_->nodes[idx];
    switch (n.op) {
      case OpCode::kConst:
        stack[top++] = n.value;
        break;
      case OpCode::kVar:
        stack[top++] = point[n.var];
        break;
      case OpCode::kNeg:
        stack[top - 1] = -stack[top - 1];
        break;
      case OpCode::kAbs:
        stack[top - 1] = std::abs(stack[top - 1]);
        break;
      case OpCode::kExp:
        stack[top - 1] = checked(std::exp(stack[top - 1]), "exp");
        break;
      case OpCode::kSin:
        stack[top - 1] = checked(std::sin(stack[top - 1]), "sin");
        break;
      case OpCode::kCos:
        stack[top - 1] = checked(std::cos(stack[top - 1]), "cos");
        break;
      case OpCode::kSqrt:
        if (stack[top - 1] < 0.0) throw EvalError("square root of a negative number");
        stack[top - 1] = std::sqrt(stack[top - 1]);
        break;
      default: {
        const double rhs = stack[--top];
        double& lhs = stack[top - 1];
        switch (n.op) {
          case OpCode::kAdd: lhs = checked(lhs + rhs, "+"); break;
          case OpCode::kSub: lhs = checked(lhs - rhs, "-"); break;
          case OpCode::kMul: lhs = checked(lhs * rhs, "*"); break;
          case OpCode::kDiv:
            if (rhs == 0.0) throw EvalError("non-finite result: division by zero");
            lhs = checked(lhs / rhs, "/");
            break;
          case OpCode::kPow: lhs = power(lhs, rhs); break;
          case OpCode::kMin: lhs = std::min(lhs, rhs); break;
          case OpCode::kMax: lhs = std::max(lhs, rhs); break;
          default: throw EvalError("corrupt expression");
        }
      }
    }
  }
  return checked(stack[0], "expression");
}

std::string Expression::print() const {
  const auto& nodes = impl_->nodes;
  std::function<std::string(int)> rec = [&](int idx) -> std::string {
    const Node& n = nodes[idx];
    switch (n.op) {
      case OpCode::kConst: {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", n.value);
        return buf;
      }
      case OpCode::kVar:
        return n.var == 0 ? "x1" : "x2";
      case OpCode::kNeg:
        return "(-" + rec(n.lhs) + ")";
      case OpCode::kMin:
      case OpCode::kMax:
        return std::string(op_name(n.op)) + "(" + rec(n.lhs) + ", " + rec(n.rhs) + ")";
      default:
        if (is_unary(n.op)) return std::string(op_name(n.op)) + "(" + rec(n.lhs) + ")";
        return "(" + rec(n.lhs) + " " + op_name(n.op) + " " + rec(n.rhs) + ")";
    }
  };
  return rec(impl_->root);
}

bool Expression::structurally_equal(const Expression& other) const {
  const auto& a = impl_->nodes;
  const auto& b = other.impl_->nodes;
  std::function<bool(int, int)> rec = [&](int i, int j) {
    if ((i < 0) != (j < 0)) return false;
    if (i < 0) return true;
    const Node& x = a[i];
    const Node& y = b[j];
    if (x.op != y.op) return false;
    if (x.op == OpCode::kConst && x.value != y.value) return false;
    if (x.op == OpCode::kVar && x.var != y.var) return false;
    return rec(x.lhs, y.lhs) && rec(x.rhs, y.rhs);
  };
  return rec(impl_->root, other.impl_->root);
}

}  // namespace gchjb
