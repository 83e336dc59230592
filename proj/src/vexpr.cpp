#include "glab/vexpr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace glab {

namespace {

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

class Parser {
 public:
  Parser(const std::string& s, VExpr& out) : s_(s), e_(out) {}

  void run() {
    const int root = expr();
    skip_ws();
    if (pos_ != s_.size())
      throw ParseError(pos_, "unexpected trailing input");
    e_.root_ = root;
    e_.src_ = s_;
  }

 private:
  using Op = VExpr::Op;

  void skip_ws() {
    while (pos_ < s_.size() &&
           std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }
  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }
  int make(Op op, int a = -1, int b = -1, double v = 0.0) {
    e_.nodes_.push_back({op, v, a, b});
    return static_cast<int>(e_.nodes_.size()) - 1;
  }

  int expr() {
    int lhs = term();
    for (;;) {
      const char c = peek();
      if (c != '+' && c != '-') return lhs;
      ++pos_;
      const int rhs = term();
      lhs = make(c == '+' ? Op::kAdd : Op::kSub, lhs, rhs);
    }
  }

  int term() {
    int lhs = factor();
    for (;;) {
      const char c = peek();
      if (c != '*' && c != '/') return lhs;
      ++pos_;
      const int rhs = factor();
      lhs = make(c == '*' ? Op::kMul : Op::kDiv, lhs, rhs);
    }
  }

  int factor() {
    if (peek() == '-') {
      ++pos_;
      return make(Op::kNeg, factor());
    }
    return power();
  }

  int power() {
    const int base = primary();
    if (peek() != '^') return base;
    ++pos_;
    // Right associative; the exponent may carry its own unary minus.
    const int exponent = factor();
    return make(Op::kPow, base, exponent);
  }

  int primary() {
    const char c = peek();
    if (c == '\0') throw ParseError(pos_, "unexpected end of expression");
    if (c == '(') {
      ++pos_;
      const int inner = expr();
      if (peek() != ')') throw ParseError(pos_, "expected ')'");
      ++pos_;
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return ident();
    throw ParseError(pos_, std::string("unexpected character '") + c + "'");
  }

  int number() {
    const std::size_t start = pos_;
    const char* begin = s_.c_str() + start;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) throw ParseError(start, "malformed number");
    pos_ = start + static_cast<std::size_t>(end - begin);
    if (!std::isfinite(v)) throw ParseError(start, "number out of range");
    return make(Op::kNum, -1, -1, v);
  }

  int ident() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
    const std::string name = s_.substr(start, pos_ - start);
    if (name == "x1") return make(Op::kX1);
    if (name == "x2") return make(Op::kX2);
    Op op;
    if (name == "exp") op = Op::kExp;
    else if (name == "log") op = Op::kLog;
    else if (name == "sqrt") op = Op::kSqrt;
    else if (name == "sin") op = Op::kSin;
    else if (name == "cos") op = Op::kCos;
    else if (name == "abs2") op = Op::kAbs2;
    else throw ParseError(start, "unknown identifier '" + name + "'");
    if (peek() != '(') throw ParseError(pos_, "expected '(' after '" + name + "'");
    ++pos_;
    if (op == Op::kAbs2) {
      // The argument is the literal point variable.
      skip_ws();
      const std::size_t astart = pos_;
      while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
      if (s_.substr(astart, pos_ - astart) != "x")
        throw ParseError(astart, "abs2 takes the literal argument x");
      if (peek() != ')') throw ParseError(pos_, "expected ')'");
      ++pos_;
      return make(Op::kAbs2);
    }
    const int arg = expr();
    if (peek() != ')') throw ParseError(pos_, "expected ')'");
    ++pos_;
    return make(op, arg);
  }

  const std::string& s_;
  VExpr& e_;
  std::size_t pos_ = 0;
};

VExpr VExpr::parse(const std::string& src) {
  VExpr e;
  Parser(src, e).run();
  return e;
}

double VExpr::eval_node(int i, Pt p) const {
  const Node& n = nodes_[static_cast<std::size_t>(i)];
  switch (n.op) {
    case Op::kNum: return n.value;
    case Op::kX1: return p.x;
    case Op::kX2: return p.y;
    case Op::kAbs2: return p.x * p.x + p.y * p.y;
    case Op::kAdd: return eval_node(n.a, p) + eval_node(n.b, p);
    case Op::kSub: return eval_node(n.a, p) - eval_node(n.b, p);
    case Op::kMul: return eval_node(n.a, p) * eval_node(n.b, p);
    case Op::kNeg: return -eval_node(n.a, p);
    case Op::kDiv: {
      const double den = eval_node(n.b, p);
      if (den == 0.0) throw EvalError("division by zero", print(i, 0, false));
      return eval_node(n.a, p) / den;
    }
    case Op::kPow: {
      const double r = std::pow(eval_node(n.a, p), eval_node(n.b, p));
      if (!std::isfinite(r))
        throw EvalError("power out of domain", print(i, 0, false));
      return r;
    }
    case Op::kExp: {
      const double r = std::exp(eval_node(n.a, p));
      if (!std::isfinite(r))
        throw EvalError("exp overflow", print(i, 0, false));
      return r;
    }
    case Op::kLog: {
      const double a = eval_node(n.a, p);
      if (a <= 0.0)
        throw EvalError("log of non-positive value", print(i, 0, false));
      return std::log(a);
    }
    case Op::kSqrt: {
      const double a = eval_node(n.a, p);
      if (a < 0.0)
        throw EvalError("sqrt of negative value", print(i, 0, false));
      return std::sqrt(a);
    }
    case Op::kSin: return std::sin(eval_node(n.a, p));
    case Op::kCos: return std::cos(eval_node(n.a, p));
  }
  throw EvalError("corrupt expression tree", "?");
}

double VExpr::eval(Pt p) const {
  if (!std::isfinite(p.x) || !std::isfinite(p.y))
    throw EvalError("non-finite evaluation point", src_);
  return eval_node(root_, p);
}

Pt VExpr::grad_log(Pt p, double h) const {
  auto lg = [this](Pt q) { return std::log(eval(q)); };
  return {(lg({p.x + h, p.y}) - lg({p.x - h, p.y})) / (2.0 * h),
          (lg({p.x, p.y + h}) - lg({p.x, p.y - h})) / (2.0 * h)};
}

std::string VExpr::print(int i, int parent_prec, bool right_side) const {
  const Node& n = nodes_[static_cast<std::size_t>(i)];
  auto wrap = [&](const std::string& s, int prec) {
    if (prec < parent_prec || (prec == parent_prec && right_side))
      return "(" + s + ")";
    return s;
  };
  switch (n.op) {
    case Op::kNum: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      std::string s(buf);
      // A serialized negative literal needs unary-minus precedence.
      if (n.value < 0.0) return wrap(s, 3);
      return s;
    }
    case Op::kX1: return "x1";
    case Op::kX2: return "x2";
    case Op::kAbs2: return "abs2(x)";
    case Op::kAdd: return wrap(print(n.a, 1, false) + " + " + print(n.b, 1, true), 1);
    case Op::kSub: return wrap(print(n.a, 1, false) + " - " + print(n.b, 1, true), 1);
    case Op::kMul: return wrap(print(n.a, 2, false) + " * " + print(n.b, 2, true), 2);
    case Op::kDiv: return wrap(print(n.a, 2, false) + " / " + print(n.b, 2, true), 2);
    case Op::kNeg: return wrap("-" + print(n.a, 3, true), 3);
    case Op::kPow: return wrap(print(n.a, 5, true) + "^" + print(n.b, 4, false), 4);
    case Op::kExp: return "exp(" + print(n.a, 0, false) + ")";
    case Op::kLog: return "log(" + print(n.a, 0, false) + ")";
    case Op::kSqrt: return "sqrt(" + print(n.a, 0, false) + ")";
    case Op::kSin: return "sin(" + print(n.a, 0, false) + ")";
    case Op::kCos: return "cos(" + print(n.a, 0, false) + ")";
  }
  return "?";
}

std::string VExpr::to_string() const { return print(root_, 0, false); }

bool VExpr::same_tree(const VExpr& other) const {
  // Structural comparison via a canonical print; the printer is injective on
  // trees (it fully determines operator structure through parenthesization).
  return to_string() == other.to_string();
}

bool VExpr::is_constant_one() const {
  const Node& n = nodes_[static_cast<std::size_t>(root_)];
  return n.op == Op::kNum && n.value == 1.0;
}

}  // namespace glab
