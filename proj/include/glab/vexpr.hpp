#pragma once
// Coefficient expressions V(x1, x2).
//
// Grammar (lowest to highest precedence):
//   expr    := term (('+' | '-') term)*
//   term    := factor (('*' | '/') factor)*
//   factor  := '-' factor | power
//   power   := primary ('^' factor)?           right associative
//   primary := number | 'x1' | 'x2' | fn '(' expr ')' | 'abs2' '(' 'x' ')'
//            | '(' expr ')'
//   fn      := 'exp' | 'log' | 'sqrt' | 'sin' | 'cos'
// '^' binds tighter than unary minus: -x1^2 is -(x1^2).
// abs2(x) is x1^2 + x2^2; the argument is the literal identifier x.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "glab/numerics.hpp"

namespace glab {

struct ParseError : std::runtime_error {
  ParseError(std::size_t at, const std::string& what)
      : std::runtime_error(what + " (byte " + std::to_string(at) + ")"),
        offset(at) {}
  std::size_t offset;  // 0-based byte offset into the source string
};

struct EvalError : std::runtime_error {
  EvalError(const std::string& what, std::string sub)
      : std::runtime_error(what + " in '" + sub + "'"),
        subexpr(std::move(sub)) {}
  std::string subexpr;  // offending subexpression, re-serialized
};

class VExpr {
 public:
  static VExpr parse(const std::string& src);

  double eval(Pt p) const;
  // Gradient of log V by central differences with step h per coordinate.
  Pt grad_log(Pt p, double h) const;
  // Canonical serialization; parse(to_string()) reproduces the same tree.
  std::string to_string() const;
  const std::string& source() const { return src_; }
  bool same_tree(const VExpr& other) const;
  bool is_constant_one() const;

 private:
  enum class Op : std::uint8_t {
    kNum, kX1, kX2, kAdd, kSub, kMul, kDiv, kPow, kNeg,
    kExp, kLog, kSqrt, kSin, kCos, kAbs2,
  };
  struct Node {
    Op op;
    double value = 0.0;  // kNum only
    int a = -1, b = -1;  // child indices
  };
  friend class Parser;
  double eval_node(int i, Pt p) const;
  std::string print(int i, int parent_prec, bool right_side) const;

  std::vector<Node> nodes_;
  int root_ = -1;
  std::string src_;
};

}  // namespace glab
