#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "glab/vexpr.hpp"

using namespace glab;

TEST_SUITE("vexpr") {

TEST_CASE("arithmetic, precedence, and the named functions") {
  CHECK(VExpr::parse("1 + 2*3").eval({0, 0}) == doctest::Approx(7.0));
  CHECK(VExpr::parse("(1 + 2)*3").eval({0, 0}) == doctest::Approx(9.0));
  CHECK(VExpr::parse("2^3^2").eval({0, 0}) == doctest::Approx(512.0));
  CHECK(VExpr::parse("-x1^2").eval({3, 0}) == doctest::Approx(-9.0));
  CHECK(VExpr::parse("x1 - x2/2").eval({1, 4}) == doctest::Approx(-1.0));
  CHECK(VExpr::parse("exp(log(5))").eval({0, 0}) == doctest::Approx(5.0));
  CHECK(VExpr::parse("sqrt(x1^2 + x2^2)").eval({3, 4}) ==
        doctest::Approx(5.0));
  CHECK(VExpr::parse("sin(x1)^2 + cos(x1)^2").eval({0.7, 0}) ==
        doctest::Approx(1.0));
  CHECK(VExpr::parse("abs2(x)").eval({3, 4}) == doctest::Approx(25.0));
}

TEST_CASE("parse errors carry the byte offset of the fault") {
  auto offset_of = [](const std::string& src) -> std::size_t {
    try {
      VExpr::parse(src);
    } catch (const ParseError& e) {
      return e.offset;
    }
    return static_cast<std::size_t>(-1);
  };
  CHECK(offset_of("1 + + 2") == 4);
  CHECK(offset_of("") == 0);
  CHECK(offset_of("(1 + 2") == 6);
  CHECK(offset_of("1 ) 2") == 2);
  CHECK(offset_of("foo(1)") == 0);
  CHECK(offset_of("abs2(x1)") == 5);
  CHECK(offset_of("exp 2") == 4);
}

TEST_CASE("evaluation faults name the offending subexpression") {
  CHECK_THROWS_AS(VExpr::parse("1/x1").eval({0, 0}), EvalError);
  CHECK_THROWS_AS(VExpr::parse("log(x1)").eval({-1, 0}), EvalError);
  CHECK_THROWS_AS(VExpr::parse("sqrt(x1)").eval({-1, 0}), EvalError);
  CHECK_THROWS_AS(VExpr::parse("(-1)^0.5").eval({0, 0}), EvalError);
  CHECK_THROWS_AS(VExpr::parse("exp(x1)").eval({1e9, 0}), EvalError);
  try {
    VExpr::parse("1 + log(x1 - 2)").eval({0, 0});
    CHECK(false);
  } catch (const EvalError& e) {
    // The reported subexpression is the log node, not the whole source.
    CHECK(e.subexpr.find("log") != std::string::npos);
    CHECK(e.subexpr.find("+") == std::string::npos);
  }
}

TEST_CASE("grad_log converges at second order in the step") {
  // V = exp(2 (1 - |x|^2)): grad log V = -4 x exactly, so central
  // differences are exact up to roundoff for the quadratic exponent.
  const VExpr q = VExpr::parse("exp(2*(1 - abs2(x)))");
  const Pt g = q.grad_log({0.3, -0.2}, 1e-4);
  CHECK(std::abs(g.x - (-1.2)) < 1e-10);
  CHECK(std::abs(g.y - 0.8) < 1e-10);

  // A quartic exponent has a genuine truncation error; halving the step
  // must cut it by about 4.
  const VExpr v = VExpr::parse("exp(-44*(x1^2 - 0.25)^2)");
  const Pt p{0.42, 0.13};
  const double exact = -44.0 * 2.0 * (p.x * p.x - 0.25) * 2.0 * p.x;
  const double e1 = std::abs(v.grad_log(p, 2e-3).x - exact);
  const double e2 = std::abs(v.grad_log(p, 1e-3).x - exact);
  CHECK(e1 > 0);
  CHECK(e2 < e1 / 3.0);
}

TEST_CASE("serialization round-trips to the identical tree") {
  const std::vector<std::string> sources = {
      "1",
      "x1*x2 - 3/(x1 + 4)",
      "exp(2*(1 - abs2(x)))",
      "-x1^2 + sin(cos(x2))",
      "sqrt(1 + x1^2)^3",
      "exp(-44*(x1^2 - 0.25)^2)",
  };
  for (const std::string& s : sources) {
    const VExpr a = VExpr::parse(s);
    const VExpr b = VExpr::parse(a.to_string());
    CHECK(a.same_tree(b));
    CHECK(b.to_string() == a.to_string());
  }
}

TEST_CASE("constant-one detection") {
  CHECK(VExpr::parse("1").is_constant_one());
  CHECK(VExpr::parse(" 1 ").is_constant_one());
  CHECK_FALSE(VExpr::parse("1 + 0*x1").is_constant_one());
  CHECK_FALSE(VExpr::parse("2").is_constant_one());
}

TEST_CASE("prefix truncation never crashes the parser") {
  const std::string full =
      "exp(-44*(x1^2 - 0.25)^2) + sqrt(abs2(x))/(1 + sin(x2)) - 3.5e-2^2";
  for (std::size_t len = 0; len <= full.size(); ++len) {
    const std::string prefix = full.substr(0, len);
    try {
      const VExpr v = VExpr::parse(prefix);
      (void)v.to_string();
    } catch (const ParseError& e) {
      CHECK(e.offset <= prefix.size());
    }
  }
}

TEST_CASE("random token soup either parses or reports a position") {
  const std::vector<std::string> tokens = {
      "x1", "x2", "+",  "-",    "*",  "/",   "^",    "(",    ")",
      "1",  "2.5", "exp", "log", "abs2", "x", "sqrt", "sin", " "};
  std::mt19937 rng(20260816u);
  std::uniform_int_distribution<std::size_t> pick(0, tokens.size() - 1);
  std::uniform_int_distribution<int> count(1, 16);
  for (int iter = 0; iter < 500; ++iter) {
    std::string src;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) src += tokens[pick(rng)];
    try {
      const VExpr v = VExpr::parse(src);
      const VExpr again = VExpr::parse(v.to_string());
      CHECK(v.same_tree(again));
    } catch (const ParseError& e) {
      CHECK(e.offset <= src.size());
    }
  }
}

}  // TEST_SUITE
