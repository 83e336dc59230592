#include <doctest.h>

#include <cmath>
#include <vector>

#include "glab/green.hpp"

using namespace glab;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_SUITE("green") {

TEST_CASE("closed disk forms at hand-checked points") {
  const GreenOracle g = GreenOracle::exact_disk();
  // Source at the center: G(x, 0) = -(1/2pi) log|x|, K(x, 0) = 0.
  CHECK(g.G({0.5, 0}, {0, 0}) ==
        doctest::Approx(std::log(2.0) / (2 * kPi)).epsilon(1e-12));
  CHECK(g.K({0.3, 0.4}, {0, 0}) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(g.K({-0.7, 0.1}, {0, 0})) < 1e-12);
  // Off-center pair, evaluated against the reflected-source formula by hand.
  CHECK(g.G({0.5, 0}, {-0.5, 0}) == doctest::Approx(0.03551378).epsilon(1e-6));
  // Robin function R(x) = (1/2pi) log(1 - |x|^2).
  CHECK(g.R({0, 0}) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(g.R({0.5, 0}) ==
        doctest::Approx(std::log(0.75) / (2 * kPi)).epsilon(1e-12));
  CHECK(g.grad_R({0.5, 0}).x == doctest::Approx(-0.2122066).epsilon(1e-5));
  CHECK(std::abs(g.grad_R({0.5, 0}).y) < 1e-9);
  // grad_x G((0.5,0), 0) = -(1/2pi) x/|x|^2 = (-1/pi, 0).
  CHECK(g.grad_G_x({0.5, 0}, {0, 0}).x ==
        doctest::Approx(-1.0 / kPi).epsilon(1e-6));
}

TEST_CASE("closed disk form is symmetric in its arguments") {
  const GreenOracle g = GreenOracle::exact_disk();
  const std::vector<Pt> pts = {
      {0.1, 0.2}, {-0.5, 0.3}, {0.7, -0.1}, {0.0, -0.85}, {0.42, 0.0}};
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      CHECK(g.G(pts[i], pts[j]) ==
            doctest::Approx(g.G(pts[j], pts[i])).epsilon(1e-12));
}

TEST_CASE("points outside the domain are rejected") {
  const GreenOracle g = GreenOracle::exact_disk();
  CHECK_THROWS_AS(g.R({1.5, 0}), DomainError);
  CHECK_THROWS_AS(g.G({1.5, 0}, {0, 0}), DomainError);
  CHECK_THROWS_AS(g.G({0.5, 0}, {0, 1.2}), DomainError);
  const GreenOracle r = GreenOracle::numeric(Domain::rect(-1, 1, -1, 1), 33);
  CHECK_THROWS_AS(r.R({1.5, 0}), DomainError);
}

TEST_CASE("numeric disk oracle converges to the closed forms") {
  const GreenOracle exact = GreenOracle::exact_disk();
  const std::vector<Pt> xs = {{0.3, 0.1}, {-0.4, 0.25}, {0.0, -0.6}};
  const Pt y{0.42, 0.0};
  auto worst = [&](int n) {
    const GreenOracle num = GreenOracle::numeric(Domain::disk(), n);
    double w = 0.0;
    for (const Pt& x : xs) {
      w = std::max(w, std::abs(num.G(x, y) - exact.G(x, y)));
      w = std::max(w, std::abs(num.R(x) - exact.R(x)));
    }
    return w;
  };
  const double e65 = worst(65);
  const double e129 = worst(129);
  CHECK(e129 < 2e-3);
  // Order of accuracy from the two levels; the cut-cell boundary stencil
  // should keep it clearly above first order.
  const double order = std::log2(e65 / e129);
  CHECK(order > 1.5);
}

TEST_CASE("numeric oracle is symmetric up to discretization error") {
  auto asym = [](int n) {
    const GreenOracle num = GreenOracle::numeric(Domain::disk(), n);
    const std::vector<Pt> pts = {{0.3, 0.1}, {-0.4, 0.25}, {0.0, -0.6}};
    double w = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j)
        w = std::max(w, std::abs(num.G(pts[i], pts[j]) -
                                 num.G(pts[j], pts[i])));
    return w;
  };
  const double a65 = asym(65);
  const double a129 = asym(129);
  CHECK(a65 < 5e-3);
  CHECK(a129 < a65);
}

TEST_CASE("square-domain Robin value sits between the disk bounds") {
  // The unit disk sits inside (-1,1)^2, which sits inside the radius-sqrt2
  // disk; domain monotonicity brackets R(0) strictly between their values.
  const GreenOracle sq65 = GreenOracle::numeric(Domain::rect(-1, 1, -1, 1), 65);
  const GreenOracle sq129 = GreenOracle::numeric(Domain::rect(-1, 1, -1, 1), 129);
  const double upper = std::log(2.0) / (4 * kPi);  // radius-sqrt2 disk
  const double r65 = sq65.R({0, 0});
  const double r129 = sq129.R({0, 0});
  CHECK(r129 > 0.0);
  CHECK(r129 < upper);
  // The two levels agree to discretization accuracy.
  CHECK(std::abs(r65 - r129) < 1e-3);
}

TEST_CASE("warm-up covers the stencil sources used afterwards") {
  GreenOracle num = GreenOracle::numeric(Domain::disk(), 65);
  num.warm_up({{0.42, 0.0}, {-0.42, 0.0}});
  // Queries at the warmed sources (values and gradients) work and agree
  // with the closed forms loosely.
  const GreenOracle exact = GreenOracle::exact_disk();
  CHECK(std::abs(num.G({0.1, 0.2}, {0.42, 0.0}) -
                 exact.G({0.1, 0.2}, {0.42, 0.0})) < 5e-3);
  const Pt gr_n = num.grad_R({0.42, 0.0});
  const Pt gr_e = exact.grad_R({0.42, 0.0});
  CHECK(std::abs(gr_n.x - gr_e.x) < 5e-2);
  CHECK(std::abs(gr_n.y - gr_e.y) < 5e-2);
}

TEST_CASE("export rejects an unwritable path") {
  const GreenOracle g = GreenOracle::exact_disk();
  CHECK_THROWS_AS(g.export_K_csv({0, 0}, "/nonexistent_dir_xyz/out.csv"),
                  IoError);
}

TEST_CASE("numeric Robin error at the center shrinks like the mesh [slow]") {
  // R(0) = 0 on the unit disk; sample the numeric error through n = 513.
  std::vector<double> errs;
  for (int n : {129, 257, 513}) {
    const GreenOracle num = GreenOracle::numeric(Domain::disk(), n);
    errs.push_back(std::abs(num.R({0, 0})));
  }
  CHECK(errs[0] < 5e-3);
  CHECK(errs[1] < errs[0]);
  CHECK(errs[2] < errs[1]);
  CHECK(errs[2] < 5e-4);
}

}  // TEST_SUITE
