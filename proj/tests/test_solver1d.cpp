#include <doctest.h>

#include <cmath>
#include <vector>

#include "glab/solver1d.hpp"

using namespace glab;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_SUITE("solver1d") {

TEST_CASE("closed-form branch at delta = 3") {
  ExactBranch eb;
  eb.delta_cl = 3.0;
  CHECK(eb.lambda() == doctest::Approx(0.72).epsilon(1e-14));
  CHECK(eb.v0() == doctest::Approx(2 * std::log(10.0)).epsilon(1e-14));
  CHECK(eb.v(0.0) == doctest::Approx(eb.v0()).epsilon(1e-14));
  CHECK(eb.v(1.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(eb.Sigma() == doctest::Approx(7.2 * kPi).epsilon(1e-14));
  CHECK(eb.sigma(0.5) == doctest::Approx(17.4009).epsilon(1e-5));
  CHECK(eb.sigma(1.0) == doctest::Approx(eb.Sigma()).epsilon(1e-14));
  CHECK(eb.delta_jk() == doctest::Approx(1.0 / (std::sqrt(8.0) * 3.0))
                             .epsilon(1e-14));
}

TEST_CASE("graded mesh invariants") {
  const RadialGrid g = RadialGrid::graded(0.01);
  REQUIRE(g.r.size() >= 2);
  CHECK(g.r.front() == 0.0);
  CHECK(g.r.back() == doctest::Approx(1.0).epsilon(1e-14));
  for (std::size_t i = 1; i < g.r.size(); ++i) CHECK(g.r[i] > g.r[i - 1]);
  // Refinement nests: every coarse node appears in the fine grid.
  const RadialGrid f = g.refined();
  CHECK(f.N() == 2 * g.N());
  for (std::size_t i = 0; i < g.r.size(); ++i)
    CHECK(f.r[2 * i] == doctest::Approx(g.r[i]).epsilon(1e-13));
  CHECK_THROWS_AS(RadialGrid::graded(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(RadialGrid::graded(0.01, 1.5), std::invalid_argument);
}

TEST_CASE("non-radial weight is rejected") {
  CHECK_THROWS_AS(RadialSolver(VExpr::parse("exp(x1)")),
                  std::invalid_argument);
  CHECK_NOTHROW(RadialSolver(VExpr::parse("exp(1 - abs2(x))")));
  CHECK_NOTHROW(RadialSolver(VExpr::parse("1")));
}

TEST_CASE("single solve matches the closed form and converges fast") {
  const RadialSolver solver(VExpr::parse("1"));
  ExactBranch eb;
  eb.delta_cl = 3.0;
  const BranchPoint1D bp = solver.solve_at(eb.v0());
  CHECK(std::abs(bp.lambda - eb.lambda()) / eb.lambda() < 1e-8);
  CHECK(std::abs(bp.Sigma - eb.Sigma()) / eb.Sigma() < 1e-7);
  CHECK(bp.newton_iters <= 8);
  CHECK(bp.observed_order > 1.9);
  // Nodal profile against the closed form.
  double worst = 0.0;
  for (std::size_t i = 0; i < bp.grid.r.size(); ++i)
    worst = std::max(worst, std::abs(bp.v[i] - eb.v(bp.grid.r[i])));
  CHECK(worst < 1e-6);
}

TEST_CASE("continuation tracks the closed form over a decade of s") {
  const RadialSolver solver(VExpr::parse("1"));
  const auto branch = solver.continue_branch(1.0, 10.0, 1.0);
  REQUIRE(branch.size() == 10);
  for (const BranchPoint1D& bp : branch) {
    // Invert s = 2 log(1 + delta^2) for the matching classical point.
    ExactBranch eb;
    eb.delta_cl = std::sqrt(std::exp(0.5 * bp.s) - 1.0);
    CHECK(std::abs(bp.lambda - eb.lambda()) / eb.lambda() < 1e-7);
    CHECK(std::abs(bp.Sigma - eb.Sigma()) / eb.Sigma() < 1e-7);
    CHECK(std::abs(bp.delta - eb.delta_jk()) / eb.delta_jk() < 1e-6);
    CHECK(bp.newton_iters <= 8);
  }
}

TEST_CASE("bubble-scale ratio approaches 1/8 deep on the branch") {
  const RadialSolver solver(VExpr::parse("1"));
  const BranchPoint1D bp = solver.solve_at(20.0);
  CHECK(bp.delta / std::sqrt(bp.lambda) ==
        doctest::Approx(0.125).epsilon(1e-3));
}

TEST_CASE("first eigenvalue crosses 1 at the fold") {
  const RadialSolver solver(VExpr::parse("1"));
  // The fold sits at delta_cl = 1: s = 2 log 2, lambda = 2.
  BranchPoint1D bp = solver.solve_at(2.0 * std::log(2.0));
  CHECK(bp.lambda == doctest::Approx(2.0).epsilon(1e-8));
  solver.assemble_spectrum(bp, 2, 4);
  REQUIRE(bp.modes.size() >= 2);
  CHECK(std::abs(bp.modes[0].mu_ext - 1.0) < 2e-3);
  CHECK(bp.modes[1].mu_ext > bp.modes[0].mu_ext);
  CHECK(bp.modes[1].mu_ext > 1.0);
}

TEST_CASE("band structure at lambda near 0.01") {
  const RadialSolver solver(VExpr::parse("1"));
  // s chosen so the continued branch lands at lambda ~ 1e-2.
  BranchPoint1D bp = solver.solve_at(2.0 * std::log(799.0));
  CHECK(bp.lambda == doctest::Approx(0.01).epsilon(1e-3));
  solver.assemble_spectrum(bp, 4, 6);
  REQUIRE(bp.modes.size() >= 4);
  // Modes arrive sorted; the second and third form the exact ell = 1 pair.
  CHECK(bp.modes[1].ell == 1);
  CHECK(bp.modes[1].multiplicity == 2);
  const double mid = 1.0 + 0.375 * bp.lambda;
  CHECK(std::abs(bp.modes[1].mu_ext - mid) < 5e-4);
  // Counting multiplicity, modes[2] is already the (3m+1)-st eigenvalue.
  CHECK(bp.modes[2].mu_ext > 1.0);
  CHECK(bp.modes[2].mu_ext > bp.modes[1].mu_ext);
}

TEST_CASE("first eigenvalue lands in the predicted band at lambda = 1e-6") {
  const RadialSolver solver(VExpr::parse("1"));
  // lambda = 8 d^2/(1+d^2)^2 = 1e-6 at d^2 ~ 8e6: s = 2 log(1 + d^2).
  const double d2 = 7999997.0;
  BranchPoint1D bp = solver.solve_at(2.0 * std::log(1.0 + d2));
  CHECK(bp.lambda == doctest::Approx(1e-6).epsilon(1e-3));
  solver.assemble_spectrum(bp, 1, 1);
  REQUIRE(!bp.modes.empty());
  CHECK(bp.modes[0].ell == 0);
  CHECK(bp.modes[0].mu_ext > 0.030);
  CHECK(bp.modes[0].mu_ext < 0.037);
}

TEST_CASE("same-index radial modes are stiffness-orthogonal") {
  const RadialSolver solver(VExpr::parse("1"));
  BranchPoint1D bp = solver.solve_at(10.0);
  for (int ell : {0, 1}) {
    const auto modes = solver.mode_eigs(bp, ell, 2);
    REQUIRE(modes.size() == 2);
    const double cross =
        RadialSolver::h10_product(bp.grid, ell, modes[0].w, modes[1].w);
    const double n0 =
        RadialSolver::h10_product(bp.grid, ell, modes[0].w, modes[0].w);
    const double n1 =
        RadialSolver::h10_product(bp.grid, ell, modes[1].w, modes[1].w);
    CHECK(std::abs(cross) / std::sqrt(n0 * n1) < 1e-8);
  }
  CHECK_THROWS_AS(
      RadialSolver::h10_product(bp.grid, -1, bp.v, bp.v),
      std::invalid_argument);
}

TEST_CASE("radial interpolation reproduces nodal data and endpoints") {
  const RadialGrid g = RadialGrid::graded(0.05);
  std::vector<double> f(g.r.size());
  for (std::size_t i = 0; i < g.r.size(); ++i) f[i] = 1.0 - g.r[i] * g.r[i];
  for (std::size_t i = 0; i < g.r.size(); ++i)
    CHECK(interp_radial(g, f, g.r[i]) == doctest::Approx(f[i]).epsilon(1e-13));
  CHECK(interp_radial(g, f, 1.0) == doctest::Approx(0.0).epsilon(1e-13));
  // Midpoint values stay within the chord error of the quadratic.
  CHECK(interp_radial(g, f, 0.5) == doctest::Approx(0.75).epsilon(1e-2));
}

TEST_CASE("deep continuation with a radial weight stays well-conditioned [slow]") {
  const RadialSolver solver(VExpr::parse("exp(2*(1 - abs2(x)))"));
  const auto branch = solver.continue_branch(1.0, 30.0, 0.5);
  REQUIRE(branch.size() == 59);
  for (const BranchPoint1D& bp : branch) {
    CHECK(bp.newton_iters <= 10);
    CHECK(bp.observed_order > 1.8);
  }
  // The bubble-scale law with the weight at the origin: e/8.
  const BranchPoint1D& last = branch.back();
  CHECK(last.delta / std::sqrt(last.lambda) ==
        doctest::Approx(std::exp(1.0) / 8.0).epsilon(5e-3));
}

}  // TEST_SUITE
