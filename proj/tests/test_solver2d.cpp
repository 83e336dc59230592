#include <doctest.h>

#include <cmath>
#include <vector>

#include "glab/solver1d.hpp"
#include "glab/solver2d.hpp"

using namespace glab;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Lambda of the classical radial branch at peak height s.
double exact_lambda(double s) {
  ExactBranch eb;
  eb.delta_cl = std::sqrt(std::exp(0.5 * s) - 1.0);
  return eb.lambda();
}

}  // namespace

TEST_SUITE("solver2d") {

TEST_CASE("square-domain solve reproduces its own residual identity") {
  // Moderate height on the square: Newton must converge in a few steps and
  // the detected peak must sit at the center by symmetry.
  const Domain dom = Domain::rect(-1, 1, -1, 1);
  const GreenOracle oracle = GreenOracle::numeric(dom, 65);
  const Solver2D solver(dom, VExpr::parse("1"), 65);
  double lam0 = 0.0;
  const Eigen::VectorXd init = solver.seed_bubbles({{0, 0}}, 4.0, oracle, &lam0);
  const BranchPoint2D bp = solver.solve_at(4.0, {0, 0}, init, lam0);
  CHECK(bp.newton_iters <= 12);
  REQUIRE(bp.peaks.size() == 1);
  CHECK(std::abs(bp.peaks[0].pos.x) < 1e-8);
  CHECK(std::abs(bp.peaks[0].pos.y) < 1e-8);
  CHECK(bp.peaks[0].height == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(bp.lambda > 0.0);
  CHECK(bp.Sigma > 0.0);
}

TEST_CASE("masked-disk solve converges to the radial closed form") {
  const Domain dom = Domain::disk();
  const GreenOracle oracle = GreenOracle::exact_disk();
  const double s = 6.0;
  std::vector<double> errs;
  for (int n : {65, 129, 257}) {
    const Solver2D solver(dom, VExpr::parse("1"), n);
    double lam0 = 0.0;
    const Eigen::VectorXd init =
        solver.seed_bubbles({{0, 0}}, s, oracle, &lam0);
    const BranchPoint2D bp = solver.solve_at(s, {0, 0}, init, lam0);
    errs.push_back(std::abs(bp.lambda - exact_lambda(s)));
  }
  CHECK(errs[2] / exact_lambda(s) < 2e-4);
  // Successive refinement gains close to second order.
  CHECK(errs[0] / errs[1] > 3.5);
  CHECK(errs[1] / errs[2] > 3.5);
}

TEST_CASE("continuation on the disk tracks the closed form") {
  const Domain dom = Domain::disk();
  const GreenOracle oracle = GreenOracle::exact_disk();
  const Solver2D solver(dom, VExpr::parse("1"), 129);
  const Branch2D br = solver.continue_branch({{0, 0}}, 4.0, 8.0, 1.0, oracle);
  CHECK(br.stop_reason.empty());
  REQUIRE(br.points.size() == 5);
  for (const BranchPoint2D& bp : br.points) {
    CHECK(std::abs(bp.lambda - exact_lambda(bp.s)) / exact_lambda(bp.s) <
          3e-3);
    ExactBranch eb;
    eb.delta_cl = std::sqrt(std::exp(0.5 * bp.s) - 1.0);
    CHECK(std::abs(bp.Sigma - eb.Sigma()) / eb.Sigma() < 3e-3);
  }
}

TEST_CASE("branch stops with a recorded reason when the bubble outruns the grid") {
  const Domain dom = Domain::disk();
  const GreenOracle oracle = GreenOracle::exact_disk();
  const Solver2D solver(dom, VExpr::parse("1"), 65);
  // On a 65-grid the bubble scale crosses min_delta_cells well before s = 20.
  const Branch2D br = solver.continue_branch({{0, 0}}, 4.0, 20.0, 1.0, oracle);
  CHECK(!br.stop_reason.empty());
  CHECK(!br.points.empty());
  CHECK(br.points.back().s < 20.0);
}

TEST_CASE("peak detection separates and refines two bumps") {
  const Domain dom = Domain::disk();
  const Solver2D solver(dom, VExpr::parse("1"), 129);
  const Grid2D& grid = solver.grid();
  // Two Gaussian bumps of unequal height.
  Eigen::VectorXd field(grid.interior_count());
  for (int k = 0; k < grid.interior_count(); ++k) {
    const Pt p = grid.node_pos(k);
    const double b1 =
        3.0 * std::exp(-60.0 * ((p.x - 0.42) * (p.x - 0.42) + p.y * p.y));
    const double b2 =
        2.0 * std::exp(-60.0 * ((p.x + 0.42) * (p.x + 0.42) + p.y * p.y));
    field(k) = b1 + b2;
  }
  const auto peaks = solver.detect_peaks(field, 2);
  REQUIRE(peaks.size() == 2);
  CHECK(peaks[0].height > peaks[1].height);
  CHECK(std::abs(peaks[0].pos.x - 0.42) < 1e-3);
  CHECK(std::abs(peaks[0].pos.y) < 1e-3);
  CHECK(std::abs(peaks[1].pos.x + 0.42) < 1e-3);
  CHECK(std::abs(peaks[1].pos.y) < 1e-3);
}

TEST_CASE("mirror-symmetric weight keeps the pair branch symmetric") {
  const Domain dom = Domain::disk();
  const GreenOracle oracle = GreenOracle::exact_disk();
  const VExpr v = VExpr::parse("exp(-44*(x1^2 - 0.25)^2)");
  const Solver2D solver(dom, v, 129);
  const Branch2D br =
      solver.continue_branch({{0.42, 0}, {-0.42, 0}}, 6.0, 8.0, 1.0, oracle);
  REQUIRE(br.points.size() == 3);
  for (const BranchPoint2D& bp : br.points) {
    REQUIRE(bp.peaks.size() == 2);
    // Peak positions mirror each other through the x2-axis.
    const double xs = bp.peaks[0].pos.x + bp.peaks[1].pos.x;
    CHECK(std::abs(xs) < 1e-6);
    CHECK(std::abs(bp.peaks[0].pos.y) < 1e-6);
    CHECK(std::abs(bp.peaks[1].pos.y) < 1e-6);
    CHECK(std::abs(bp.peaks[0].height - bp.peaks[1].height) < 1e-6);
    CHECK(std::abs(bp.deltas[0] - bp.deltas[1]) < 1e-9);
  }
}

TEST_CASE("eigensolve passes the inertia cross-check and orders mu") {
  const Domain dom = Domain::disk();
  const GreenOracle oracle = GreenOracle::exact_disk();
  const Solver2D solver(dom, VExpr::parse("1"), 129);
  double lam0 = 0.0;
  const Eigen::VectorXd init = solver.seed_bubbles({{0, 0}}, 6.0, oracle, &lam0);
  BranchPoint2D bp = solver.solve_at(6.0, {0, 0}, init, lam0);
  solver.eig2d(bp, 4);
  REQUIRE(bp.mus.size() == 4);
  CHECK(bp.sturm_checked);
  CHECK(bp.sturm_ok);
  for (std::size_t i = 1; i < bp.mus.size(); ++i)
    CHECK(bp.mus[i] >= bp.mus[i - 1]);
  // ell = 1 pair of the radial problem appears as an exactly degenerate pair
  // on the symmetric grid.
  CHECK(std::abs(bp.mus[1] - bp.mus[2]) < 1e-8);
  // Eigenfields are sup-normalized and pairwise H10-orthogonal.
  for (const Eigen::VectorXd& w : bp.ws)
    CHECK(w.lpNorm<Eigen::Infinity>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(solver.h10_product(bp, 0, 3)) < 1e-7);
}

TEST_CASE("concentration weights of the first mode on a deep point") {
  const Domain dom = Domain::disk();
  const GreenOracle oracle = GreenOracle::exact_disk();
  const Solver2D solver(dom, VExpr::parse("1"), 257);
  const Branch2D br = solver.continue_branch({{0, 0}}, 6.0, 10.0, 1.0, oracle);
  REQUIRE(!br.points.empty());
  BranchPoint2D bp = br.points.back();
  solver.eig2d(bp, 1);
  const auto cv = solver.extract_c(bp, 1, oracle, 0.4);
  REQUIRE(cv.hat.size() == 1);
  REQUIRE(cv.tilde.size() == 1);
  // Both the peak value and the far-field coefficient are order one and
  // agree with each other loosely at this depth.
  CHECK(cv.hat[0] > 0.1);
  CHECK(cv.tilde[0] > 0.1);
  CHECK(std::abs(cv.tilde[0] / cv.hat[0] - 1.0) < 0.35);
  CHECK(cv.cond < 1e3);
}

TEST_CASE("first 2-D eigenvalue matches the radial solver [slow]") {
  const Domain dom = Domain::disk();
  const GreenOracle oracle = GreenOracle::exact_disk();
  const double s = 8.0;
  // Radial reference.
  const RadialSolver rsolver(VExpr::parse("1"));
  BranchPoint1D rbp = rsolver.solve_at(s);
  rsolver.assemble_spectrum(rbp, 1, 1);
  REQUIRE(!rbp.modes.empty());
  const double mu1_ref = rbp.modes[0].mu_ext;
  // 2-D eigensolve at n = 513.
  const Solver2D solver(dom, VExpr::parse("1"), 513);
  double lam0 = 0.0;
  const Eigen::VectorXd init = solver.seed_bubbles({{0, 0}}, s, oracle, &lam0);
  BranchPoint2D bp = solver.solve_at(s, {0, 0}, init, lam0);
  solver.eig2d(bp, 1);
  REQUIRE(!bp.mus.empty());
  CHECK(std::abs(bp.mus[0] - mu1_ref) < 5e-3);
}

}  // TEST_SUITE
