#include <doctest.h>

#include <cmath>
#include <vector>

#include "glab/hamiltonian.hpp"
#include "glab/harness.hpp"

using namespace glab;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Reflected-source evaluation of the disk Green function, written out
// independently of the library formula.
double ref_G(Pt x, Pt y) {
  const double ay2 = y.x * y.x + y.y * y.y;
  const Pt ystar{y.x / ay2, y.y / ay2};
  const double num = std::hypot(x.x - ystar.x, x.y - ystar.y) * std::sqrt(ay2);
  const double den = std::hypot(x.x - y.x, x.y - y.y);
  return std::log(num / den) / (2 * kPi);
}

double ref_R(Pt x) {
  return std::log(1.0 - x.x * x.x - x.y * x.y) / (2 * kPi);
}

}  // namespace

TEST_SUITE("hamiltonian") {

TEST_CASE("single-peak value and Hessian with constant weight") {
  const GreenOracle g = GreenOracle::exact_disk();
  const VExpr one = VExpr::parse("1");
  // H = R/2 for one peak.
  CHECK(eval_H(g, one, {{0.5, 0}}) ==
        doctest::Approx(0.5 * ref_R({0.5, 0})).epsilon(1e-12));
  // Hess H at the center is -(1/2pi) I.
  const Eigen::MatrixXd hs = hess_H(g, one, {{0.0, 0.0}}, 1e-4);
  CHECK(hs(0, 0) == doctest::Approx(-1.0 / (2 * kPi)).epsilon(1e-5));
  CHECK(hs(1, 1) == doctest::Approx(-1.0 / (2 * kPi)).epsilon(1e-5));
  CHECK(std::abs(hs(0, 1)) < 1e-6);
  // Gradient vanishes at the center.
  const Eigen::VectorXd gr = grad_H(g, one, {{0.0, 0.0}}, 1e-4);
  CHECK(gr.lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("matrix entries and scaling constants at a symmetric pair") {
  const GreenOracle g = GreenOracle::exact_disk();
  const VExpr one = VExpr::parse("1");
  const std::vector<Pt> pts = {{0.5, 0}, {-0.5, 0}};
  const PeakSystem sys = assemble_system(g, one, pts);

  const double Gv = ref_G({0.5, 0}, {-0.5, 0});
  const double Rv = ref_R({0.5, 0});
  CHECK(sys.h(0, 1) == doctest::Approx(-Gv).epsilon(1e-10));
  CHECK(sys.h(1, 0) == doctest::Approx(-Gv).epsilon(1e-10));
  CHECK(sys.h(0, 0) == doctest::Approx(Rv + 2 * Gv).epsilon(1e-10));
  CHECK(sys.h(1, 1) == doctest::Approx(Rv + 2 * Gv).epsilon(1e-10));

  // Eigenvalues of [[a, b], [b, a]] are a + b <= a - b here (b < 0).
  CHECK(sys.Lambda(0) == doctest::Approx(Rv + Gv).epsilon(1e-10));
  CHECK(sys.Lambda(1) == doctest::Approx(Rv + 3 * Gv).epsilon(1e-10));
  // Eigenvectors are the symmetric and antisymmetric combinations.
  const double inv = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(std::abs(sys.C(0, 0)) - inv) < 1e-10);
  CHECK(sys.C(0, 0) * sys.C(1, 0) > 0);
  CHECK(sys.C(0, 1) * sys.C(1, 1) < 0);
  CHECK(sys.first_vec_single_signed);
  CHECK(sys.no_single_peak_vec);

  // d_j = (1/8) exp(4 pi R + 4 pi G) with V == 1.
  const double d_expect = 0.125 * std::exp(4 * kPi * (Rv + Gv));
  CHECK(sys.d[0] == doctest::Approx(d_expect).epsilon(1e-9));
  CHECK(sys.d[1] == doctest::Approx(d_expect).epsilon(1e-9));
}

TEST_CASE("scaling constant picks up the weight at the peak") {
  const GreenOracle g = GreenOracle::exact_disk();
  // d = (1/8) exp(a/2) for V = exp(a (1 - |x|^2)) at the origin.
  for (double a : {1.0, 2.0}) {
    const VExpr v = VExpr::parse("exp(" + std::to_string(a) +
                                 "*(1 - abs2(x)))");
    const auto d = d_constants(g, v, {{0.0, 0.0}});
    CHECK(d[0] == doctest::Approx(0.125 * std::exp(0.5 * a)).epsilon(1e-9));
  }
  // Single-peak matrix entry h = (1/4pi) log V(0) = a / (4 pi) for a = 2.
  const VExpr v2 = VExpr::parse("exp(2*(1 - abs2(x)))");
  const PeakSystem sys = assemble_system(g, v2, {{0.0, 0.0}});
  CHECK(sys.h(0, 0) == doctest::Approx(2.0 / (4 * kPi)).epsilon(1e-10));
  CHECK(sys.Lambda(0) == doctest::Approx(1.0 / (2 * kPi)).epsilon(1e-10));
}

TEST_CASE("rescaling the weight shifts H by (m/8pi) log c") {
  const GreenOracle g = GreenOracle::exact_disk();
  const VExpr v1 = VExpr::parse("exp(1 - abs2(x))");
  const VExpr v3 = VExpr::parse("3*exp(1 - abs2(x))");
  const std::vector<Pt> one_pt = {{0.3, -0.2}};
  CHECK(eval_H(g, v3, one_pt) - eval_H(g, v1, one_pt) ==
        doctest::Approx(std::log(3.0) / (8 * kPi)).epsilon(1e-12));
  const std::vector<Pt> two_pts = {{0.42, 0}, {-0.42, 0}};
  CHECK(eval_H(g, v3, two_pts) - eval_H(g, v1, two_pts) ==
        doctest::Approx(2 * std::log(3.0) / (8 * kPi)).epsilon(1e-12));
}

TEST_CASE("critical-point search lands on the center for one peak") {
  const GreenOracle g = GreenOracle::exact_disk();
  const VExpr one = VExpr::parse("1");
  const auto pts = find_critical(g, one, {{0.3, 0.2}});
  CHECK(std::abs(pts[0].x) < 1e-7);
  CHECK(std::abs(pts[0].y) < 1e-7);
}

TEST_CASE("two constant-weight peaks admit no interior critical pair") {
  // The pair functional has no interior critical point: the peaks either
  // collide or run to the boundary, and the search must say so.
  const GreenOracle g = GreenOracle::exact_disk();
  const VExpr one = VExpr::parse("1");
  CriticalOpts opts;
  opts.multistart = 2;
  CHECK_THROWS_AS(find_critical(g, one, {{0.4, 0}, {-0.4, 0}}, opts),
                  NumericError);
}

TEST_CASE("pinned pair agrees with the direct slice scan") {
  const GreenOracle g = GreenOracle::exact_disk();
  const VExpr v = VExpr::parse("exp(-44*(x1^2 - 0.25)^2)");
  const auto pts = find_critical(g, v, {{0.42, 0}, {-0.42, 0}});
  const double t_scan = symmetric_slice_max(g, v);
  CHECK(std::abs(std::abs(pts[0].x) - t_scan) < 1e-4);
  CHECK(std::abs(pts[0].y) < 1e-8);
  CHECK(std::abs(pts[0].x + pts[1].x) < 1e-8);
  // The assembled pair keeps the symmetric/antisymmetric eigenvector split.
  const PeakSystem sys = assemble_system(g, v, pts);
  const double inv = 1.0 / std::sqrt(2.0);
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i)
      CHECK(std::abs(std::abs(sys.C(i, k)) - inv) < 1e-9);
}

TEST_CASE("low-band predictions at hand-checked arguments") {
  const double lambda = 1e-6;
  const LowPrediction p0 = predict_low(lambda, 0.0);
  CHECK(p0.first == doctest::Approx(0.0361912).epsilon(1e-5));
  CHECK(p0.second == doctest::Approx(0.0333635).epsilon(1e-5));
  CHECK(p0.inverse == doctest::Approx(0.0335684).epsilon(1e-5));
  // Lambda = 1/(2pi) shifts the second-order constant by exactly +1.
  const LowPrediction p1 = predict_low(lambda, 1.0 / (2 * kPi));
  const double lg = std::log(lambda);
  CHECK((p1.second - p0.second) * lg * lg == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p1.second == doctest::Approx(0.0386027).epsilon(1e-5));
}

TEST_CASE("mid-band prediction for the constant-weight single peak") {
  const GreenOracle g = GreenOracle::exact_disk();
  const VExpr one = VExpr::parse("1");
  const PeakSystem sys = assemble_system(g, one, {{0.0, 0.0}});
  // eta = -1/(128 pi) twice, so mu_2 = mu_3 = 1 + 0.375 lambda.
  CHECK(sys.eta(0) == doctest::Approx(-1.0 / (128 * kPi)).epsilon(1e-4));
  CHECK(sys.eta(1) == doctest::Approx(-1.0 / (128 * kPi)).epsilon(1e-4));
  for (int n : {2, 3}) {
    CHECK(predict_mid(0.01, sys, n) == doctest::Approx(1.00375).epsilon(1e-5));
    CHECK(predict_mid(0.04, sys, n) == doctest::Approx(1.015).epsilon(1e-5));
  }
}

TEST_CASE("peak-system JSON carries the spectrum") {
  const GreenOracle g = GreenOracle::exact_disk();
  const VExpr one = VExpr::parse("1");
  const PeakSystem sys = assemble_system(g, one, {{0.5, 0}, {-0.5, 0}});
  const std::string js = peaksystem_json(sys);
  CHECK(js.find("\"Lambda\"") != std::string::npos);
  CHECK(js.find("\"points\"") != std::string::npos);
  CHECK(js.find("\"d\"") != std::string::npos);
  CHECK(js.find("\"eta\"") != std::string::npos);
}

}  // TEST_SUITE
