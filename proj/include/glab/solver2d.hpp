#pragma once
// Full 2D branch solver:
//
//   -Δv = λ V(x) e^v,  v = 0 on the boundary,
//
// on a rectangle or the masked disk, continued in the height at an anchor
// peak. The Newton system augments the discretized equation with the anchor
// constraint v(x_a) = s and solves the bordered sparse system by LU.
//
// Linearized eigenpairs -Δw = μ λ V e^v w come from a Lanczos iteration on
// B^{1/2} A^{-1} B^{1/2} (A = symmetrized volume-scaled Laplacian, B = volume-
// scaled weight), with full reorthogonalization and a factorization reused
// across iterations. An inertia count cross-checks the eigenvalue ordering.

#include <Eigen/Sparse>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "glab/green.hpp"
#include "glab/grid2d.hpp"
#include "glab/vexpr.hpp"

namespace glab {

struct Peak {
  Pt pos;          // quadratically refined position
  double height;   // refined field value
};

struct BranchPoint2D {
  std::shared_ptr<const Grid2D> grid;
  Eigen::VectorXd v;            // interior nodal values
  double lambda = 0.0;
  double s = 0.0;               // anchor height
  double Sigma = 0.0;           // ∫ λ V e^v (cell sums)
  std::vector<Peak> peaks;      // detected maxima, strongest first m
  std::vector<double> deltas;   // per peak: 1/sqrt(λ V(x_pk) e^{v_pk})
  int newton_iters = 0;
  // Eigensolve results (filled by eig2d): ascending mu, sup-normalized fields.
  std::vector<double> mus;
  std::vector<Eigen::VectorXd> ws;
  bool sturm_checked = false;
  bool sturm_ok = false;
};

struct Branch2D {
  std::vector<BranchPoint2D> points;
  std::string stop_reason;  // empty when the schedule completed
};

struct Solver2DOpts {
  double newton_tol = 1e-9;  // raw residual ∞-norm
  int max_newton = 30;
  double lanczos_tol = 1e-10;
  int lanczos_extra = 40;     // iterations beyond 30 per requested pair
  // Stop when the predicted bubble scale falls under this many cells. The
  // bordered Newton solve stays stable down to about one cell; below that the
  // peak aliases between nodes.
  double min_delta_cells = 1.2;
  double peak_min_sep_cells = 6.0;
};

class Solver2D {
 public:
  Solver2D(Domain dom, VExpr V, int n, Solver2DOpts opts = {});

  const Grid2D& grid() const { return *grid_; }
  const VExpr& V() const { return V_; }

  // Bubble-profile initial field for peaks at the anchors with common height
  // s; lambda_out receives the matched parameter estimate.
  Eigen::VectorXd seed_bubbles(const std::vector<Pt>& anchors, double s,
                               const GreenOracle& oracle,
                               double* lambda_out) const;

  // Newton solve at anchor height s from the given initial field and lambda.
  BranchPoint2D solve_at(double s, Pt anchor, const Eigen::VectorXd& init,
                         double init_lambda, int expected_peaks = 1) const;

  // Amplitude continuation from a bubble seed at s_min. Stops early (with the
  // reason recorded) when the bubble scale falls under min_delta_cells cells
  // or Newton fails; completed points are kept either way.
  Branch2D continue_branch(const std::vector<Pt>& anchors, double s_min,
                           double s_max, double s_step,
                           const GreenOracle& oracle,
                           const std::function<void(const BranchPoint2D&)>&
                               on_point = nullptr) const;

  // K smallest eigenpairs of the linearization; fills bp.mus / bp.ws.
  void eig2d(BranchPoint2D& bp, int K) const;

  // Local maxima of the field (m strongest, separated), refined by a
  // quadratic fit on the 3x3 stencil.
  std::vector<Peak> detect_peaks(const Eigen::VectorXd& field, int m) const;

  // Concentration weights of eigenfield n: values at the peaks ("hat") and
  // the coefficients of a least-squares far-field fit of w/mu against the
  // Green columns 8π G(·, x_j) over the annulus outside the peak balls
  // ("tilde").
  struct CVectors {
    std::vector<double> hat;
    std::vector<double> tilde;
    double cond = 0.0;  // condition estimate of the fit
  };
  CVectors extract_c(const BranchPoint2D& bp, int n, const GreenOracle& oracle,
                     double ball_radius) const;

  // H1_0 inner product of two eigenfields, normalized.
  double h10_product(const BranchPoint2D& bp, int i, int j) const;

  double V_at_node(int k) const { return Vnodes_[static_cast<std::size_t>(k)]; }

 private:
  struct EigOperator;
  Eigen::VectorXd residual(const Eigen::VectorXd& v, double lambda,
                           double* scaled_norm) const;
  void build_sym_pencil(const BranchPoint2D& bp,
                        Eigen::SparseMatrix<double>& A,
                        Eigen::VectorXd& Bdiag) const;

  Domain dom_;
  VExpr V_;
  std::shared_ptr<Grid2D> grid_;
  std::vector<double> Vnodes_;
  Solver2DOpts opts_;
};

}  // namespace glab
