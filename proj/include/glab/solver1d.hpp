#pragma once
// Radial branch solver on the unit disk:
//
//   -(1/r) (r v')' = λ V(r) e^v,  v'(0) = 0,  v(1) = 0,
//
// continued in the peak height s = v(0) (amplitude continuation, which passes
// folds in λ). Discretization: P1 finite elements on a graded radial mesh
// with lumped mass; the peak-height constraint v(0) = s eliminates the center
// unknown and λ joins the unknowns through a bordered Newton solve.
//
// Linearized modes: the weak form of -Δw = μ λ V e^v w separates per angular
// index ℓ into symmetric tridiagonal pencils
//   (K + ℓ² C) w = μ M w,
// solved by Sturm bisection plus inverse iteration after the M^{-1/2}
// congruence. Eigenfields are sup-normalized with positive maximum.

#include <functional>
#include <string>
#include <vector>

#include "glab/numerics.hpp"
#include "glab/vexpr.hpp"

namespace glab {

struct RadialGrid {
  std::vector<double> r;  // r[0] = 0 < ... < r[N] = 1

  // Geometric grading from the origin: first step ~ delta/n_inner growing by
  // factor q up to h_max, then rescaled so the last node lands on 1.
  static RadialGrid graded(double delta, double q = 1.06, double h_max = 1.0 / 256.0,
                           int n_inner = 48);
  RadialGrid refined() const;  // midpoint refinement (nested)
  int N() const { return static_cast<int>(r.size()) - 1; }
};

struct RadialMode {
  int ell = 0;       // angular index
  int k = 0;         // radial index within ell (0 = lowest)
  double mu = 0.0;   // finest-grid eigenvalue
  double mu_ext = 0.0;  // two-grid extrapolated eigenvalue
  int multiplicity = 1; // 2 for ell >= 1
  std::vector<double> w;  // radial profile on bp nodes, sup-norm 1, max > 0
};

struct BranchPoint1D {
  RadialGrid grid;            // finest grid used
  std::vector<double> v;      // nodal values, v[N] = 0
  std::vector<double> Vr;     // V at the nodes
  double lambda = 0.0;        // extrapolated
  double lambda_raw = 0.0;    // finest-grid value
  double observed_order = 0.0;
  double s = 0.0;             // v(0)
  double delta = 0.0;         // 1 / sqrt(lambda V(0) e^s)
  double Sigma = 0.0;         // ∫ λ V e^v, extrapolated alongside lambda
  int newton_iters = 0;       // iterations of the continuation solve
  std::vector<RadialMode> modes;  // ascending mu across all ell, with labels
  // Second-finest level, kept for eigenvalue extrapolation.
  RadialGrid coarse_grid;
  std::vector<double> coarse_v;
  std::vector<double> coarse_Vr;
  double coarse_lambda = 0.0;
};

// Closed-form branch for V == 1, parameterized by the classical delta.
struct ExactBranch {
  double delta_cl = 1.0;
  double lambda() const;
  double v0() const;
  double v(double r) const;
  double Sigma() const;
  double sigma(double R) const;  // mass of the ball of radius R
  double delta_jk() const;       // bubble scale 1/(sqrt(8) delta_cl)
  // Samples the closed form onto a graded grid sized for its bubble scale.
  BranchPoint1D sample(int refine_levels = 0) const;
};

struct Solver1DOpts {
  double q = 1.06;
  int n_inner = 48;
  double h_max = 1.0 / 256.0;
  double newton_tol = 1e-11;  // raw residual ∞-norm
  int max_newton = 30;
  int extrap_levels = 4;      // nested grids used for lambda extrapolation
};

class RadialSolver {
 public:
  RadialSolver(VExpr V, Solver1DOpts opts = {});

  const VExpr& V() const { return V_; }

  // Solves at peak height s. prev (optional) provides the continuation
  // predictor; otherwise a linearized cold start is used.
  BranchPoint1D solve_at(double s, const BranchPoint1D* prev = nullptr) const;

  // Continuation over an s-schedule. on_point runs after each converged point.
  std::vector<BranchPoint1D> continue_branch(
      double s_min, double s_max, double s_step,
      const std::function<void(const BranchPoint1D&)>& on_point = nullptr) const;

  // Lowest eigenpairs of the linearization at bp for angular index ell.
  std::vector<RadialMode> mode_eigs(const BranchPoint1D& bp, int ell,
                                    int count) const;
  // Same, on explicit data (grid, field, coefficient samples, lambda).
  static std::vector<RadialMode> mode_eigs_on(const RadialGrid& g,
                                              const std::vector<double>& v,
                                              const std::vector<double>& Vr,
                                              double lambda, int ell, int count);
  // Merged spectrum across ell = 0..ell_max (labels + multiplicity),
  // truncated to the total smallest. Extrapolates each mu over a coarsened
  // grid pair. Stores the result in bp.modes.
  void assemble_spectrum(BranchPoint1D& bp, int ell_max, int total) const;

  // Discrete H¹₀ inner product aᵀ (K + ℓ² C) b of two radial fields for
  // angular index ell, with the same matrices the mode pencil uses.
  static double h10_product(const RadialGrid& g, int ell,
                            const std::vector<double>& a,
                            const std::vector<double>& b);

 private:
  struct Discretization;
  BranchPoint1D solve_on_grid(const RadialGrid& g, double s,
                              const std::vector<double>* init_v,
                              double init_lambda, int* iters) const;
  double V_at(double r) const;

  VExpr V_;
  Solver1DOpts opts_;
};

// Radial linear interpolation helper.
double interp_radial(const RadialGrid& g, const std::vector<double>& f, double r);

}  // namespace glab
