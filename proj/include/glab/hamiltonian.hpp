#pragma once
// The m-point interaction functional and the derived peak-system data:
//
//   H(x_1..x_m) = 1/2 Σ_j R(x_j) + Σ_{i<j} G(x_i, x_j) + (1/8π) Σ_j log V(x_j)
//
// plus the m×m interaction matrix
//
//   h_jj = R(x_j) + 2 Σ_{i≠j} G(x_j, x_i) + (1/4π) log V(x_j)
//   h_ij = -G(x_i, x_j)                                  (i ≠ j),
//
// its spectrum (Λ^1 ≤ … ≤ Λ^m with orthonormal eigenvectors), the scaling
// constants d_j, and the eigenvalues η of D · Hess H · D with
// D = diag(d_1, d_1, …, d_m, d_m). Eigenvalue predictions for the linearized
// problem are derived from these quantities.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "glab/green.hpp"
#include "glab/vexpr.hpp"

namespace glab {

struct PeakSystem {
  std::vector<Pt> points;
  double H = 0.0;
  Eigen::VectorXd grad;    // size 2m, finite-difference gradient of H
  Eigen::MatrixXd hess;    // 2m x 2m, symmetrized finite-difference Hessian
  Eigen::MatrixXd h;       // m x m interaction matrix
  Eigen::VectorXd Lambda;  // eigenvalues of h, ascending
  Eigen::MatrixXd C;       // orthonormal eigenvectors of h (columns),
                           // sign fixed so the largest-|entry| is positive
  std::vector<double> d;   // scaling constants d_j
  Eigen::VectorXd eta;     // eigenvalues of D Hess D, ascending (size 2m)
  bool degenerate_hess = false;   // Hess H has an eigenvalue below 1e-12
  bool first_vec_single_signed = true;  // C col 0: all entries same sign, nonzero
  bool no_single_peak_vec = true;       // m>=2: no eigvec supported on one peak
};

double eval_H(const GreenOracle& oracle, const VExpr& V,
              const std::vector<Pt>& pts);
Eigen::VectorXd grad_H(const GreenOracle& oracle, const VExpr& V,
                       const std::vector<Pt>& pts, double step);
Eigen::MatrixXd hess_H(const GreenOracle& oracle, const VExpr& V,
                       const std::vector<Pt>& pts, double step);

struct CriticalOpts {
  double tol = 1e-8;          // on the gradient infinity norm
  int max_iter = 200;
  double margin_frac = 0.05;  // of the domain diameter; boundary and pairwise
  double fd_step_frac = 1e-4; // of the domain diameter
  int multistart = 0;         // jittered restarts when the base start fails
  unsigned seed = 20260816;
};

// Damped Newton on the finite-difference gradient; falls back to descent on
// |grad|^2 with backtracking when the Newton step is unusable. Throws
// NumericError when the iteration escapes the margins or stalls.
std::vector<Pt> find_critical(const GreenOracle& oracle, const VExpr& V,
                              std::vector<Pt> start,
                              const CriticalOpts& opts = {});

std::vector<double> d_constants(const GreenOracle& oracle, const VExpr& V,
                                const std::vector<Pt>& pts);

// Full peak-system assembly at the given points (critical or configured).
PeakSystem assemble_system(const GreenOracle& oracle, const VExpr& V,
                           const std::vector<Pt>& pts,
                           double fd_step_frac = 1e-4);

// Low band (n <= m): two-term expansions of the n-th eigenvalue in log λ.
struct LowPrediction {
  double first = 0.0;    //  -1 / (2 log λ)
  double second = 0.0;   //  first + (2π Λ - (3 log 2 - 1)/2) / (log λ)^2
  double inverse = 0.0;  //  1 / (-2 log λ - 8π Λ + 2 (3 log 2 - 1))
};
LowPrediction predict_low(double lambda, double Lambda_n);

// Middle band (m+1 <= n <= 3m, 1-based): 1 - 48π η^{2m-(n-m)+1} λ.
double predict_mid(double lambda, const PeakSystem& sys, int n);

std::string peaksystem_json(const PeakSystem& sys);

}  // namespace glab
