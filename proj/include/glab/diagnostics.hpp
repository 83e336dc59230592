#pragma once
// Identity and expansion checks over a solved branch point. Every check is a
// residual: measured quantity minus the closed-form or limit prediction. The
// scalar formula layer takes plain numbers so it can be tested against frozen
// values; the row builders extract those numbers from 1D/2D branch points.
//
// Conventions. Peaks are indexed j = 0..m-1, eigenpairs n = 1.. (1-based,
// counting multiplicity). c-vectors come in two flavors, reported side by
// side: the prediction from the interaction-matrix eigenvector (rescaled so
// its largest-magnitude entry is +1) and the measured peak values of the
// eigenfield. Residual fields that do not apply hold NaN and are skipped by
// the emitters.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "glab/green.hpp"
#include "glab/hamiltonian.hpp"
#include "glab/solver1d.hpp"
#include "glab/solver2d.hpp"

namespace glab {

// Limiting single-bubble profile U(t) = -2 log(1 + t^2/8) at radius t.
double bubble_U(double t);

struct BubbleConstants {
  double I0 = 0.0;  // ∫ e^U           ( = 8π )
  double I1 = 0.0;  // ∫ e^U U         ( = -16π )
  double I2 = 0.0;  // (1/2π) ∫ e^U log|y|^-1   ( = -6 log 2 )
};
// Adaptive quadrature of the bubble integrals (tail mapped by r -> 1/t).
BubbleConstants bubble_integrals(double tol = 1e-10);

// ---- scalar formula layer ----

// Peak-height law with measured ball mass sigma:
//   v_pk ~ -sigma/(sigma-4π) (log λ + log V) + 6 log 2 - 8π (R_pk + sumG).
double peak_height_prediction(double lambda, double sigma, double logV,
                              double R_pk, double sumG);
// Scaling-constant form: v_pk ~ -2 log λ - 2 log d_j - log V.
double peak_height_prediction_d(double lambda, double d_j, double logV);

struct MuResiduals {
  double first = 0.0;    // mu - [ -1/(2 log λ) ]
  double second = 0.0;   // mu - [ first + (2πΛ - (3 log 2 - 1)/2)/(log λ)² ]
  double inverse = 0.0;  // 1/mu - [ -2 log λ - 8πΛ + 2(3 log 2 - 1) ]
};
MuResiduals mu_residuals(double mu, double lambda, double Lambda_n);

// Interaction identity for the eigenvalue deficit. LHS uses the measured
// ball integral q_j = ∫_{B_R} λ V e^v w; Gm(j,i) holds G(x_j, x_i).
//   (1/mu - v_pk) q_j  ~  64π² Σ_{i≠j} (c_i - c_j) Gm(j,i) - 16π c_j.
double lemma31_rhs(const std::vector<double>& c, int j,
                   const Eigen::MatrixXd& Gm);

// Peak-value law for the eigenfield, with the measured integral q_j:
//   w_pk/mu ~ (log λ + log V + v_pk) q_j/(4π) - 6 c_j log 2
//             + 8π (c_j R_pk + Σ_{i≠j} c_i Gm(j,i)).
double lemma41_rhs(double lambda, double logV, double v_pk, double q_j,
                   const std::vector<double>& c, int j, double R_pk,
                   const Eigen::MatrixXd& Gm);

// Centered ball integral: t43 = ∫_{B_R} λ V e^v (w - w_pk)/mu  ~  -16π c_j.
double lemma43_residual(double t43, double c_j);

// ---- per-point rows ----

struct PeakDiag {
  int j = 0;
  Pt x;
  double v_pk = 0.0;
  double sigma = 0.0;      // ball mass, extrapolated when a coarse level exists
  double delta = 0.0;      // bubble scale 1/sqrt(λ V e^{v_pk})
  double pohozaev = 0.0;   // |volume decomposition - boundary flux|
  double height_res_sigma = 0.0;  // v_pk - prediction with measured sigma
  double height_res_d = 0.0;      // v_pk - prediction with d_j
  std::vector<double> sens_radii;  // sensitivity radii actually admissible
  std::vector<double> sigma_sens;  // ball mass at each
};

struct EigDiag {
  int n = 0;     // 1-based, counting multiplicity
  int ell = -1;  // angular label (1D), -1 in 2D
  double mu = 0.0;
  double mu_ext = 0.0;   // extrapolated when available, else mu
  // Low band (n <= m); NaN otherwise.
  double r_first, r_second, r_inverse;
  double profile_err;       // sup over the bubble window, per peak worst case
  double farfield_c;   // tail amplitude of w/mu over q G(·, x_pk): 1 when the
                       // far field is the Green tail of the ball charge (1D)
  double farfield_rms;
  double q_over_8pic;       // ∫ λVe^v w / (8π c_hat), anchor peak
  double mid_res;           // mid band (m < n <= 3m); NaN otherwise
  std::vector<double> c_hat;    // eigenfield values at the peaks
  std::vector<double> c_tilde;  // far-field least-squares coefficients (2D)
  std::vector<double> c_pred;   // interaction-matrix eigenvector, max entry +1
  // Interaction residuals per peak, with predicted and measured c.
  std::vector<double> l31_pred, l31_meas;
  std::vector<double> l41_pred, l41_meas;
  std::vector<double> l43_pred, l43_meas;

  EigDiag();
};

struct DiagnosticsRow {
  double lambda = 0.0;
  double s = 0.0;
  double Sigma = 0.0;
  double ball_R = 0.0;
  std::uint64_t config_hash = 0;
  std::vector<PeakDiag> peaks;
  std::vector<EigDiag> eigs;

  std::string to_json() const;
  // Flat CSV, one line per eigenpair (or a single line when no eigenpairs),
  // peak columns suffixed _1.._m. NaN fields emit empty cells.
  static std::string csv_header(int m);
  std::string csv_line() const;
};

struct RowOpts {
  double ball_R = 0.4;
  std::vector<double> sens_radii = {0.2, 0.3, 0.4};
  double window = 4.0;     // bubble window for the profile check
  double ff_lo = 0.35;     // far-field fit annulus (1D), radii in domain units
  double ff_hi = 0.85;
  std::uint64_t config_hash = 0;
};

// Row from a radial branch point. Uses bp.modes (fill via assemble_spectrum
// first); eigen diagnostics for the low band run on ell = 0 modes.
DiagnosticsRow build_row_1d(const BranchPoint1D& bp, const PeakSystem& sys,
                            const GreenOracle& oracle, const VExpr& V,
                            const RowOpts& opts);

// Row from a 2D branch point (eigenpairs from eig2d, if present).
DiagnosticsRow build_row_2d(const BranchPoint2D& bp, const PeakSystem& sys,
                            const GreenOracle& oracle, const Solver2D& solver,
                            const RowOpts& opts);

// Concentration flags per Theorem-style structure checks.
struct ConcentrationReport {
  // peaks_hit[n-1] lists peak indices with |c_hat| >= threshold.
  std::vector<std::vector<int>> peaks_hit;
  bool first_hits_all = false;   // n=1 concentrates at every peak
  bool low_band_two_plus = false;  // m>=2: every n<=m hits >= 2 peaks
  bool matrix_no_single = false;   // no interaction eigenvector is 1-sparse
};
ConcentrationReport concentration_report(
    const std::vector<std::vector<double>>& c_hat_low, const PeakSystem& sys,
    double threshold = 0.1);

}  // namespace glab
