#pragma once
// Small shared numerical kernels: 2D points, tridiagonal solves, symmetric
// tridiagonal eigenpairs, adaptive quadrature, least-squares line fits.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace glab {

struct Pt {
  double x = 0.0;
  double y = 0.0;
};

inline Pt operator+(Pt a, Pt b) { return {a.x + b.x, a.y + b.y}; }
inline Pt operator-(Pt a, Pt b) { return {a.x - b.x, a.y - b.y}; }
inline Pt operator*(double c, Pt a) { return {c * a.x, c * a.y}; }
double norm(Pt a);
double dist(Pt a, Pt b);
double dot(Pt a, Pt b);

// Thrown when an iteration fails to converge or a solve breaks down.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a file cannot be read or written.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tridiagonal system a[i] x[i-1] + b[i] x[i] + c[i] x[i+1] = r[i].
// LU with partial pivoting (fill bandwidth 2); safe for indefinite matrices.
std::vector<double> solve_tridiag(std::vector<double> a, std::vector<double> b,
                                  std::vector<double> c, std::vector<double> r);

// Symmetric tridiagonal pencil T x = mu x with T given by diagonal d and
// off-diagonal e (e[i] couples i and i+1). Returns the k smallest eigenvalues
// (ascending) by Sturm-sequence bisection; eigenvectors by inverse iteration.
struct TridiagEigs {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;  // vectors[j] has size n, 2-norm 1
};
TridiagEigs tridiag_smallest(const std::vector<double>& d,
                             const std::vector<double>& e, int k,
                             bool want_vectors = true);

// Count of eigenvalues of the symmetric tridiagonal (d, e) strictly below t.
int tridiag_count_below(const std::vector<double>& d,
                        const std::vector<double>& e, double t);

// Generalized pencil T x = mu M x with T tridiagonal (d, e) and M = diag(m),
// m > 0. Returns the k smallest eigenvalues with M-normalized eigenvectors.
// Bisection runs on the pivot count of T - t M directly, so eigenvalues tiny
// against the congruenced norm (badly graded m) are still located reliably.
int pencil_count_below(const std::vector<double>& d, const std::vector<double>& e,
                       const std::vector<double>& m, double t);
TridiagEigs pencil_smallest(const std::vector<double>& d,
                            const std::vector<double>& e,
                            const std::vector<double>& m, int k);

// Adaptive Simpson on [a, b] to absolute tolerance tol.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol, int max_depth = 40);

// Least-squares fit y = slope * x + intercept.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms = 0.0;  // RMS residual
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// FNV-1a, used to stamp configurations into report rows.
std::uint64_t fnv1a(const std::string& s);

// Richardson extrapolation from three values on nested grids (h, h/2, h/4)
// with the observed order estimated from the value differences. Falls back to
// the theoretical order when the estimate is unusable.
struct Extrapolated {
  double value = 0.0;
  double observed_order = 0.0;
};
Extrapolated extrapolate3(double vh, double vh2, double vh4,
                          double fallback_order = 2.0);

}  // namespace glab
