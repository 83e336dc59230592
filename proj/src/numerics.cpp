#include "glab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace glab {

double norm(Pt a) { return std::hypot(a.x, a.y); }
double dist(Pt a, Pt b) { return std::hypot(a.x - b.x, a.y - b.y); }
double dot(Pt a, Pt b) { return a.x * b.x + a.y * b.y; }

std::vector<double> solve_tridiag(std::vector<double> a, std::vector<double> b,
                                  std::vector<double> c, std::vector<double> r) {
  const int n = static_cast<int>(b.size());
  if (n == 0) return {};
  // Partial pivoting introduces a second superdiagonal.
  std::vector<double> d(n, 0.0);  // second superdiagonal after elimination
  for (int i = 0; i < n - 1; ++i) {
    double sub = a[i + 1];
    if (std::abs(sub) > std::abs(b[i])) {
      std::swap(b[i], sub);                 // pivot rows i, i+1
      std::swap(c[i], b[i + 1]);            // b[i+1] held in sub's row
      std::swap(d[i], c[i + 1]);
      std::swap(r[i], r[i + 1]);
    }
    if (b[i] == 0.0) throw NumericError("tridiagonal solve: zero pivot");
    const double m = sub / b[i];
    b[i + 1] -= m * c[i];
    c[i + 1] -= m * d[i];
    r[i + 1] -= m * r[i];
  }
  if (b[n - 1] == 0.0) throw NumericError("tridiagonal solve: zero pivot");
  std::vector<double> x(n);
  x[n - 1] = r[n - 1] / b[n - 1];
  if (n >= 2) x[n - 2] = (r[n - 2] - c[n - 2] * x[n - 1]) / b[n - 2];
  for (int i = n - 3; i >= 0; --i)
    x[i] = (r[i] - c[i] * x[i + 1] - d[i] * x[i + 2]) / b[i];
  return x;
}

int tridiag_count_below(const std::vector<double>& d,
                        const std::vector<double>& e, double t) {
  // Sturm sequence via LDL^T pivots; standard safeguarded recurrence.
  const int n = static_cast<int>(d.size());
  int count = 0;
  double q = 1.0;
  const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
  for (int i = 0; i < n; ++i) {
    const double off = (i == 0) ? 0.0 : e[i - 1];
    q = (d[i] - t) - off * off / q;
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++count;
  }
  return count;
}

int pencil_count_below(const std::vector<double>& d, const std::vector<double>& e,
                       const std::vector<double>& m, double t) {
  // Pivot signs of T - t M. Each pivot mixes only locally scaled quantities,
  // so the count stays reliable for eigenvalues far below ||M^{-1/2} T
  // M^{-1/2}|| where a congruenced Sturm count loses them to rounding.
  const int n = static_cast<int>(d.size());
  int count = 0;
  double q = 1.0;
  const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
  for (int i = 0; i < n; ++i) {
    const double off = (i == 0) ? 0.0 : e[i - 1];
    q = (d[i] - t * m[i]) - off * off / q;
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++count;
  }
  return count;
}

namespace {

// Gershgorin bounds for the symmetric tridiagonal (d, e).
std::pair<double, double> gershgorin(const std::vector<double>& d,
                                     const std::vector<double>& e) {
  const int n = static_cast<int>(d.size());
  double lo = std::numeric_limits<double>::max();
  double hi = std::numeric_limits<double>::lowest();
  for (int i = 0; i < n; ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(e[i - 1]);
    if (i + 1 < n) r += std::abs(e[i]);
    lo = std::min(lo, d[i] - r);
    hi = std::max(hi, d[i] + r);
  }
  return {lo, hi};
}

std::vector<double> inverse_iteration(const std::vector<double>& d,
                                      const std::vector<double>& e,
                                      double mu) {
  const int n = static_cast<int>(d.size());
  std::vector<double> x(n);
  // Deterministic quasi-random start; avoids symmetry-aligned stagnation.
  std::uint64_t state = 0x9e3779b97f4a7c15ull;
  for (int i = 0; i < n; ++i) {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    x[i] = (static_cast<double>(state >> 11) / 9007199254740992.0) - 0.5;
  }
  std::vector<double> a(n, 0.0), b(n), c(n, 0.0);
  for (int i = 0; i < n; ++i) {
    b[i] = d[i] - mu;
    if (i > 0) a[i] = e[i - 1];
    if (i + 1 < n) c[i] = e[i];
  }
  double nrm = 0.0;
  for (int it = 0; it < 8; ++it) {
    std::vector<double> y;
    try {
      y = solve_tridiag(a, b, c, x);
    } catch (const NumericError&) {
      // Exact singularity: nudge the shift by one ulp-scale step.
      for (int i = 0; i < n; ++i) b[i] += 1e-14 * (1.0 + std::abs(mu));
      continue;
    }
    nrm = 0.0;
    for (double v : y) nrm += v * v;
    nrm = std::sqrt(nrm);
    for (int i = 0; i < n; ++i) x[i] = y[i] / nrm;
    if (nrm > 1e12) break;  // converged: solution blew up along the eigvector
  }
  return x;
}

}  // namespace

TridiagEigs tridiag_smallest(const std::vector<double>& d,
                             const std::vector<double>& e, int k,
                             bool want_vectors) {
  const int n = static_cast<int>(d.size());
  k = std::min(k, n);
  TridiagEigs out;
  if (k <= 0) return out;
  auto [lo, hi] = gershgorin(d, e);
  const double span = std::max(hi - lo, 1e-300);
  const double tol = 1e-14 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  for (int j = 1; j <= k; ++j) {
    double a = lo - 1e-3 * span, b = hi + 1e-3 * span;
    // Bisect for the j-th smallest eigenvalue.
    while (b - a > tol) {
      const double m = 0.5 * (a + b);
      if (m <= a || m >= b) break;
      if (tridiag_count_below(d, e, m) >= j)
        b = m;
      else
        a = m;
    }
    out.values.push_back(0.5 * (a + b));
  }
  if (want_vectors) {
    for (int j = 0; j < k; ++j) {
      double mu = out.values[j];
      // Separate the shift from a degenerate twin so inverse iteration picks
      // a consistent representative. The nudge must stay inside the cluster:
      // scaling it with the bisection tol (matrix-norm based) can hop entire
      // spectral gaps when the matrix norm dwarfs the eigenvalues.
      const double twin = 1e-8 * std::max(1.0, std::abs(mu));
      double shift = mu;
      if (j > 0 && std::abs(out.values[j] - out.values[j - 1]) < twin)
        shift = mu + 4 * twin;
      auto v = inverse_iteration(d, e, shift);
      // Orthogonalize within near-degenerate clusters.
      for (int p = 0; p < j; ++p) {
        if (std::abs(out.values[p] - mu) < 1e-9 * std::max(1.0, std::abs(mu))) {
          double s = 0.0;
          for (int i = 0; i < n; ++i) s += v[i] * out.vectors[p][i];
          for (int i = 0; i < n; ++i) v[i] -= s * out.vectors[p][i];
        }
      }
      double nrm = 0.0;
      for (double t : v) nrm += t * t;
      nrm = std::sqrt(nrm);
      if (nrm > 0) for (double& t : v) t /= nrm;
      out.vectors.push_back(std::move(v));
    }
  }
  return out;
}

TridiagEigs pencil_smallest(const std::vector<double>& d,
                            const std::vector<double>& e,
                            const std::vector<double>& m, int k) {
  const int n = static_cast<int>(d.size());
  k = std::min(k, n);
  TridiagEigs out;
  if (k <= 0) return out;

  // Bracket by doubling, then bisect each eigenvalue to relative precision.
  double lo = -1.0, hi = 1.0;
  while (pencil_count_below(d, e, m, lo) > 0) lo *= 2.0;
  while (pencil_count_below(d, e, m, hi) < k) hi *= 2.0;
  for (int j = 1; j <= k; ++j) {
    double a = lo, b = hi;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      if (pencil_count_below(d, e, m, mid) >= j)
        b = mid;
      else
        a = mid;
      if (b - a <= 1e-13 * std::max(1.0, std::abs(mid))) break;
    }
    out.values.push_back(0.5 * (a + b));
  }

  // Inverse iteration with the shifted generalized solve; the shift is
  // already eigenvalue-accurate, so a couple of sweeps align the vector.
  // The Rayleigh update uses (T - sigma M) y = M x  =>  rq = sigma +
  // y^T M x / y^T M y, which avoids assembling the energy with cancellation.
  const double ctol = 1e-8;
  for (int j = 0; j < k; ++j) {
    double sigma = out.values[j];
    if (j > 0 && std::abs(out.values[j] - out.values[j - 1]) <
                     ctol * std::max(1.0, std::abs(sigma)))
      sigma += 4 * ctol * std::max(1.0, std::abs(sigma));
    std::vector<double> x(static_cast<std::size_t>(n));
    std::uint64_t state = 0x9e3779b97f4a7c15ull ^ static_cast<std::uint64_t>(j);
    for (int i = 0; i < n; ++i) {
      state = state * 6364136223846793005ull + 1442695040888963407ull;
      x[static_cast<std::size_t>(i)] =
          (static_cast<double>(state >> 11) / 9007199254740992.0) - 0.5;
    }
    double mu = sigma;
    for (int sweep = 0; sweep < 6; ++sweep) {
      std::vector<double> a(static_cast<std::size_t>(n), 0.0),
          b(static_cast<std::size_t>(n)), c(static_cast<std::size_t>(n), 0.0),
          rhs(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        const std::size_t u = static_cast<std::size_t>(i);
        b[u] = d[u] - sigma * m[u];
        rhs[u] = m[u] * x[u];
        if (i > 0) a[u] = e[u - 1];
        if (i + 1 < n) c[u] = e[u];
      }
      std::vector<double> y;
      try {
        y = solve_tridiag(a, b, c, rhs);
      } catch (const NumericError&) {
        sigma += 1e-12 * (1.0 + std::abs(sigma));  // exactly singular: nudge
        continue;
      }
      // Deflate against converged near-equal pairs (M-inner product).
      for (int p = 0; p < j; ++p) {
        if (std::abs(out.values[static_cast<std::size_t>(p)] - out.values[static_cast<std::size_t>(j)]) >=
            ctol * std::max(1.0, std::abs(sigma)))
          continue;
        double dot = 0.0;
        for (int i = 0; i < n; ++i)
          dot += m[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)] *
                 out.vectors[static_cast<std::size_t>(p)][static_cast<std::size_t>(i)];
        for (int i = 0; i < n; ++i)
          y[static_cast<std::size_t>(i)] -=
              dot * out.vectors[static_cast<std::size_t>(p)][static_cast<std::size_t>(i)];
      }
      double ymy = 0.0, ymx = 0.0;
      for (int i = 0; i < n; ++i) {
        const std::size_t u = static_cast<std::size_t>(i);
        ymy += m[u] * y[u] * y[u];
        ymx += m[u] * y[u] * x[u];
      }
      if (!(ymy > 0.0) || !std::isfinite(ymy)) break;
      const double mu_next = sigma + ymx / ymy;
      const double nrm = std::sqrt(ymy);
      for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] / nrm;
      const bool settled =
          sweep > 0 && std::isfinite(mu_next) &&
          std::abs(mu_next - mu) <= 1e-13 * std::max(1.0, std::abs(mu_next));
      if (std::isfinite(mu_next)) mu = mu_next;
      if (settled) break;
    }
    out.values[static_cast<std::size_t>(j)] = mu;
    out.vectors.push_back(std::move(x));
  }
  return out;
}

namespace {

double simpson(const std::function<double(double)>& f, double a, double fa,
               double b, double fb, double fm, double whole, double tol,
               int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol, int max_depth) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, fa, b, fb, fm, whole, tol, max_depth);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  if (n < 2 || y.size() != x.size())
    throw NumericError("fit_line: need at least two samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-300) throw NumericError("fit_line: degenerate abscissae");
  LineFit out;
  out.slope = (n * sxy - sx * sy) / det;
  out.intercept = (sy - out.slope * sx) / n;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = y[i] - (out.slope * x[i] + out.intercept);
    ss += r * r;
  }
  out.rms = std::sqrt(ss / n);
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Extrapolated extrapolate3(double vh, double vh2, double vh4,
                          double fallback_order) {
  Extrapolated out;
  const double d1 = vh2 - vh;
  const double d2 = vh4 - vh2;
  double p = fallback_order;
  if (d2 != 0.0 && d1 / d2 > 1.0) p = std::log2(d1 / d2);
  if (!std::isfinite(p) || p < 0.5 || p > 8.0) p = fallback_order;
  out.observed_order = p;
  const double f = std::pow(2.0, p);
  out.value = vh4 + d2 / (f - 1.0);
  return out;
}

}  // namespace glab
