#include "glab/solver1d.hpp"

#include <algorithm>
#include <cmath>

namespace glab {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

RadialGrid RadialGrid::graded(double delta, double q, double h_max, int n_inner) {
  if (!(delta > 0.0)) throw std::invalid_argument("grid: delta must be positive");
  if (q < 1.0 || q > 1.15) throw std::invalid_argument("grid: q must lie in [1, 1.15]");
  RadialGrid g;
  double h = std::min(delta / n_inner, h_max);
  h = std::max(h, 1e-9);
  double r = 0.0;
  g.r.push_back(0.0);
  while (r < 1.0) {
    r += h;
    g.r.push_back(r);
    h = std::min(h * q, h_max);
  }
  // Rescale so the last node is exactly 1.
  const double scale = 1.0 / g.r.back();
  for (double& x : g.r) x *= scale;
  g.r.back() = 1.0;
  return g;
}

RadialGrid RadialGrid::refined() const {
  RadialGrid g;
  g.r.reserve(r.size() * 2 - 1);
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    g.r.push_back(r[i]);
    g.r.push_back(0.5 * (r[i] + r[i + 1]));
  }
  g.r.push_back(r.back());
  return g;
}

double interp_radial(const RadialGrid& g, const std::vector<double>& f, double r) {
  if (r <= 0.0) return f.front();
  if (r >= 1.0) return f.back();
  const auto it = std::upper_bound(g.r.begin(), g.r.end(), r);
  const std::size_t i = static_cast<std::size_t>(it - g.r.begin()) - 1;
  const double t = (r - g.r[i]) / (g.r[i + 1] - g.r[i]);
  return (1.0 - t) * f[i] + t * f[i + 1];
}

double ExactBranch::lambda() const {
  const double d2 = delta_cl * delta_cl;
  return 8.0 * d2 / ((1.0 + d2) * (1.0 + d2));
}
double ExactBranch::v0() const {
  return 2.0 * std::log1p(delta_cl * delta_cl);
}
double ExactBranch::v(double r) const {
  const double d2 = delta_cl * delta_cl;
  return 2.0 * std::log((1.0 + d2) / (1.0 + d2 * r * r));
}
double ExactBranch::Sigma() const {
  const double d2 = delta_cl * delta_cl;
  return 8.0 * 0.5 * kTwoPi * d2 / (1.0 + d2);
}
double ExactBranch::sigma(double R) const {
  const double d2 = delta_cl * delta_cl;
  return 8.0 * 0.5 * kTwoPi * d2 * R * R / (1.0 + d2 * R * R);
}
double ExactBranch::delta_jk() const {
  return 1.0 / (std::sqrt(8.0) * delta_cl);
}

BranchPoint1D ExactBranch::sample(int refine_levels) const {
  BranchPoint1D bp;
  bp.grid = RadialGrid::graded(std::min(delta_jk(), 0.5));
  for (int l = 0; l < refine_levels; ++l) bp.grid = bp.grid.refined();
  bp.lambda = lambda();
  bp.lambda_raw = bp.lambda;
  bp.s = v0();
  bp.delta = delta_jk();
  bp.Sigma = Sigma();
  bp.v.resize(bp.grid.r.size());
  bp.Vr.assign(bp.grid.r.size(), 1.0);
  for (std::size_t i = 0; i < bp.grid.r.size(); ++i) bp.v[i] = v(bp.grid.r[i]);
  return bp;
}

// P1 arrays on a radial grid: lumped mass m_i = ∫ φ_i r dr, stiffness
// couplings o_i = -(r_i + r_{i+1}) / (2 h_i), and the lumped 1/r weight
// c_i = ∫ φ_i / r dr used by the angular term.
struct RadialSolver::Discretization {
  std::vector<double> m, diag, off, c, Vr;

  Discretization(const RadialGrid& g, std::vector<double> V_nodes)
      : Vr(std::move(V_nodes)) {
    const int N = g.N();
    m.assign(N + 1, 0.0);
    diag.assign(N + 1, 0.0);
    off.assign(N, 0.0);
    c.assign(N + 1, 0.0);
    for (int e = 0; e < N; ++e) {
      const double a = g.r[static_cast<std::size_t>(e)];
      const double b = g.r[static_cast<std::size_t>(e) + 1];
      const double h = b - a;
      const double k = 0.5 * (a + b) / h;
      off[static_cast<std::size_t>(e)] = -k;
      diag[static_cast<std::size_t>(e)] += k;
      diag[static_cast<std::size_t>(e) + 1] += k;
      m[static_cast<std::size_t>(e)] += h * (2.0 * a + b) / 6.0;
      m[static_cast<std::size_t>(e) + 1] += h * (2.0 * b + a) / 6.0;
      // ∫ φ / r over the element for the descending and ascending hats.
      if (a == 0.0) {
        c[static_cast<std::size_t>(e) + 1] += 1.0;
        // The descending hat at r = 0 belongs to the center node, which the
        // angular modes exclude; its 1/r integral diverges and is unused.
        c[0] = 0.0;
      } else {
        const double lg = std::log(b / a);
        c[static_cast<std::size_t>(e)] += b / h * lg - 1.0;
        c[static_cast<std::size_t>(e) + 1] += 1.0 - a / h * lg;
      }
    }
  }

  // (K v)_i over all rows, v given on all nodes.
  std::vector<double> apply_K(const std::vector<double>& v) const {
    const int N = static_cast<int>(v.size()) - 1;
    std::vector<double> out(static_cast<std::size_t>(N) + 1, 0.0);
    for (int i = 0; i <= N; ++i) {
      double s = diag[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
      if (i > 0) s += off[static_cast<std::size_t>(i) - 1] * v[static_cast<std::size_t>(i) - 1];
      if (i < N) s += off[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i) + 1];
      out[static_cast<std::size_t>(i)] = s;
    }
    return out;
  }
};

RadialSolver::RadialSolver(VExpr V, Solver1DOpts opts)
    : V_(std::move(V)), opts_(opts) {
  // The radial solver requires a radially symmetric coefficient.
  for (double r : {0.31, 0.77}) {
    const double ref = V_.eval({r, 0.0});
    const double scale = std::max(1.0, std::abs(ref));
    for (Pt p : {Pt{0.0, r}, Pt{-r, 0.0},
                 Pt{r * 0.70710678118654752, r * 0.70710678118654752}}) {
      if (std::abs(V_.eval(p) - ref) > 1e-10 * scale)
        throw std::invalid_argument("solver1d: V is not radially symmetric");
    }
  }
}

double RadialSolver::V_at(double r) const { return V_.eval({r, 0.0}); }

BranchPoint1D RadialSolver::solve_on_grid(const RadialGrid& g, double s,
                                          const std::vector<double>* init_v,
                                          double init_lambda, int* iters) const {
  const int N = g.N();
  std::vector<double> Vn(g.r.size());
  for (std::size_t i = 0; i < g.r.size(); ++i) Vn[i] = V_at(g.r[i]);
  const Discretization dz(g, std::move(Vn));

  std::vector<double> v(static_cast<std::size_t>(N) + 1, 0.0);
  double lambda = init_lambda;
  if (init_v) {
    v = *init_v;
  } else {
    // Cold start: scale the solution of the linear problem -Δu = V.
    std::vector<double> a(static_cast<std::size_t>(N), 0.0),
        b(static_cast<std::size_t>(N), 0.0), c(static_cast<std::size_t>(N), 0.0),
        rhs(static_cast<std::size_t>(N), 0.0);
    for (int i = 0; i < N; ++i) {
      b[static_cast<std::size_t>(i)] = dz.diag[static_cast<std::size_t>(i)];
      if (i > 0) a[static_cast<std::size_t>(i)] = dz.off[static_cast<std::size_t>(i) - 1];
      if (i + 1 < N) c[static_cast<std::size_t>(i)] = dz.off[static_cast<std::size_t>(i)];
      rhs[static_cast<std::size_t>(i)] =
          dz.Vr[static_cast<std::size_t>(i)] * dz.m[static_cast<std::size_t>(i)];
    }
    const auto u = solve_tridiag(a, b, c, rhs);
    const double u0 = u[0];
    if (!(u0 > 0.0)) throw NumericError("solver1d: degenerate linear start");
    for (int i = 0; i < N; ++i) v[static_cast<std::size_t>(i)] = s * u[static_cast<std::size_t>(i)] / u0;
    if (!(lambda > 0.0)) lambda = s / (u0 * std::exp(0.5 * s));
  }
  v[0] = s;
  v[static_cast<std::size_t>(N)] = 0.0;

  auto residual = [&](const std::vector<double>& vv, double ll,
                      std::vector<double>& F) {
    const auto Kv = dz.apply_K(vv);
    F.resize(static_cast<std::size_t>(N));
    // Raw ∞-norm. A source-relative norm is not reachable here: near the
    // boundary the source term falls under the rounding floor of the
    // stiffness sum once λ is small.
    double worst = 0.0;
    for (int i = 0; i < N; ++i) {
      const double src = ll * dz.Vr[static_cast<std::size_t>(i)] *
                         std::exp(vv[static_cast<std::size_t>(i)]) *
                         dz.m[static_cast<std::size_t>(i)];
      F[static_cast<std::size_t>(i)] = Kv[static_cast<std::size_t>(i)] - src;
      worst = std::max(worst, std::abs(F[static_cast<std::size_t>(i)]));
    }
    return worst;
  };

  std::vector<double> F;
  double res = residual(v, lambda, F);
  int it = 0;
  for (; it < opts_.max_newton && res > opts_.newton_tol; ++it) {
    // Bordered Newton step: interior rows are tridiagonal in v_1..v_{N-1};
    // the center row pins v_0 = s and determines Δλ.
    const int M = N - 1;  // interior unknowns
    std::vector<double> a(static_cast<std::size_t>(M)), b(static_cast<std::size_t>(M)),
        cc(static_cast<std::size_t>(M)), Fi(static_cast<std::size_t>(M)),
        cl(static_cast<std::size_t>(M));
    for (int i = 1; i <= M; ++i) {
      const std::size_t k = static_cast<std::size_t>(i - 1);
      const double w = dz.Vr[static_cast<std::size_t>(i)] *
                       std::exp(v[static_cast<std::size_t>(i)]) *
                       dz.m[static_cast<std::size_t>(i)];
      b[k] = dz.diag[static_cast<std::size_t>(i)] - lambda * w;
      a[k] = (i > 1) ? dz.off[static_cast<std::size_t>(i) - 1] : 0.0;
      cc[k] = (i < M) ? dz.off[static_cast<std::size_t>(i)] : 0.0;
      Fi[k] = F[static_cast<std::size_t>(i)];
      cl[k] = -w;
    }
    const auto u = solve_tridiag(a, b, cc, Fi);   // T' u = F_int
    const auto w2 = solve_tridiag(a, b, cc, cl);  // T' w = ∂F/∂λ
    const double alpha = -dz.Vr[0] * std::exp(s) * dz.m[0];
    const double o0 = dz.off[0];
    const double denom = alpha - o0 * w2[0];
    if (denom == 0.0) throw NumericError("solver1d: singular bordered system");
    const double dlambda = (o0 * u[0] - F[0]) / denom;

    double t = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 30; ++bt, t *= 0.5) {
      const double lt = lambda + t * dlambda;
      if (!(lt > 0.0)) continue;
      std::vector<double> vt = v;
      for (int i = 1; i <= M; ++i)
        vt[static_cast<std::size_t>(i)] -=
            t * (u[static_cast<std::size_t>(i - 1)] +
                 dlambda * w2[static_cast<std::size_t>(i - 1)]);
      std::vector<double> Ft;
      const double rt = residual(vt, lt, Ft);
      if (rt < res || rt <= opts_.newton_tol) {
        v = std::move(vt);
        lambda = lt;
        F = std::move(Ft);
        res = rt;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw NumericError("solver1d: Newton stalled");
  }
  if (res > opts_.newton_tol)
    throw NumericError("solver1d: Newton did not reach tolerance");
  if (iters) *iters = it;

  BranchPoint1D bp;
  bp.grid = g;
  bp.v = std::move(v);
  bp.Vr = dz.Vr;
  bp.lambda = lambda;
  bp.lambda_raw = lambda;
  bp.s = s;
  bp.delta = 1.0 / std::sqrt(lambda * dz.Vr[0] * std::exp(s));
  double Sg = 0.0;
  for (int i = 0; i <= N; ++i)
    Sg += lambda * dz.Vr[static_cast<std::size_t>(i)] *
          std::exp(bp.v[static_cast<std::size_t>(i)]) * dz.m[static_cast<std::size_t>(i)];
  bp.Sigma = kTwoPi * Sg;
  return bp;
}

BranchPoint1D RadialSolver::solve_at(double s, const BranchPoint1D* prev) const {
  double lambda_pred = -1.0;
  double delta_est;
  std::vector<double> init;
  const BranchPoint1D* seed = prev;

  if (seed) {
    lambda_pred = seed->lambda * std::exp(-0.5 * (s - seed->s));
    delta_est = 1.0 / std::sqrt(lambda_pred * V_at(0.0) * std::exp(s));
  } else {
    // Cold sizing pass on a mild grid.
    const RadialGrid coarse = RadialGrid::graded(0.25, opts_.q, opts_.h_max, 8);
    int dummy = 0;
    const BranchPoint1D probe = solve_on_grid(coarse, s, nullptr, -1.0, &dummy);
    lambda_pred = probe.lambda;
    delta_est = probe.delta;
  }

  RadialGrid g = RadialGrid::graded(delta_est, opts_.q, opts_.h_max, opts_.n_inner);
  auto interp_onto = [&](const RadialGrid& gg, const BranchPoint1D& src,
                         double scale) {
    std::vector<double> out(gg.r.size());
    for (std::size_t i = 0; i < gg.r.size(); ++i)
      out[i] = scale * interp_radial(src.grid, src.v, gg.r[i]);
    return out;
  };

  int iters = 0;
  BranchPoint1D cur;
  if (seed) {
    init = interp_onto(g, *seed, s / seed->s);
    cur = solve_on_grid(g, s, &init, lambda_pred, &iters);
  } else {
    cur = solve_on_grid(g, s, nullptr, -1.0, &iters);
  }

  // Re-grid to the converged bubble scale and re-solve once.
  RadialGrid g0 = RadialGrid::graded(cur.delta, opts_.q, opts_.h_max, opts_.n_inner);
  init = interp_onto(g0, cur, 1.0);
  int dummy = 0;
  BranchPoint1D lev = solve_on_grid(g0, s, &init, cur.lambda, &dummy);

  std::vector<double> lambdas{lev.lambda};
  std::vector<double> Sigmas{lev.Sigma};
  std::vector<BranchPoint1D> levels{lev};
  for (int l = 1; l < std::max(1, opts_.extrap_levels); ++l) {
    const RadialGrid gr = levels.back().grid.refined();
    init = interp_onto(gr, levels.back(), 1.0);
    BranchPoint1D fine =
        solve_on_grid(gr, s, &init, levels.back().lambda, &dummy);
    lambdas.push_back(fine.lambda);
    Sigmas.push_back(fine.Sigma);
    levels.push_back(std::move(fine));
  }

  BranchPoint1D bp = std::move(levels.back());
  bp.newton_iters = iters;
  if (lambdas.size() >= 3) {
    const auto exl = extrapolate3(lambdas[lambdas.size() - 3],
                                  lambdas[lambdas.size() - 2], lambdas.back());
    bp.lambda = exl.value;
    bp.observed_order = exl.observed_order;
    bp.Sigma = extrapolate3(Sigmas[Sigmas.size() - 3], Sigmas[Sigmas.size() - 2],
                            Sigmas.back())
                   .value;
  }
  bp.delta = 1.0 / std::sqrt(bp.lambda * bp.Vr[0] * std::exp(s));
  levels.pop_back();
  if (!levels.empty()) {
    bp.coarse_v = std::move(levels.back().v);
    bp.coarse_grid = std::move(levels.back().grid);
    bp.coarse_Vr = std::move(levels.back().Vr);
    bp.coarse_lambda = levels.back().lambda_raw;
  }
  return bp;
}

std::vector<BranchPoint1D> RadialSolver::continue_branch(
    double s_min, double s_max, double s_step,
    const std::function<void(const BranchPoint1D&)>& on_point) const {
  if (!(s_step > 0.0) || !(s_min > 0.0) || s_max < s_min)
    throw std::invalid_argument("continue_branch: bad schedule");
  const int steps = static_cast<int>(std::floor((s_max - s_min) / s_step + 1e-9));
  std::vector<BranchPoint1D> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  const BranchPoint1D* prev = nullptr;
  for (int k = 0; k <= steps; ++k) {
    const double s = s_min + k * s_step;
    out.push_back(solve_at(s, prev));
    prev = &out.back();
    if (on_point) on_point(out.back());
  }
  return out;
}

std::vector<RadialMode> RadialSolver::mode_eigs(const BranchPoint1D& bp, int ell,
                                                int count) const {
  return mode_eigs_on(bp.grid, bp.v, bp.Vr, bp.lambda_raw, ell, count);
}

std::vector<RadialMode> RadialSolver::mode_eigs_on(
    const RadialGrid& g, const std::vector<double>& v,
    const std::vector<double>& Vr, double lambda, int ell, int count) {
  if (ell < 0) throw std::invalid_argument("mode_eigs: ell must be >= 0");
  const int N = g.N();
  const Discretization dz(g, Vr);
  // Unknowns: nodes 0..N-1 for ell = 0 (natural at the axis), 1..N-1 else.
  const int lo = (ell == 0) ? 0 : 1;
  const int n = N - lo;
  std::vector<double> Ms(static_cast<std::size_t>(n));
  std::vector<double> d(static_cast<std::size_t>(n)), e(static_cast<std::size_t>(n) - 1);
  for (int i = lo; i < N; ++i) {
    const std::size_t k = static_cast<std::size_t>(i - lo);
    Ms[k] = lambda * Vr[static_cast<std::size_t>(i)] *
            std::exp(v[static_cast<std::size_t>(i)]) * dz.m[static_cast<std::size_t>(i)];
    d[k] = dz.diag[static_cast<std::size_t>(i)] +
           static_cast<double>(ell) * ell * dz.c[static_cast<std::size_t>(i)];
  }
  for (int i = lo; i < N - 1; ++i)
    e[static_cast<std::size_t>(i - lo)] = dz.off[static_cast<std::size_t>(i)];
  // Solve the generalized pencil directly. A congruence by M^{-1/2} would
  // inflate the matrix norm to ~1/h_min^2 on the graded mesh and lose the
  // low band under the eps * norm bisection floor.
  const TridiagEigs te = pencil_smallest(d, e, Ms, count);

  std::vector<RadialMode> modes;
  for (std::size_t j = 0; j < te.values.size(); ++j) {
    RadialMode md;
    md.ell = ell;
    md.k = static_cast<int>(j);
    md.mu = te.values[j];
    md.mu_ext = md.mu;
    md.multiplicity = (ell == 0) ? 1 : 2;
    md.w.assign(g.r.size(), 0.0);
    double mx = 0.0;
    for (int i = lo; i < N; ++i) {
      const double wi = te.vectors[j][static_cast<std::size_t>(i - lo)];
      md.w[static_cast<std::size_t>(i)] = wi;
      if (std::abs(wi) > std::abs(mx)) mx = wi;
    }
    if (mx != 0.0)
      for (double& wv : md.w) wv /= mx;  // sup-norm 1, attained positively
    modes.push_back(std::move(md));
  }
  std::sort(modes.begin(), modes.end(),
            [](const RadialMode& a, const RadialMode& b) { return a.mu < b.mu; });
  for (std::size_t j = 0; j < modes.size(); ++j) modes[j].k = static_cast<int>(j);
  return modes;
}

double RadialSolver::h10_product(const RadialGrid& g, int ell,
                                 const std::vector<double>& a,
                                 const std::vector<double>& b) {
  if (ell < 0) throw std::invalid_argument("h10_product: ell must be >= 0");
  if (a.size() != g.r.size() || b.size() != g.r.size())
    throw std::invalid_argument("h10_product: field size mismatch");
  const Discretization dz(g, std::vector<double>(g.r.size(), 1.0));
  const int N = g.N();
  double acc = 0.0;
  for (int i = 0; i <= N; ++i)
    acc += (dz.diag[static_cast<std::size_t>(i)] +
            static_cast<double>(ell) * ell * dz.c[static_cast<std::size_t>(i)]) *
           a[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i)];
  for (int e = 0; e < N; ++e)
    acc += dz.off[static_cast<std::size_t>(e)] *
           (a[static_cast<std::size_t>(e)] * b[static_cast<std::size_t>(e) + 1] +
            a[static_cast<std::size_t>(e) + 1] * b[static_cast<std::size_t>(e)]);
  return acc;
}

void RadialSolver::assemble_spectrum(BranchPoint1D& bp, int ell_max,
                                     int total) const {
  const int per_ell = std::max(2, total);
  std::vector<RadialMode> all;
  for (int ell = 0; ell <= ell_max; ++ell) {
    auto fine = mode_eigs(bp, ell, per_ell);
    if (!bp.coarse_v.empty()) {
      const auto coarse =
          mode_eigs_on(bp.coarse_grid, bp.coarse_v, bp.coarse_Vr,
                       bp.coarse_lambda, ell, per_ell);
      for (std::size_t j = 0; j < fine.size() && j < coarse.size(); ++j)
        fine[j].mu_ext = (4.0 * fine[j].mu - coarse[j].mu) / 3.0;
    }
    for (auto& m : fine) all.push_back(std::move(m));
  }
  std::sort(all.begin(), all.end(),
            [](const RadialMode& a, const RadialMode& b) { return a.mu < b.mu; });
  // Keep the smallest `total` counting multiplicity.
  std::vector<RadialMode> kept;
  int counted = 0;
  for (auto& m : all) {
    if (counted >= total) break;
    counted += m.multiplicity;
    kept.push_back(std::move(m));
  }
  bp.modes = std::move(kept);
}

}  // namespace glab
