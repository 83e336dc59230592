#include "glab/solver2d.hpp"

#include <Eigen/SVD>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>

namespace glab {

namespace {
constexpr double kPi = 3.1415926535897932384626433832795;
}

Solver2D::Solver2D(Domain dom, VExpr V, int n, Solver2DOpts opts)
    : dom_(dom), V_(std::move(V)), grid_(std::make_shared<Grid2D>(dom, n)),
      opts_(opts) {
  Vnodes_.resize(static_cast<std::size_t>(grid_->interior_count()));
  for (int k = 0; k < grid_->interior_count(); ++k) {
    const double val = V_.eval(grid_->node_pos(k));
    if (!(val > 1e-12))
      throw std::invalid_argument("solver2d: V must be positive on the grid");
    Vnodes_[static_cast<std::size_t>(k)] = val;
  }
}

Eigen::VectorXd Solver2D::seed_bubbles(const std::vector<Pt>& anchors, double s,
                                       const GreenOracle& oracle,
                                       double* lambda_out) const {
  if (anchors.empty()) throw std::invalid_argument("seed_bubbles: no anchors");
  // Parameter matched to the scaling law: log λ = -(s + 2 log d_j + log V)/2,
  // averaged over peaks. The far field of the resulting bubbles reproduces
  // the Green-function singular limit to leading order.
  double acc = 0.0;
  std::vector<double> d(anchors.size());
  {
    // d_j constants need V and the Green oracle at the anchors.
    for (std::size_t j = 0; j < anchors.size(); ++j) {
      double e = 4.0 * kPi * oracle.R(anchors[j]);
      for (std::size_t i = 0; i < anchors.size(); ++i)
        if (i != j) e += 4.0 * kPi * oracle.G(anchors[j], anchors[i]);
      e += 0.5 * std::log(V_.eval(anchors[j]));
      d[j] = 0.125 * std::exp(e);
      acc += 2.0 * std::log(d[j]) + std::log(V_.eval(anchors[j]));
    }
  }
  const double lambda = std::exp(-0.5 * (s + acc / anchors.size()));
  if (lambda_out) *lambda_out = lambda;

  Eigen::VectorXd v(grid_->interior_count());
  for (int k = 0; k < grid_->interior_count(); ++k) {
    const Pt p = grid_->node_pos(k);
    double acc_v = 0.0;
    for (std::size_t j = 0; j < anchors.size(); ++j) {
      const double dj2 = std::exp(-s) / (lambda * V_.eval(anchors[j]));
      const double r2 = dist(p, anchors[j]) * dist(p, anchors[j]);
      acc_v += s - 2.0 * std::log1p(r2 / (8.0 * dj2));
    }
    v[k] = std::max(acc_v, 0.0);
  }
  return v;
}

Eigen::VectorXd Solver2D::residual(const Eigen::VectorXd& v, double lambda,
                                   double* inf_norm) const {
  Eigen::VectorXd F = grid_->laplacian() * v;
  for (int k = 0; k < F.size(); ++k)
    F[k] -= lambda * Vnodes_[static_cast<std::size_t>(k)] * std::exp(v[k]);
  if (inf_norm) *inf_norm = F.lpNorm<Eigen::Infinity>();
  return F;
}

BranchPoint2D Solver2D::solve_at(double s, Pt anchor,
                                 const Eigen::VectorXd& init,
                                 double init_lambda, int expected_peaks) const {
  const int M = grid_->interior_count();
  if (init.size() != M) throw std::invalid_argument("solve_at: init size mismatch");
  const int kanchor = grid_->nearest_interior(anchor);
  if (kanchor < 0) throw std::invalid_argument("solve_at: anchor outside the grid");

  Eigen::VectorXd v = init;
  v[kanchor] = s;
  double lambda = init_lambda;
  if (!(lambda > 0.0)) throw std::invalid_argument("solve_at: lambda must be positive");

  double res = 0.0;
  Eigen::VectorXd F = residual(v, lambda, &res);
  int it = 0;
  const Eigen::SparseMatrix<double>& A = grid_->laplacian();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  bool analyzed = false;
  for (; it < opts_.max_newton && (res > opts_.newton_tol ||
                                   std::abs(v[kanchor] - s) > 1e-13); ++it) {
    // Bordered Jacobian: [A - λ diag(V e^v), -V e^v; e_a^T, 0].
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(A.nonZeros()) + 3 * M + 2);
    for (int c = 0; c < A.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator itr(A, c); itr; ++itr)
        trip.emplace_back(static_cast<int>(itr.row()), c, itr.value());
    for (int k = 0; k < M; ++k) {
      const double w = Vnodes_[static_cast<std::size_t>(k)] * std::exp(v[k]);
      trip.emplace_back(k, k, -lambda * w);
      trip.emplace_back(k, M, -w);
    }
    trip.emplace_back(M, kanchor, 1.0);
    Eigen::SparseMatrix<double> J(M + 1, M + 1);
    J.setFromTriplets(trip.begin(), trip.end());
    J.makeCompressed();

    Eigen::VectorXd rhs(M + 1);
    rhs.head(M) = -F;
    rhs[M] = -(v[kanchor] - s);

    if (!analyzed) {
      lu.analyzePattern(J);
      analyzed = true;
    }
    lu.factorize(J);
    if (lu.info() != Eigen::Success)
      throw NumericError("solver2d: Jacobian factorization failed");
    const Eigen::VectorXd dz = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !dz.allFinite())
      throw NumericError("solver2d: Newton solve failed");

    double t = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 30; ++bt, t *= 0.5) {
      const double lt = lambda + t * dz[M];
      if (!(lt > 0.0)) continue;
      const Eigen::VectorXd vt = v + t * dz.head(M);
      double rt = 0.0;
      Eigen::VectorXd Ft = residual(vt, lt, &rt);
      const double merit_t = rt + std::abs(vt[kanchor] - s);
      const double merit = res + std::abs(v[kanchor] - s);
      if (merit_t < merit || merit_t <= opts_.newton_tol) {
        v = vt;
        lambda = lt;
        F = std::move(Ft);
        res = rt;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw NumericError("solver2d: Newton stalled");
  }
  if (res > opts_.newton_tol)
    throw NumericError("solver2d: Newton did not reach tolerance");

  BranchPoint2D bp;
  bp.grid = grid_;
  bp.v = std::move(v);
  bp.lambda = lambda;
  bp.s = s;
  bp.newton_iters = it;
  double Sg = 0.0;
  const Eigen::VectorXd& vol = grid_->volumes();
  for (int k = 0; k < M; ++k)
    Sg += vol[k] * lambda * Vnodes_[static_cast<std::size_t>(k)] * std::exp(bp.v[k]);
  bp.Sigma = Sg;
  bp.peaks = detect_peaks(bp.v, expected_peaks);
  for (const Peak& p : bp.peaks)
    bp.deltas.push_back(1.0 / std::sqrt(lambda * V_.eval(p.pos) * std::exp(p.height)));
  return bp;
}

std::vector<Peak> Solver2D::detect_peaks(const Eigen::VectorXd& field,
                                         int m) const {
  const int n = grid_->n();
  const double hx = grid_->hx(), hy = grid_->hy();
  std::vector<std::pair<double, int>> maxima;  // (value, interior idx)
  for (int k = 0; k < grid_->interior_count(); ++k) {
    const Pt p = grid_->node_pos(k);
    const double val = field[k];
    bool is_max = true;
    for (int dj = -1; dj <= 1 && is_max; ++dj) {
      for (int di = -1; di <= 1 && is_max; ++di) {
        if (di == 0 && dj == 0) continue;
        const Pt q{p.x + di * hx, p.y + dj * hy};
        const int nb = grid_->nearest_interior(q);
        // Non-interior neighbors carry the boundary value 0.
        const double nv = (nb >= 0 && dist(grid_->node_pos(nb), q) < 1e-9 * hx)
                              ? field[nb]
                              : 0.0;
        if (nv >= val) is_max = false;
      }
    }
    if (is_max && val > 0.0) maxima.emplace_back(val, k);
  }
  std::sort(maxima.rbegin(), maxima.rend());
  const double min_sep = opts_.peak_min_sep_cells * std::max(hx, hy);
  std::vector<Peak> out;
  for (const auto& [val, k] : maxima) {
    if (static_cast<int>(out.size()) >= m) break;
    const Pt p = grid_->node_pos(k);
    bool ok = true;
    for (const Peak& q : out)
      if (dist(p, q.pos) < min_sep) ok = false;
    if (!ok) continue;
    // Quadratic refinement from second differences on the 3x3 stencil.
    auto fval = [&](int di, int dj) {
      const Pt q{p.x + di * hx, p.y + dj * hy};
      const int nb = grid_->nearest_interior(q);
      return (nb >= 0 && dist(grid_->node_pos(nb), q) < 1e-9 * hx) ? field[nb] : 0.0;
    };
    const double gx = (fval(1, 0) - fval(-1, 0)) / (2 * hx);
    const double gy = (fval(0, 1) - fval(0, -1)) / (2 * hy);
    const double hxx = (fval(1, 0) - 2 * val + fval(-1, 0)) / (hx * hx);
    const double hyy = (fval(0, 1) - 2 * val + fval(0, -1)) / (hy * hy);
    const double hxy = (fval(1, 1) - fval(1, -1) - fval(-1, 1) + fval(-1, -1)) /
                       (4 * hx * hy);
    Peak pk{p, val};
    const double det = hxx * hyy - hxy * hxy;
    if (det > 0.0 && hxx < 0.0) {
      double ox = -(hyy * gx - hxy * gy) / det;
      double oy = -(hxx * gy - hxy * gx) / det;
      ox = std::clamp(ox, -hx, hx);
      oy = std::clamp(oy, -hy, hy);
      pk.pos = {p.x + ox, p.y + oy};
      pk.height = val + gx * ox + gy * oy +
                  0.5 * (hxx * ox * ox + 2 * hxy * ox * oy + hyy * oy * oy);
    }
    out.push_back(pk);
  }
  if (static_cast<int>(out.size()) < m)
    throw NumericError("detect_peaks: fewer maxima than requested");
  return out;
}

Branch2D Solver2D::continue_branch(
    const std::vector<Pt>& anchors, double s_min, double s_max, double s_step,
    const GreenOracle& oracle,
    const std::function<void(const BranchPoint2D&)>& on_point) const {
  Branch2D out;
  const double hmax = std::max(grid_->hx(), grid_->hy());
  const int steps = static_cast<int>(std::floor((s_max - s_min) / s_step + 1e-9));
  const int m = static_cast<int>(anchors.size());
  for (int kstep = 0; kstep <= steps; ++kstep) {
    const double s = s_min + kstep * s_step;
    Eigen::VectorXd init;
    double lambda0 = 0.0;
    if (out.points.empty()) {
      init = seed_bubbles(anchors, s, oracle, &lambda0);
    } else {
      const BranchPoint2D& prev = out.points.back();
      init = prev.v * (s / prev.s);
      lambda0 = prev.lambda * std::exp(-0.5 * (s - prev.s));
    }
    // Resolution guard: the predicted bubble scale must stay resolvable.
    const double delta_pred =
        1.0 / std::sqrt(lambda0 * V_.eval(anchors[0]) * std::exp(s));
    if (delta_pred < opts_.min_delta_cells * hmax) {
      out.stop_reason = "insufficient resolution: bubble scale under " +
                        std::to_string(opts_.min_delta_cells) + " cells";
      break;
    }
    try {
      BranchPoint2D bp = solve_at(s, anchors[0], init, lambda0, m);
      out.points.push_back(std::move(bp));
    } catch (const NumericError& err) {
      out.stop_reason = err.what();
      break;
    }
    if (on_point) on_point(out.points.back());
  }
  return out;
}

void Solver2D::build_sym_pencil(const BranchPoint2D& bp,
                                Eigen::SparseMatrix<double>& A,
                                Eigen::VectorXd& Bdiag) const {
  const Eigen::VectorXd& vol = grid_->volumes();
  Eigen::SparseMatrix<double> S = vol.asDiagonal() * grid_->laplacian();
  Eigen::SparseMatrix<double> St = S.transpose();
  A = 0.5 * (S + St);
  const int M = grid_->interior_count();
  Bdiag.resize(M);
  for (int k = 0; k < M; ++k)
    Bdiag[k] = vol[k] * bp.lambda * Vnodes_[static_cast<std::size_t>(k)] *
               std::exp(bp.v[k]);
}

void Solver2D::eig2d(BranchPoint2D& bp, int K) const {
  const int M = grid_->interior_count();
  if (K < 1 || K >= M) throw std::invalid_argument("eig2d: bad K");
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd B;
  build_sym_pencil(bp, A, B);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  ldlt.compute(A);
  if (ldlt.info() != Eigen::Success)
    throw NumericError("eig2d: operator factorization failed");
  const Eigen::VectorXd Bh = B.cwiseSqrt();

  // Lanczos on Op = B^{1/2} A^{-1} B^{1/2} with full reorthogonalization.
  // Largest Ritz values theta correspond to the smallest mu = 1/theta.
  const int maxit = std::min(M, 60 * K + opts_.lanczos_extra + 60);
  std::vector<Eigen::VectorXd> basis;
  std::vector<double> alpha, beta;
  Eigen::VectorXd q(M);
  {
    std::uint64_t state = 0x2545f4914f6cdd1dull;
    for (int i = 0; i < M; ++i) {
      state = state * 6364136223846793005ull + 1442695040888963407ull;
      q[i] = (static_cast<double>(state >> 11) / 9007199254740992.0) - 0.5;
    }
  }
  q.normalize();
  basis.push_back(q);
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(M);
  double beta_last = 0.0;
  TridiagEigs ritz;
  int converged = 0;
  int used = 0;
  for (int j = 0; j < maxit; ++j) {
    Eigen::VectorXd w = Bh.asDiagonal() * ldlt.solve(Bh.asDiagonal() * basis.back());
    const double a = basis.back().dot(w);
    alpha.push_back(a);
    w -= a * basis.back();
    if (j > 0) w -= beta_last * prev;
    // Full reorthogonalization (twice for safety).
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& bvec : basis) w -= bvec.dot(w) * bvec;
    beta_last = w.norm();
    used = j + 1;
    // Convergence test every few steps: residual bound |beta * y_last|.
    if ((j + 1) % 5 == 0 || beta_last < 1e-14 || j + 1 == maxit) {
      // Eigenpairs of -T are the largest of T with the same vectors; both
      // bands must be negated or the vectors pick up alternating signs.
      std::vector<double> dneg(alpha.begin(), alpha.end());
      for (double& x : dneg) x = -x;
      std::vector<double> eneg(beta.begin(), beta.end());
      for (double& x : eneg) x = -x;
      ritz = tridiag_smallest(dneg, eneg, std::min(K, used));
      converged = 0;
      for (std::size_t t = 0; t < ritz.values.size(); ++t) {
        const double resid = std::abs(beta_last * ritz.vectors[t].back());
        if (resid <= opts_.lanczos_tol * std::max(1.0, std::abs(ritz.values[t])))
          ++converged;
      }
      if (converged >= K || beta_last < 1e-14) break;
    }
    if (j + 1 == maxit) break;
    beta.push_back(beta_last);
    prev = basis.back();
    basis.push_back(w / beta_last);
  }
  if (converged < K)
    throw NumericError("eig2d: Lanczos did not converge for all requested pairs");

  bp.mus.clear();
  bp.ws.clear();
  for (int t = 0; t < K; ++t) {
    const double theta = -ritz.values[static_cast<std::size_t>(t)];
    if (!(theta > 0.0))
      throw NumericError("eig2d: nonpositive Ritz value");
    const double mu = 1.0 / theta;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(M);
    for (int j = 0; j < used; ++j)
      z += ritz.vectors[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] *
           basis[static_cast<std::size_t>(j)];
    Eigen::VectorXd w = z.cwiseQuotient(Bh);
    // Sup-normalize with positive maximum.
    int arg = 0;
    for (int i = 1; i < M; ++i)
      if (std::abs(w[i]) > std::abs(w[arg])) arg = i;
    if (w[arg] != 0.0) w /= w[arg];
    bp.mus.push_back(mu);
    bp.ws.push_back(std::move(w));
  }

  // Inertia cross-check: pick the widest relative gap between consecutive
  // computed values and verify the count below its midpoint. A shift inside
  // a degenerate cluster would miscount, so clustered tails are skipped.
  int cut = -1;
  double best_gap = 1e-6;
  for (int t = 1; t < K; ++t) {
    const double gap = (bp.mus[static_cast<std::size_t>(t)] -
                        bp.mus[static_cast<std::size_t>(t - 1)]) /
                       std::max(1.0, std::abs(bp.mus[static_cast<std::size_t>(t)]));
    if (gap > best_gap) {
      best_gap = gap;
      cut = t;
    }
  }
  if (cut > 0) {
    const double shift = 0.5 * (bp.mus[static_cast<std::size_t>(cut)] +
                                bp.mus[static_cast<std::size_t>(cut - 1)]);
    Eigen::SparseMatrix<double> shifted = A;
    for (int k = 0; k < M; ++k) shifted.coeffRef(k, k) -= shift * B[k];
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chk;
    chk.compute(shifted);
    if (chk.info() == Eigen::Success) {
      int neg = 0;
      const Eigen::VectorXd D = chk.vectorD();
      for (int i = 0; i < D.size(); ++i)
        if (D[i] < 0.0) ++neg;
      bp.sturm_checked = true;
      bp.sturm_ok = (neg == cut);
    }
  }
}

Solver2D::CVectors Solver2D::extract_c(const BranchPoint2D& bp, int n,
                                       const GreenOracle& oracle,
                                       double ball_radius) const {
  if (n < 0 || n >= static_cast<int>(bp.ws.size()))
    throw std::invalid_argument("extract_c: eigenfield index out of range");
  const Eigen::VectorXd& w = bp.ws[static_cast<std::size_t>(n)];
  const double mu = bp.mus[static_cast<std::size_t>(n)];
  CVectors out;
  for (const Peak& p : bp.peaks)
    out.hat.push_back(grid_->interpolate_zero(w, p.pos));

  // Far-field fit over annulus nodes: outside every peak ball, at least two
  // cells inside the boundary.
  const int m = static_cast<int>(bp.peaks.size());
  std::vector<int> sel;
  const double margin = 2.0 * std::max(grid_->hx(), grid_->hy());
  for (int k = 0; k < grid_->interior_count(); ++k) {
    const Pt p = grid_->node_pos(k);
    if (dom_.boundary_distance(p) < margin) continue;
    bool outside_balls = true;
    for (const Peak& q : bp.peaks)
      if (dist(p, q.pos) < ball_radius) outside_balls = false;
    if (outside_balls) sel.push_back(k);
  }
  if (static_cast<int>(sel.size()) < 8 * m)
    throw NumericError("extract_c: annulus too small for the far-field fit");
  Eigen::MatrixXd Phi(sel.size(), m);
  Eigen::VectorXd rhs(sel.size());
  for (std::size_t r = 0; r < sel.size(); ++r) {
    const Pt p = grid_->node_pos(sel[r]);
    for (int j = 0; j < m; ++j)
      Phi(static_cast<Eigen::Index>(r), j) =
          8.0 * kPi * oracle.G(p, bp.peaks[static_cast<std::size_t>(j)].pos);
    rhs[static_cast<Eigen::Index>(r)] = w[sel[r]] / mu;
  }
  const Eigen::MatrixXd N = Phi.transpose() * Phi;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(N, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  out.cond = (smin > 0.0) ? smax / smin : 1e300;
  if (out.cond > 1e8)
    throw NumericError("extract_c: far-field fit is ill-conditioned");
  const Eigen::VectorXd beta = svd.solve(Phi.transpose() * rhs);
  for (int j = 0; j < m; ++j) out.tilde.push_back(beta[j]);
  return out;
}

double Solver2D::h10_product(const BranchPoint2D& bp, int i, int j) const {
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd B;
  build_sym_pencil(bp, A, B);
  const Eigen::VectorXd& wi = bp.ws[static_cast<std::size_t>(i)];
  const Eigen::VectorXd& wj = bp.ws[static_cast<std::size_t>(j)];
  const double num = wi.dot(A * wj);
  const double ni = std::sqrt(wi.dot(A * wi));
  const double nj = std::sqrt(wj.dot(A * wj));
  return num / (ni * nj);
}

}  // namespace glab
