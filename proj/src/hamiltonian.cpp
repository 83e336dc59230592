#include "glab/hamiltonian.hpp"

#include <json.hpp>

#include <cmath>

namespace glab {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;
constexpr double kLog2 = 0.69314718055994530941723212145818;

void check_margins(const Domain& dom, const std::vector<Pt>& pts,
                   double margin) {
  for (std::size_t j = 0; j < pts.size(); ++j) {
    if (dom.boundary_distance(pts[j]) < margin)
      throw NumericError("peak system: point escaped toward the boundary");
    for (std::size_t i = 0; i < j; ++i)
      if (dist(pts[i], pts[j]) < margin)
        throw NumericError("peak system: points collided");
  }
}

std::vector<Pt> unflatten(const Eigen::VectorXd& v) {
  std::vector<Pt> pts(static_cast<std::size_t>(v.size() / 2));
  for (std::size_t j = 0; j < pts.size(); ++j)
    pts[j] = {v[2 * static_cast<Eigen::Index>(j)],
              v[2 * static_cast<Eigen::Index>(j) + 1]};
  return pts;
}

Eigen::VectorXd flatten(const std::vector<Pt>& pts) {
  Eigen::VectorXd v(2 * static_cast<Eigen::Index>(pts.size()));
  for (std::size_t j = 0; j < pts.size(); ++j) {
    v[2 * static_cast<Eigen::Index>(j)] = pts[j].x;
    v[2 * static_cast<Eigen::Index>(j) + 1] = pts[j].y;
  }
  return v;
}

}  // namespace

double eval_H(const GreenOracle& oracle, const VExpr& V,
              const std::vector<Pt>& pts) {
  if (pts.empty()) throw std::invalid_argument("eval_H: no points");
  double H = 0.0;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    H += 0.5 * oracle.R(pts[j]);
    H += std::log(V.eval(pts[j])) / (8.0 * kPi);
    for (std::size_t i = 0; i < j; ++i) H += oracle.G(pts[i], pts[j]);
  }
  return H;
}

Eigen::VectorXd grad_H(const GreenOracle& oracle, const VExpr& V,
                       const std::vector<Pt>& pts, double step) {
  const Eigen::VectorXd x0 = flatten(pts);
  Eigen::VectorXd g(x0.size());
  for (Eigen::Index k = 0; k < x0.size(); ++k) {
    Eigen::VectorXd xp = x0, xm = x0;
    xp[k] += step;
    xm[k] -= step;
    g[k] = (eval_H(oracle, V, unflatten(xp)) -
            eval_H(oracle, V, unflatten(xm))) /
           (2.0 * step);
  }
  return g;
}

Eigen::MatrixXd hess_H(const GreenOracle& oracle, const VExpr& V,
                       const std::vector<Pt>& pts, double step) {
  const Eigen::VectorXd x0 = flatten(pts);
  const Eigen::Index n = x0.size();
  Eigen::MatrixXd Hm(n, n);
  const double f0 = eval_H(oracle, V, pts);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a; b < n; ++b) {
      double v;
      if (a == b) {
        Eigen::VectorXd xp = x0, xm = x0;
        xp[a] += step;
        xm[a] -= step;
        v = (eval_H(oracle, V, unflatten(xp)) - 2.0 * f0 +
             eval_H(oracle, V, unflatten(xm))) /
            (step * step);
      } else {
        Eigen::VectorXd xpp = x0, xpm = x0, xmp = x0, xmm = x0;
        xpp[a] += step; xpp[b] += step;
        xpm[a] += step; xpm[b] -= step;
        xmp[a] -= step; xmp[b] += step;
        xmm[a] -= step; xmm[b] -= step;
        v = (eval_H(oracle, V, unflatten(xpp)) -
             eval_H(oracle, V, unflatten(xpm)) -
             eval_H(oracle, V, unflatten(xmp)) +
             eval_H(oracle, V, unflatten(xmm))) /
            (4.0 * step * step);
      }
      Hm(a, b) = v;
      Hm(b, a) = v;
    }
  }
  return Hm;
}

std::vector<Pt> find_critical(const GreenOracle& oracle, const VExpr& V,
                              std::vector<Pt> start, const CriticalOpts& opts) {
  const Domain& dom = oracle.domain();
  const double margin = opts.margin_frac * dom.diameter();
  const double step = opts.fd_step_frac * dom.diameter();

  auto attempt = [&](std::vector<Pt> pts) -> std::vector<Pt> {
    check_margins(dom, pts, margin);
    Eigen::VectorXd x = flatten(pts);
    Eigen::VectorXd g = grad_H(oracle, V, pts, step);
    for (int it = 0; it < opts.max_iter; ++it) {
      if (g.lpNorm<Eigen::Infinity>() <= opts.tol) return unflatten(x);
      const Eigen::MatrixXd Hm = hess_H(oracle, V, unflatten(x), step);
      Eigen::VectorXd dir;
      bool have_newton = false;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(Hm);
      if (lu.isInvertible()) {
        dir = -lu.solve(g);
        have_newton = dir.allFinite();
      }
      if (!have_newton) dir = -(Hm.transpose() * g);  // descent on |grad|^2
      if (dir.lpNorm<Eigen::Infinity>() == 0.0)
        throw NumericError("find_critical: stalled with zero step");
      // Backtrack on the gradient norm; reject steps breaking the margins.
      double t = 1.0;
      const double gn = g.norm();
      bool accepted = false;
      for (int bt = 0; bt < 40; ++bt, t *= 0.5) {
        const Eigen::VectorXd xt = x + t * dir;
        const auto pt = unflatten(xt);
        bool ok = true;
        for (std::size_t j = 0; j < pt.size() && ok; ++j) {
          if (dom.boundary_distance(pt[j]) < margin) ok = false;
          for (std::size_t i = 0; i < j && ok; ++i)
            if (dist(pt[i], pt[j]) < margin) ok = false;
        }
        if (!ok) continue;
        const Eigen::VectorXd gt = grad_H(oracle, V, pt, step);
        if (gt.norm() <= (1.0 - 1e-4 * t) * gn || gt.lpNorm<Eigen::Infinity>() <= opts.tol) {
          x = xt;
          g = gt;
          accepted = true;
          break;
        }
      }
      if (!accepted)
        throw NumericError(
            "find_critical: no acceptable step (escaped toward the boundary, "
            "collided, or stalled)");
    }
    throw NumericError("find_critical: no convergence within max_iter");
  };

  try {
    return attempt(start);
  } catch (const NumericError&) {
    if (opts.multistart <= 0) throw;
  }
  // Deterministic jittered restarts around the provided start.
  std::uint64_t state = opts.seed * 2862933555777941757ull + 3037000493ull;
  auto next01 = [&]() {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    return static_cast<double>(state >> 11) / 9007199254740992.0;
  };
  const double jitter = 0.05 * dom.diameter();
  for (int k = 0; k < opts.multistart; ++k) {
    std::vector<Pt> pts = start;
    for (Pt& p : pts) {
      p.x += jitter * (2.0 * next01() - 1.0);
      p.y += jitter * (2.0 * next01() - 1.0);
    }
    try {
      return attempt(pts);
    } catch (const NumericError&) {
      continue;
    }
  }
  throw NumericError("find_critical: all starts failed");
}

std::vector<double> d_constants(const GreenOracle& oracle, const VExpr& V,
                                const std::vector<Pt>& pts) {
  std::vector<double> d(pts.size());
  for (std::size_t j = 0; j < pts.size(); ++j) {
    double s = 4.0 * kPi * oracle.R(pts[j]);
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (i != j) s += 4.0 * kPi * oracle.G(pts[j], pts[i]);
    s += 0.5 * std::log(V.eval(pts[j]));
    d[j] = 0.125 * std::exp(s);
  }
  return d;
}

PeakSystem assemble_system(const GreenOracle& oracle, const VExpr& V,
                           const std::vector<Pt>& pts, double fd_step_frac) {
  const int m = static_cast<int>(pts.size());
  if (m == 0) throw std::invalid_argument("assemble_system: no points");
  PeakSystem sys;
  sys.points = pts;
  const double step = fd_step_frac * oracle.domain().diameter();
  sys.H = eval_H(oracle, V, pts);
  sys.grad = grad_H(oracle, V, pts, step);
  sys.hess = hess_H(oracle, V, pts, step);

  sys.h.resize(m, m);
  for (int j = 0; j < m; ++j) {
    double diag = oracle.R(pts[static_cast<std::size_t>(j)]) +
                  std::log(V.eval(pts[static_cast<std::size_t>(j)])) / (4.0 * kPi);
    for (int i = 0; i < m; ++i) {
      if (i == j) continue;
      const double g = oracle.G(pts[static_cast<std::size_t>(i)],
                                pts[static_cast<std::size_t>(j)]);
      diag += 2.0 * g;
      sys.h(i, j) = -g;
    }
    sys.h(j, j) = diag;
  }
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.h);
    sys.Lambda = es.eigenvalues();
    sys.C = es.eigenvectors();
    for (int c = 0; c < m; ++c) {
      int arg = 0;
      for (int r = 1; r < m; ++r)
        if (std::abs(sys.C(r, c)) > std::abs(sys.C(arg, c))) arg = r;
      if (sys.C(arg, c) < 0.0) sys.C.col(c) *= -1.0;
    }
  }
  sys.d = d_constants(oracle, V, pts);
  {
    Eigen::VectorXd dd(2 * m);
    for (int j = 0; j < m; ++j) {
      dd[2 * j] = sys.d[static_cast<std::size_t>(j)];
      dd[2 * j + 1] = sys.d[static_cast<std::size_t>(j)];
    }
    const Eigen::MatrixXd scaled =
        dd.asDiagonal() * sys.hess * dd.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scaled);
    sys.eta = es.eigenvalues();
    sys.degenerate_hess =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sys.hess)
            .eigenvalues()
            .cwiseAbs()
            .minCoeff() < 1e-12;
  }
  // Structural properties of the h spectrum. The first eigenvector must be
  // single-signed with no vanishing entry; for m >= 2 no eigenvector may be
  // supported on a single peak.
  const double zero_tol = 1e-10;
  for (int r = 0; r < m; ++r)
    if (sys.C(r, 0) < zero_tol) sys.first_vec_single_signed = false;
  if (m >= 2) {
    for (int c = 0; c < m; ++c) {
      int nonzero = 0;
      for (int r = 0; r < m; ++r)
        if (std::abs(sys.C(r, c)) > zero_tol) ++nonzero;
      if (nonzero <= 1) sys.no_single_peak_vec = false;
    }
  }
  return sys;
}

LowPrediction predict_low(double lambda, double Lambda_n) {
  if (!(lambda > 0.0) || lambda >= 1.0)
    throw std::invalid_argument("predict_low: lambda must be in (0, 1)");
  const double L = std::log(lambda);
  const double k1 = 3.0 * kLog2 - 1.0;
  LowPrediction out;
  out.first = -1.0 / (2.0 * L);
  out.second = out.first + (2.0 * kPi * Lambda_n - 0.5 * k1) / (L * L);
  out.inverse = 1.0 / (-2.0 * L - 8.0 * kPi * Lambda_n + 2.0 * k1);
  return out;
}

double predict_mid(double lambda, const PeakSystem& sys, int n) {
  const int m = static_cast<int>(sys.points.size());
  if (n < m + 1 || n > 3 * m)
    throw std::invalid_argument("predict_mid: n must lie in [m+1, 3m]");
  if (!(lambda >= 0.0))
    throw std::invalid_argument("predict_mid: lambda must be nonnegative");
  const int idx = 2 * m - (n - m) + 1;  // 1-based into ascending eta
  return 1.0 - 48.0 * kPi * sys.eta[idx - 1] * lambda;
}

std::string peaksystem_json(const PeakSystem& sys) {
  nlohmann::json j;
  const int m = static_cast<int>(sys.points.size());
  for (const Pt& p : sys.points) j["points"].push_back({p.x, p.y});
  j["H"] = sys.H;
  j["grad"] = std::vector<double>(sys.grad.data(), sys.grad.data() + sys.grad.size());
  for (int r = 0; r < sys.hess.rows(); ++r)
    j["hess"].push_back(std::vector<double>(sys.hess.row(r).begin(),
                                            sys.hess.row(r).end()));
  for (int r = 0; r < m; ++r)
    j["h"].push_back(std::vector<double>(sys.h.row(r).begin(), sys.h.row(r).end()));
  j["Lambda"] = std::vector<double>(sys.Lambda.data(),
                                    sys.Lambda.data() + sys.Lambda.size());
  for (int r = 0; r < m; ++r)
    j["C"].push_back(std::vector<double>(sys.C.row(r).begin(), sys.C.row(r).end()));
  j["d"] = sys.d;
  j["eta"] = std::vector<double>(sys.eta.data(), sys.eta.data() + sys.eta.size());
  j["degenerate_hess"] = sys.degenerate_hess;
  j["first_vec_single_signed"] = sys.first_vec_single_signed;
  j["no_single_peak_vec"] = sys.no_single_peak_vec;
  return j.dump(2);
}

}  // namespace glab
