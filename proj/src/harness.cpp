#include "glab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "glab/solver1d.hpp"
#include "glab/solver2d.hpp"
#include "json.hpp"

namespace glab {

namespace {

using njson = nlohmann::ordered_json;

constexpr double kPi = 3.14159265358979323846264338328;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

[[noreturn]] void bad_value(const ConfigFile::Entry& e) {
  throw std::invalid_argument("config: bad value for " + e.section + "." +
                              e.key + ": '" + e.value + "'");
}

double to_double(const ConfigFile::Entry& e) {
  try {
    std::size_t used = 0;
    const double v = std::stod(e.value, &used);
    if (used != e.value.size() || !std::isfinite(v)) bad_value(e);
    return v;
  } catch (const std::invalid_argument&) {
    bad_value(e);
  } catch (const std::out_of_range&) {
    bad_value(e);
  }
}

long to_long(const ConfigFile::Entry& e) {
  try {
    std::size_t used = 0;
    const long v = std::stol(e.value, &used);
    if (used != e.value.size()) bad_value(e);
    return v;
  } catch (const std::invalid_argument&) {
    bad_value(e);
  } catch (const std::out_of_range&) {
    bad_value(e);
  }
}

std::vector<double> to_double_list(const ConfigFile::Entry& e) {
  std::vector<double> out;
  std::istringstream is(e.value);
  std::string tok;
  while (is >> tok) {
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size() || !std::isfinite(v)) bad_value(e);
      out.push_back(v);
    } catch (const std::invalid_argument&) {
      bad_value(e);
    } catch (const std::out_of_range&) {
      bad_value(e);
    }
  }
  return out;
}

// Assertion menu. Primary keys trigger a check; parameter keys tune one.
const char* const kPrimaryKeys[] = {
    "d1_limit",       "sigma_exp_min",    "c2const",
    "resid2_exp_min", "midband_slope",    "mu4_gt1",
    "mu1_monotone_smin", "profile_max",   "profile_decreasing",
    "farfield_rtol",  "h10_max",          "tstar_tol",
    "eigvec_sym_tol", "c1_same_sign",     "c2_opposite_sign",
    "conc_first_all", "conc_low_two_plus", "matrix_no_single",
    "sigma_total_rtol",
};
const char* const kParamKeys[] = {
    "d1_rtol",     "d1_min_s",     "sigma_lmin",   "sigma_lmax",
    "c2const_rtol", "c2_points",   "resid2_lmin",  "resid2_lmax",
    "midband_rtol", "midband_lmin", "midband_lmax", "profile_at_lambda",
    "farfield_at_lambda",
};

bool is_primary(const std::string& k) {
  for (const char* p : kPrimaryKeys)
    if (k == p) return true;
  return false;
}
bool is_param(const std::string& k) {
  for (const char* p : kParamKeys)
    if (k == p) return true;
  return false;
}

double param_or(const StudyConfig& cfg, const std::string& key, double dflt) {
  for (const auto& [k, v] : cfg.assertions)
    if (k == key) return v;
  return dflt;
}

bool has_key(const StudyConfig& cfg, const std::string& key) {
  for (const auto& [k, v] : cfg.assertions)
    if (k == key) return true;
  return false;
}

const FitSummary* find_fit(const StudyReport& rep, const std::string& name) {
  for (const auto& f : rep.fits)
    if (f.name == name) return &f;
  return nullptr;
}

const EigDiag* find_eig(const DiagnosticsRow& row, int n) {
  for (const auto& e : row.eigs)
    if (e.n == n) return &e;
  return nullptr;
}

std::vector<std::size_t> eig_row_indices(const StudyReport& rep) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rep.rows.size(); ++i)
    if (!rep.rows[i].eigs.empty()) out.push_back(i);
  return out;
}

void check_positive_V(const StudyConfig& cfg) {
  const Domain& dom = cfg.domain;
  const int n = 61;
  double worst = std::numeric_limits<double>::infinity();
  Pt at{0.0, 0.0};
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const Pt p{dom.x0 + (dom.x1 - dom.x0) * i / n,
                 dom.y0 + (dom.y1 - dom.y0) * j / n};
      if (!dom.contains(p)) continue;
      const double v = cfg.V.eval(p);
      if (v < worst) {
        worst = v;
        at = p;
      }
    }
  }
  if (!(worst > 1e-12))
    throw std::invalid_argument(
        "config: V must be positive on the domain; min " + fmt(worst) +
        " at (" + fmt(at.x) + ", " + fmt(at.y) + ")");
}

GreenOracle make_oracle(const StudyConfig& cfg) {
  if (cfg.domain.kind == Domain::Kind::kDisk) return GreenOracle::exact_disk();
  return GreenOracle::numeric(cfg.domain, cfg.green_n);
}

// Reorders detected peaks so index j matches the system point j.
void align_peaks(BranchPoint2D& bp, const std::vector<Pt>& sys_pts) {
  const std::size_t m = sys_pts.size();
  if (bp.peaks.size() != m)
    throw NumericError("study: detected peak count does not match the system");
  std::vector<Peak> np(m);
  std::vector<double> nd(m);
  std::vector<bool> used(m, false);
  for (std::size_t j = 0; j < m; ++j) {
    std::size_t best = m;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      if (used[i]) continue;
      const double d = dist(bp.peaks[i].pos, sys_pts[j]);
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    np[j] = bp.peaks[best];
    nd[j] = bp.deltas[best];
    used[best] = true;
  }
  bp.peaks = std::move(np);
  bp.deltas = std::move(nd);
}

void run_1d(const StudyConfig& cfg, const GreenOracle& oracle,
            StudyReport& rep, double& h10_worst) {
  const Pt pk = rep.system.points[0];
  if (std::hypot(pk.x, pk.y) > 1e-7)
    throw std::invalid_argument(
        "study: the radial solver needs the peak at the origin");

  Solver1DOpts sopts;
  sopts.q = cfg.q;
  sopts.n_inner = cfg.n_inner;
  sopts.h_max = cfg.h_max;
  if (cfg.newton_tol > 0) sopts.newton_tol = cfg.newton_tol;
  const RadialSolver solver(cfg.V, sopts);

  std::vector<BranchPoint1D> points =
      solver.continue_branch(cfg.s_min, cfg.s_max, cfg.s_step);

  RowOpts ropts = cfg.row;
  ropts.config_hash = cfg.config_hash;
  double worst = -1.0;
  const std::size_t last = points.size() - 1;
  for (std::size_t i = 0; i < points.size(); ++i) {
    BranchPoint1D& bp = points[i];
    const bool eig =
        cfg.eig_stride > 0 &&
        (i % static_cast<std::size_t>(cfg.eig_stride) == 0 || i == last);
    if (eig) {
      solver.assemble_spectrum(bp, cfg.ell_max, cfg.eig_count);
      for (std::size_t a = 0; a < bp.modes.size(); ++a) {
        for (std::size_t b = a + 1; b < bp.modes.size(); ++b) {
          if (bp.modes[a].ell != bp.modes[b].ell) continue;  // orthogonal by angle
          const int ell = bp.modes[a].ell;
          const double ab =
              RadialSolver::h10_product(bp.grid, ell, bp.modes[a].w, bp.modes[b].w);
          const double aa =
              RadialSolver::h10_product(bp.grid, ell, bp.modes[a].w, bp.modes[a].w);
          const double bb =
              RadialSolver::h10_product(bp.grid, ell, bp.modes[b].w, bp.modes[b].w);
          worst = std::max(worst, std::abs(ab) / std::sqrt(aa * bb));
        }
      }
    }
    rep.rows.push_back(build_row_1d(bp, rep.system, oracle, cfg.V, ropts));
  }
  if (worst >= 0.0) h10_worst = worst;
}

void run_2d(const StudyConfig& cfg, const GreenOracle& oracle,
            StudyReport& rep, double& h10_worst) {
  Solver2DOpts sopts;
  if (cfg.newton_tol > 0) sopts.newton_tol = cfg.newton_tol;
  if (cfg.min_delta_cells > 0) sopts.min_delta_cells = cfg.min_delta_cells;
  const Solver2D solver(cfg.domain, cfg.V, cfg.grid_n, sopts);

  Branch2D branch = solver.continue_branch(rep.system.points, cfg.s_min,
                                           cfg.s_max, cfg.s_step, oracle);
  rep.stop_reason = branch.stop_reason;
  if (branch.points.empty())
    throw NumericError("study: the branch produced no points (" +
                       branch.stop_reason + ")");

  RowOpts ropts = cfg.row;
  ropts.config_hash = cfg.config_hash;
  double worst = -1.0;
  const std::size_t last = branch.points.size() - 1;
  for (std::size_t i = 0; i < branch.points.size(); ++i) {
    BranchPoint2D& bp = branch.points[i];
    align_peaks(bp, rep.system.points);
    const bool eig =
        cfg.eig_stride > 0 &&
        (i % static_cast<std::size_t>(cfg.eig_stride) == 0 || i == last);
    if (eig) {
      solver.eig2d(bp, cfg.eig_count);
      for (std::size_t a = 0; a < bp.mus.size(); ++a) {
        for (std::size_t b = a + 1; b < bp.mus.size(); ++b) {
          const double gap = std::abs(bp.mus[a] - bp.mus[b]);
          if (gap <= 1e-6 * std::max(std::abs(bp.mus[a]), std::abs(bp.mus[b])))
            continue;  // clustered pair: cross-products are not pinned
          worst = std::max(worst, std::abs(solver.h10_product(
                                      bp, static_cast<int>(a),
                                      static_cast<int>(b))));
        }
      }
    }
    rep.rows.push_back(build_row_2d(bp, rep.system, oracle, solver, ropts));
    bp.ws.clear();  // rows carry everything the report needs
  }
  if (worst >= 0.0) h10_worst = worst;
}

void fill_concentration(const StudyConfig& cfg, StudyReport& rep) {
  const auto eigs = eig_row_indices(rep);
  if (eigs.empty()) return;
  const DiagnosticsRow& row = rep.rows[eigs.back()];
  const int m = static_cast<int>(rep.system.points.size());
  std::vector<std::vector<double>> c_hat_low;
  for (int n = 1; n <= m; ++n) {
    const EigDiag* e = find_eig(row, n);
    if (!e || e->c_hat.size() != static_cast<std::size_t>(m)) return;
    c_hat_low.push_back(e->c_hat);
  }
  rep.concentration =
      concentration_report(c_hat_low, rep.system, cfg.c_threshold);
  rep.has_concentration = true;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

void compute_fits(const StudyConfig& cfg, StudyReport& rep,
                  double h10_worst) {
  const int m = static_cast<int>(rep.system.points.size());
  const auto eigs = eig_row_indices(rep);
  auto add = [&](const std::string& name, double value, double err,
                 int points) {
    rep.fits.push_back({name, value, err, points});
  };
  auto try_fit = [&](const std::string& name,
                     const std::vector<std::pair<double, double>>& series,
                     FitModel model, FitAxis axis) {
    if (series.size() < 3) return;
    try {
      const RateFit f = fit_rate(series, model, axis);
      add(name, f.value, f.stderr_, f.points);
    } catch (const std::invalid_argument&) {
      // degenerate series; the corresponding assertion reports missing data
    }
  };

  {  // |sigma - 8 pi| decay of the anchor-peak ball mass
    const double lmin = param_or(cfg, "sigma_lmin", 1e-5);
    const double lmax = param_or(cfg, "sigma_lmax", 1e-2);
    std::vector<std::pair<double, double>> series;
    for (const auto& row : rep.rows) {
      if (row.lambda < lmin || row.lambda > lmax) continue;
      const double dev = std::abs(row.peaks[0].sigma - 8 * kPi);
      if (dev > 0) series.push_back({row.lambda, dev});
    }
    try_fit("sigma_exponent", series, FitModel::kPower, FitAxis::kLambda);
  }

  {  // leading-residual constant: r_first * (log lambda)^2
    const int pts = static_cast<int>(param_or(cfg, "c2_points", 6));
    std::vector<std::pair<double, double>> series;
    for (std::size_t i : eigs) {
      const EigDiag* e = find_eig(rep.rows[i], 1);
      if (e && std::isfinite(e->r_first))
        series.push_back({rep.rows[i].lambda, e->r_first});
    }
    if (series.size() > static_cast<std::size_t>(pts))
      series.erase(series.begin(),
                   series.end() - static_cast<std::ptrdiff_t>(pts));
    if (series.size() >= 2) {
      try {
        const RateFit f =
            fit_rate(series, FitModel::kLogReciprocal, FitAxis::kLambda);
        add("c2_constant", f.value, f.stderr_, f.points);
      } catch (const std::invalid_argument&) {
      }
    }
  }

  {  // second-order residual decay in 1/|log lambda|
    const double lmin = param_or(cfg, "resid2_lmin", 1e-9);
    const double lmax = param_or(cfg, "resid2_lmax", 1e-2);
    std::vector<std::pair<double, double>> series;
    for (std::size_t i : eigs) {
      const double l = rep.rows[i].lambda;
      if (l < lmin || l > lmax) continue;
      const EigDiag* e = find_eig(rep.rows[i], 1);
      if (e && std::isfinite(e->r_second) && e->r_second != 0.0)
        series.push_back({l, std::abs(e->r_second)});
    }
    try_fit("resid2_exponent", series, FitModel::kPower,
            FitAxis::kInvAbsLogLambda);
  }

  {  // mid-band prefactor (mu_{m+1} - 1)/lambda
    const double lmin = param_or(cfg, "midband_lmin", 1e-3);
    const double lmax = param_or(cfg, "midband_lmax", 5e-2);
    std::vector<double> vals;
    for (std::size_t i : eigs) {
      const double l = rep.rows[i].lambda;
      if (l < lmin || l > lmax) continue;
      const EigDiag* e = find_eig(rep.rows[i], m + 1);
      if (e) vals.push_back((e->mu_ext - 1.0) / l);
    }
    if (!vals.empty()) {
      const double mu = mean_of(vals);
      add("midband_slope", mu, sd_of(vals, mu), static_cast<int>(vals.size()));
    }
  }

  if (!rep.rows.empty()) {  // bubble-scale ratio at the deepest point
    const DiagnosticsRow& row = rep.rows.back();
    add("d1_ratio", row.peaks[0].delta / std::sqrt(row.lambda), 0.0, 1);
    add("sigma_total", row.Sigma, 0.0, 1);
  }

  {  // profile-error trend over the branch tail
    std::vector<double> vals;
    for (std::size_t i : eigs) {
      if (rep.rows[i].lambda > 1e-3) continue;
      const EigDiag* e = find_eig(rep.rows[i], 1);
      if (e && std::isfinite(e->profile_err)) vals.push_back(e->profile_err);
    }
    if (vals.size() >= 2)
      add("profile_ratio", vals.back() / vals.front(), 0.0,
          static_cast<int>(vals.size()));
  }

  {  // worst far-field coefficient deviation on the tail
    const double at = param_or(cfg, "farfield_at_lambda", 1e-3);
    double worst = -1.0;
    int count = 0;
    for (std::size_t i : eigs) {
      if (rep.rows[i].lambda > at) continue;
      const EigDiag* e = find_eig(rep.rows[i], 1);
      if (e && std::isfinite(e->farfield_c)) {
        worst = std::max(worst, std::abs(e->farfield_c - 1.0));
        ++count;
      }
    }
    if (count > 0) add("farfield_worst", worst, 0.0, count);
  }

  if (std::isfinite(h10_worst)) {
    add("h10_worst", h10_worst, 0.0, static_cast<int>(eigs.size()));
  }
}

AssertionResult eval_assertion(const StudyConfig& cfg, const StudyReport& rep,
                               double h10_worst, const std::string& key,
                               double val) {
  const int m = static_cast<int>(rep.system.points.size());
  const auto eigs = eig_row_indices(rep);
  AssertionResult r;
  r.key = key;
  r.measured = kNaN;
  auto fail_missing = [&]() {
    r.pass = false;
    r.band = "insufficient data";
    return r;
  };

  if (key == "d1_limit") {
    const double rtol = param_or(cfg, "d1_rtol", 0.02);
    const double smin = param_or(cfg, "d1_min_s", 16.0);
    double worst = -1.0;
    for (const auto& row : rep.rows) {
      if (row.s < smin) continue;
      const double ratio = row.peaks[0].delta / std::sqrt(row.lambda);
      worst = std::max(worst, std::abs(ratio - val) / std::abs(val));
    }
    if (worst < 0.0) return fail_missing();
    r.measured = worst;
    r.pass = worst <= rtol;
    r.band = "|delta/sqrt(lambda) - " + fmt(val) + "| <= " + fmt(rtol) +
             " rel, s >= " + fmt(smin);
    return r;
  }
  if (key == "sigma_exp_min" || key == "resid2_exp_min") {
    const char* name =
        key == "sigma_exp_min" ? "sigma_exponent" : "resid2_exponent";
    const FitSummary* f = find_fit(rep, name);
    if (!f) return fail_missing();
    r.measured = f->value;
    r.pass = f->value >= val;
    r.band = std::string(name) + " >= " + fmt(val);
    return r;
  }
  if (key == "c2const" || key == "midband_slope") {
    const char* name = key == "c2const" ? "c2_constant" : "midband_slope";
    const double rtol = key == "c2const"
                            ? param_or(cfg, "c2const_rtol", 0.15)
                            : param_or(cfg, "midband_rtol", 0.10);
    const FitSummary* f = find_fit(rep, name);
    if (!f) return fail_missing();
    r.measured = f->value;
    r.pass = std::abs(f->value - val) <= rtol * std::abs(val);
    r.band = std::string(name) + " = " + fmt(val) + " +- " + fmt(rtol) + " rel";
    return r;
  }
  if (key == "mu4_gt1") {
    double lo = std::numeric_limits<double>::infinity();
    bool all = !eigs.empty();
    for (std::size_t i : eigs) {
      const EigDiag* e = find_eig(rep.rows[i], 3 * m + 1);
      if (!e) {
        all = false;
        break;
      }
      lo = std::min(lo, e->mu_ext);
    }
    if (!all) return fail_missing();
    r.measured = lo;
    r.pass = lo > 1.0;
    r.band = "min mu_(3m+1) > 1";
    return r;
  }
  if (key == "mu1_monotone_smin") {
    std::vector<double> seq;
    for (std::size_t i : eigs) {
      if (rep.rows[i].s < val) continue;
      const EigDiag* e = find_eig(rep.rows[i], 1);
      if (e) seq.push_back(e->mu_ext);
    }
    if (seq.size() < 2) return fail_missing();
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < seq.size(); ++i)
      worst = std::max(worst, seq[i + 1] - seq[i]);
    r.measured = worst;
    r.pass = worst < 0.0;
    r.band = "mu_1 strictly decreasing for s >= " + fmt(val);
    return r;
  }
  if (key == "profile_max") {
    const double at = param_or(cfg, "profile_at_lambda", 1e-6);
    double worst = -1.0;
    for (std::size_t i : eigs) {
      if (rep.rows[i].lambda > at) continue;
      const EigDiag* e = find_eig(rep.rows[i], 1);
      if (e && std::isfinite(e->profile_err))
        worst = std::max(worst, e->profile_err);
    }
    if (worst < 0.0) return fail_missing();
    r.measured = worst;
    r.pass = worst <= val;
    r.band = "profile error <= " + fmt(val) + " for lambda <= " + fmt(at);
    return r;
  }
  if (key == "profile_decreasing") {
    const FitSummary* f = find_fit(rep, "profile_ratio");
    if (!f) return fail_missing();
    r.measured = f->value;
    r.pass = f->value < 1.0;
    r.band = "profile error shrinks along the tail (ratio < 1)";
    return r;
  }
  if (key == "farfield_rtol") {
    const double at = param_or(cfg, "farfield_at_lambda", 1e-3);
    const FitSummary* f = find_fit(rep, "farfield_worst");
    if (!f) return fail_missing();
    r.measured = f->value;
    r.pass = f->value <= val;
    r.band = "|farfield_c - 1| <= " + fmt(val) + " for lambda <= " + fmt(at);
    return r;
  }
  if (key == "h10_max") {
    if (!std::isfinite(h10_worst)) return fail_missing();
    r.measured = h10_worst;
    r.pass = h10_worst <= val;
    r.band = "worst relative H10 cross-product <= " + fmt(val);
    return r;
  }
  if (key == "tstar_tol") {
    if (!rep.has_t_scan) return fail_missing();
    r.measured = std::abs(rep.t_star - rep.t_scan);
    r.pass = r.measured <= val;
    r.band = "|t_star - slice scan| <= " + fmt(val);
    return r;
  }
  if (key == "eigvec_sym_tol") {
    if (m != 2 || rep.system.C.rows() != 2) return fail_missing();
    const double inv = 1.0 / std::sqrt(2.0);
    double worst = 0.0;
    for (int k = 0; k < 2; ++k) {
      const double t1 = k == 0 ? inv : inv;
      const double t2 = k == 0 ? inv : -inv;
      double best = std::numeric_limits<double>::infinity();
      for (double sgn : {1.0, -1.0}) {
        const double dev =
            std::max(std::abs(sgn * rep.system.C(0, k) - t1),
                     std::abs(sgn * rep.system.C(1, k) - t2));
        best = std::min(best, dev);
      }
      worst = std::max(worst, best);
    }
    r.measured = worst;
    r.pass = worst <= val;
    r.band = "columns of C match (1,1)/sqrt2, (1,-1)/sqrt2 within " + fmt(val);
    return r;
  }
  if (key == "c1_same_sign" || key == "c2_opposite_sign") {
    if (eigs.empty()) return fail_missing();
    const int n = key == "c1_same_sign" ? 1 : 2;
    const EigDiag* e = find_eig(rep.rows[eigs.back()], n);
    if (!e || e->c_hat.size() < 2) return fail_missing();
    if (key == "c1_same_sign") {
      const double s0 = e->c_hat[0] >= 0 ? 1.0 : -1.0;
      double lo = std::numeric_limits<double>::infinity();
      for (double c : e->c_hat) lo = std::min(lo, s0 * c);
      r.measured = lo;
      r.pass = lo > 0.0;
      r.band = "c_hat(n=1) entries share one sign";
    } else {
      if (m != 2) return fail_missing();
      const double c0 = e->c_hat[0], c1 = e->c_hat[1];
      if (c0 == 0.0 || c1 == 0.0) return fail_missing();
      r.measured = -(c0 * c1) / (std::abs(c0) * std::abs(c1));
      r.pass = r.measured > 0.0;
      r.band = "c_hat(n=2) entries have opposite signs";
    }
    return r;
  }
  if (key == "conc_first_all" || key == "conc_low_two_plus" ||
      key == "matrix_no_single") {
    if (!rep.has_concentration) return fail_missing();
    bool flag = false;
    if (key == "conc_first_all") flag = rep.concentration.first_hits_all;
    if (key == "conc_low_two_plus") flag = rep.concentration.low_band_two_plus;
    if (key == "matrix_no_single") flag = rep.concentration.matrix_no_single;
    r.measured = flag ? 1.0 : 0.0;
    r.pass = flag;
    r.band = "structural flag holds";
    return r;
  }
  if (key == "sigma_total_rtol") {
    if (rep.rows.empty()) return fail_missing();
    const double target = 8 * kPi * m;
    r.measured = std::abs(rep.rows.back().Sigma - target) / target;
    r.pass = r.measured <= val;
    r.band = "|Sigma - " + fmt(target) + "| <= " + fmt(val) + " rel";
    return r;
  }
  throw std::invalid_argument("config: unknown assertion key '" + key + "'");
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile f;
  f.text = text;
  std::string section;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t line_start = pos;
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') {
      if (pos > text.size()) break;
      continue;
    }
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3)
        throw ParseError(line_start, "config: malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw ParseError(line_start, "config: empty section name");
    } else {
      const std::size_t eq = t.find('=');
      if (eq == std::string::npos)
        throw ParseError(line_start, "config: expected key = value");
      const std::string key = trim(t.substr(0, eq));
      const std::string value = trim(t.substr(eq + 1));
      if (key.empty()) throw ParseError(line_start, "config: empty key");
      if (section.empty())
        throw ParseError(line_start, "config: key before any [section]");
      if (f.find(section, key))
        throw ParseError(line_start,
                         "config: duplicate key " + section + "." + key);
      f.entries.push_back({section, key, value});
    }
    if (pos > text.size()) break;
  }
  return f;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("config: cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

const std::string* ConfigFile::find(const std::string& section,
                                    const std::string& key) const {
  for (const Entry& e : entries)
    if (e.section == section && e.key == key) return &e.value;
  return nullptr;
}

StudyConfig StudyConfig::from_file(const ConfigFile& file) {
  StudyConfig c;
  bool ball_given = false;
  std::string start_raw;

  for (const ConfigFile::Entry& e : file.entries) {
    if (e.section == "study") {
      if (e.key == "name") c.name = e.value;
      else if (e.key == "domain") c.domain = Domain::parse(e.value);
      else if (e.key == "V") c.V = VExpr::parse(e.value);
      else if (e.key == "m") c.m = static_cast<int>(to_long(e));
      else if (e.key == "solver") c.solver = e.value;
      else if (e.key == "seed") c.seed = static_cast<unsigned>(to_long(e));
      else if (e.key == "multistart") c.multistart = static_cast<int>(to_long(e));
      else if (e.key == "find_critical") c.find_crit = to_long(e) != 0;
      else if (e.key == "start") start_raw = e.value;
      else throw std::invalid_argument("config: unknown key study." + e.key);
    } else if (e.section == "schedule") {
      if (e.key == "s_min") c.s_min = to_double(e);
      else if (e.key == "s_max") c.s_max = to_double(e);
      else if (e.key == "s_step") c.s_step = to_double(e);
      else throw std::invalid_argument("config: unknown key schedule." + e.key);
    } else if (e.section == "grid") {
      if (e.key == "q") c.q = to_double(e);
      else if (e.key == "n_inner") c.n_inner = static_cast<int>(to_long(e));
      else if (e.key == "h_max") c.h_max = to_double(e);
      else if (e.key == "n") c.grid_n = static_cast<int>(to_long(e));
      else if (e.key == "green_n") c.green_n = static_cast<int>(to_long(e));
      else if (e.key == "newton_tol") c.newton_tol = to_double(e);
      else if (e.key == "min_delta_cells") c.min_delta_cells = to_double(e);
      else throw std::invalid_argument("config: unknown key grid." + e.key);
    } else if (e.section == "eigen") {
      if (e.key == "count") c.eig_count = static_cast<int>(to_long(e));
      else if (e.key == "stride") c.eig_stride = static_cast<int>(to_long(e));
      else if (e.key == "ell_max") c.ell_max = static_cast<int>(to_long(e));
      else throw std::invalid_argument("config: unknown key eigen." + e.key);
    } else if (e.section == "diagnostics") {
      if (e.key == "ball_R") {
        c.row.ball_R = to_double(e);
        ball_given = true;
      } else if (e.key == "sens_radii") c.row.sens_radii = to_double_list(e);
      else if (e.key == "window") c.row.window = to_double(e);
      else if (e.key == "ff_lo") c.row.ff_lo = to_double(e);
      else if (e.key == "ff_hi") c.row.ff_hi = to_double(e);
      else if (e.key == "c_threshold") c.c_threshold = to_double(e);
      else
        throw std::invalid_argument("config: unknown key diagnostics." + e.key);
    } else if (e.section == "output") {
      if (e.key == "jsonl") c.out_jsonl = e.value;
      else if (e.key == "csv") c.out_csv = e.value;
      else if (e.key == "report") c.out_report = e.value;
      else throw std::invalid_argument("config: unknown key output." + e.key);
    } else if (e.section == "assertions") {
      if (!is_primary(e.key) && !is_param(e.key))
        throw std::invalid_argument("config: unknown assertion key '" + e.key +
                                    "'");
      c.assertions.push_back({e.key, to_double(e)});
    } else {
      throw std::invalid_argument("config: unknown section [" + e.section +
                                  "]");
    }
  }

  if (c.solver != "1d" && c.solver != "2d")
    throw std::invalid_argument("config: solver must be 1d or 2d");
  if (c.m < 1 || c.m > 8)
    throw std::invalid_argument("config: m must lie in [1, 8]");
  if (c.solver == "1d") {
    if (c.domain.kind != Domain::Kind::kDisk)
      throw std::invalid_argument("config: the 1d solver runs on the disk");
    if (c.m != 1)
      throw std::invalid_argument("config: the 1d solver is single-peak");
  }
  if (!(c.s_min > 0) || !(c.s_step > 0) || c.s_max < c.s_min)
    throw std::invalid_argument(
        "config: schedule must satisfy 0 < s_min <= s_max, s_step > 0");
  if (c.grid_n < 17 || c.green_n < 17)
    throw std::invalid_argument("config: grid sizes must be >= 17");
  if (c.n_inner < 4)
    throw std::invalid_argument("config: n_inner must be >= 4");
  if (!(c.h_max > 0) || c.newton_tol < 0 || c.min_delta_cells < 0)
    throw std::invalid_argument("config: bad grid parameters");
  if (c.eig_stride < 0)
    throw std::invalid_argument("config: eigen.stride must be >= 0");
  if (c.eig_stride > 0 && c.eig_count < 3 * c.m + 1)
    throw std::invalid_argument(
        "config: eigen.count must be >= 3m + 1 to cover the bands");
  if (c.eig_count < 1 || c.eig_count > 64)
    throw std::invalid_argument("config: eigen.count must lie in [1, 64]");
  if (c.ell_max < 0 || c.ell_max > 8)
    throw std::invalid_argument("config: eigen.ell_max must lie in [0, 8]");
  if (!(c.row.ball_R > 0) || !(c.row.window > 0) ||
      !(c.row.ff_lo < c.row.ff_hi) || !(c.c_threshold > 0))
    throw std::invalid_argument("config: bad diagnostics parameters");
  if (!ball_given && c.m >= 2) c.row.ball_R = 0.25;

  if (!start_raw.empty()) {
    const ConfigFile::Entry tmp{"study", "start", start_raw};
    const std::vector<double> xs = to_double_list(tmp);
    if (xs.size() != static_cast<std::size_t>(2 * c.m))
      throw std::invalid_argument("config: start needs 2m numbers");
    for (std::size_t i = 0; i + 1 < xs.size(); i += 2)
      c.start.push_back({xs[i], xs[i + 1]});
  } else if (c.m == 1) {
    c.start.push_back(
        {0.5 * (c.domain.x0 + c.domain.x1), 0.5 * (c.domain.y0 + c.domain.y1)});
  } else {
    throw std::invalid_argument("config: start is required for m >= 2");
  }

  c.config_hash = fnv1a(file.text);
  return c;
}

StudyConfig StudyConfig::load(const std::string& path) {
  return from_file(ConfigFile::load(path));
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& series,
                 FitModel model, FitAxis axis) {
  if (series.size() < 2)
    throw std::invalid_argument("fit_rate: need at least 2 points");
  std::vector<double> xs, ys;
  for (const auto& [lam, val] : series) {
    if (!(lam > 0))
      throw std::invalid_argument("fit_rate: lambda must be positive");
    const double lg = std::log(lam);
    double x = lg;
    if (axis == FitAxis::kInvAbsLogLambda) {
      if (!(std::abs(lg) > 0))
        throw std::invalid_argument("fit_rate: lambda = 1 has no log scale");
      x = std::log(1.0 / std::abs(lg));
    }
    if (model == FitModel::kPower) {
      if (!(std::abs(val) > 0))
        throw std::invalid_argument("fit_rate: zero value in a power fit");
      xs.push_back(x);
      ys.push_back(std::log(std::abs(val)));
    } else {
      if (!(lg * lg > 0))
        throw std::invalid_argument("fit_rate: lambda = 1 has no log scale");
      xs.push_back(x);
      ys.push_back(val * lg * lg);
    }
  }
  RateFit out;
  out.points = static_cast<int>(series.size());
  if (model == FitModel::kLogReciprocal) {
    out.value = mean_of(ys);
    out.stderr_ = sd_of(ys, out.value) / std::sqrt(static_cast<double>(ys.size()));
    return out;
  }
  const double xbar = mean_of(xs);
  double sxx = 0.0;
  for (double x : xs) sxx += (x - xbar) * (x - xbar);
  if (!(sxx > 1e-24))
    throw std::invalid_argument("fit_rate: degenerate series (no x spread)");
  const LineFit lf = fit_line(xs, ys);
  out.value = lf.slope;
  if (xs.size() > 2) {
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double ri = ys[i] - (lf.slope * xs[i] + lf.intercept);
      ss += ri * ri;
    }
    out.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 2) / sxx);
  }
  return out;
}

double symmetric_slice_max(const GreenOracle& oracle, const VExpr& V,
                           double margin) {
  if (!(margin > 0) || !(margin < 0.45))
    throw std::invalid_argument("slice scan: margin must lie in (0, 0.45)");
  auto f = [&](double t) {
    return eval_H(oracle, V, {{t, 0.0}, {-t, 0.0}});
  };
  const int n = 900;
  const double a = margin, b = 1.0 - margin;
  std::vector<double> fv(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) fv[static_cast<std::size_t>(i)] = f(a + (b - a) * i / n);
  int best = -1;
  for (int i = 1; i < n; ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    if (fv[k] > fv[k - 1] && fv[k] > fv[k + 1] &&
        (best < 0 || fv[k] > fv[static_cast<std::size_t>(best)]))
      best = i;
  }
  if (best < 0)
    throw NumericError("slice scan: no interior maximum of the pair slice");
  double lo = a + (b - a) * (best - 1) / n;
  double hi = a + (b - a) * (best + 1) / n;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > 1e-10) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = f(x1);
    }
  }
  return 0.5 * (lo + hi);
}

void emit_jsonl(const std::vector<DiagnosticsRow>& rows,
                const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("emit: cannot open " + path);
  for (const auto& row : rows) os << row.to_json() << '\n';
  os.flush();
  if (!os) throw IoError("emit: write failed for " + path);
}

void emit_csv(const std::vector<DiagnosticsRow>& rows, int m,
              const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("emit: cannot open " + path);
  os << DiagnosticsRow::csv_header(m) << '\n';
  for (const auto& row : rows) os << row.csv_line() << '\n';
  os.flush();
  if (!os) throw IoError("emit: write failed for " + path);
}

bool StudyReport::passed() const {
  for (const auto& a : assertions)
    if (!a.pass) return false;
  return true;
}

std::string StudyReport::to_json() const {
  njson o;
  o["schema"] = "glab-report-v1";
  o["name"] = name;
  o["solver"] = solver;
  o["config_hash"] = config_hash;
  o["m"] = system.points.size();
  o["points"] = rows.size();
  if (!rows.empty()) {
    o["s_last"] = rows.back().s;
    o["lambda_first"] = rows.front().lambda;
    o["lambda_last"] = rows.back().lambda;
    o["Sigma_last"] = rows.back().Sigma;
  }
  if (!stop_reason.empty()) o["stop_reason"] = stop_reason;
  if (has_t_scan) {
    o["t_star"] = t_star;
    o["t_scan"] = t_scan;
  }
  o["system"] = njson::parse(peaksystem_json(system));
  if (has_concentration) {
    njson c;
    c["peaks_hit"] = concentration.peaks_hit;
    c["first_hits_all"] = concentration.first_hits_all;
    c["low_band_two_plus"] = concentration.low_band_two_plus;
    c["matrix_no_single"] = concentration.matrix_no_single;
    o["concentration"] = c;
  }
  njson fj = njson::array();
  for (const auto& f : fits) {
    njson e;
    e["name"] = f.name;
    e["value"] = f.value;
    e["stderr"] = f.stderr_;
    e["points"] = f.points;
    fj.push_back(e);
  }
  o["fits"] = fj;
  njson aj = njson::array();
  for (const auto& a : assertions) {
    njson e;
    e["key"] = a.key;
    e["pass"] = a.pass;
    e["measured"] = a.measured;
    e["band"] = a.band;
    aj.push_back(e);
  }
  o["assertions"] = aj;
  o["pass"] = passed();
  return o.dump(2);
}

StudyReport run_study(const StudyConfig& cfg) {
  check_positive_V(cfg);

  StudyReport rep;
  rep.name = cfg.name;
  rep.solver = cfg.solver;
  rep.config_hash = cfg.config_hash;

  const GreenOracle oracle = make_oracle(cfg);

  std::vector<Pt> pts = cfg.start;
  if (cfg.find_crit) {
    CriticalOpts copts;
    copts.multistart = cfg.multistart;
    copts.seed = cfg.seed;
    pts = find_critical(oracle, cfg.V, pts, copts);
  }
  rep.system = assemble_system(oracle, cfg.V, pts);

  double h10_worst = kNaN;
  if (cfg.solver == "1d") {
    run_1d(cfg, oracle, rep, h10_worst);
  } else {
    run_2d(cfg, oracle, rep, h10_worst);
  }

  if (cfg.m == 2 && has_key(cfg, "tstar_tol")) {
    rep.t_star = std::abs(rep.system.points[0].x);
    rep.t_scan = symmetric_slice_max(oracle, cfg.V);
    rep.has_t_scan = true;
  }

  fill_concentration(cfg, rep);
  compute_fits(cfg, rep, h10_worst);
  for (const auto& [key, val] : cfg.assertions) {
    if (is_param(key)) continue;
    rep.assertions.push_back(eval_assertion(cfg, rep, h10_worst, key, val));
  }

  if (!cfg.out_jsonl.empty()) emit_jsonl(rep.rows, cfg.out_jsonl);
  if (!cfg.out_csv.empty()) emit_csv(rep.rows, cfg.m, cfg.out_csv);
  if (!cfg.out_report.empty()) {
    std::ofstream os(cfg.out_report, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("emit: cannot open " + cfg.out_report);
    os << rep.to_json() << '\n';
    os.flush();
    if (!os) throw IoError("emit: write failed for " + cfg.out_report);
  }
  return rep;
}

}  // namespace glab
