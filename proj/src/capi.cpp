#include "glab.h"

#include <cstdlib>
#include <cstring>
#include <ios>
#include <string>

#include "glab/green.hpp"
#include "glab/hamiltonian.hpp"
#include "glab/harness.hpp"
#include "glab/solver1d.hpp"
#include "glab/vexpr.hpp"
#include "json.hpp"

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

glab_status fail(glab_status st, const std::string& msg) {
  g_last_error = msg;
  return st;
}

// Runs fn under the exception-to-status mapping shared by every entry point.
template <typename Fn>
glab_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return GLAB_OK;
  } catch (const glab::ParseError& e) {
    return fail(GLAB_ERR_PARSE, e.what());
  } catch (const glab::DomainError& e) {
    return fail(GLAB_ERR_DOMAIN, e.what());
  } catch (const glab::IoError& e) {
    return fail(GLAB_ERR_IO, e.what());
  } catch (const glab::NumericError& e) {
    return fail(GLAB_ERR_NUMERIC, e.what());
  } catch (const std::ios_base::failure& e) {
    return fail(GLAB_ERR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(GLAB_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(GLAB_ERR_NUMERIC, e.what());
  }
}

glab_status null_arg(const char* name) {
  return fail(GLAB_ERR_INVALID_ARGUMENT, std::string("null argument: ") + name);
}

glab::GreenOracle oracle_for(const char* domain, int grid_n) {
  const glab::Domain dom = glab::Domain::parse(domain ? domain : "disk");
  if (grid_n > 0) return glab::GreenOracle::numeric(dom, grid_n);
  if (dom.kind != glab::Domain::Kind::kDisk)
    throw glab::DomainError("the closed-form oracle exists on the disk only");
  return glab::GreenOracle::exact_disk();
}

}  // namespace

struct glab_vexpr {
  glab::VExpr v;
};

struct glab_green {
  glab::GreenOracle g;
};

extern "C" {

const char* glab_version(void) { return "1.0.0"; }

const char* glab_last_error(void) { return g_last_error.c_str(); }

void glab_string_free(char* s) { std::free(s); }

glab_status glab_vexpr_parse(const char* src, glab_vexpr** out) {
  if (!src) return null_arg("src");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new glab_vexpr{glab::VExpr::parse(src)}; });
}

glab_status glab_vexpr_eval(const glab_vexpr* e, double x1, double x2,
                            double* out) {
  if (!e) return null_arg("e");
  if (!out) return null_arg("out");
  return guarded([&] { *out = e->v.eval({x1, x2}); });
}

glab_status glab_vexpr_grad_log(const glab_vexpr* e, double x1, double x2,
                                double step, double* g1, double* g2) {
  if (!e) return null_arg("e");
  if (!g1 || !g2) return null_arg("g1/g2");
  if (!(step > 0))
    return fail(GLAB_ERR_INVALID_ARGUMENT, "grad_log: step must be positive");
  return guarded([&] {
    const glab::Pt g = e->v.grad_log({x1, x2}, step);
    *g1 = g.x;
    *g2 = g.y;
  });
}

glab_status glab_vexpr_to_string(const glab_vexpr* e, char** out) {
  if (!e) return null_arg("e");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    *out = dup_string(e->v.to_string());
    if (!*out) throw glab::NumericError("out of memory");
  });
}

void glab_vexpr_free(glab_vexpr* e) { delete e; }

glab_status glab_green_create(const char* domain, int grid_n,
                              glab_green** out) {
  if (!out) return null_arg("out");
  *out = nullptr;
  if (grid_n < 0)
    return fail(GLAB_ERR_INVALID_ARGUMENT, "grid_n must be >= 0");
  return guarded([&] { *out = new glab_green{oracle_for(domain, grid_n)}; });
}

glab_status glab_green_G(const glab_green* g, double x1, double x2, double y1,
                         double y2, double* out) {
  if (!g) return null_arg("g");
  if (!out) return null_arg("out");
  return guarded([&] { *out = g->g.G({x1, x2}, {y1, y2}); });
}

glab_status glab_green_K(const glab_green* g, double x1, double x2, double y1,
                         double y2, double* out) {
  if (!g) return null_arg("g");
  if (!out) return null_arg("out");
  return guarded([&] { *out = g->g.K({x1, x2}, {y1, y2}); });
}

glab_status glab_green_R(const glab_green* g, double x1, double x2,
                         double* out) {
  if (!g) return null_arg("g");
  if (!out) return null_arg("out");
  return guarded([&] { *out = g->g.R({x1, x2}); });
}

glab_status glab_green_grad_R(const glab_green* g, double x1, double x2,
                              double* g1, double* g2) {
  if (!g) return null_arg("g");
  if (!g1 || !g2) return null_arg("g1/g2");
  return guarded([&] {
    const glab::Pt gr = g->g.grad_R({x1, x2});
    *g1 = gr.x;
    *g2 = gr.y;
  });
}

glab_status glab_green_grad_G_x(const glab_green* g, double x1, double x2,
                                double y1, double y2, double* g1, double* g2) {
  if (!g) return null_arg("g");
  if (!g1 || !g2) return null_arg("g1/g2");
  return guarded([&] {
    const glab::Pt gr = g->g.grad_G_x({x1, x2}, {y1, y2});
    *g1 = gr.x;
    *g2 = gr.y;
  });
}

glab_status glab_green_export_K_csv(const glab_green* g, double y1, double y2,
                                    const char* path) {
  if (!g) return null_arg("g");
  if (!path) return null_arg("path");
  return guarded([&] { g->g.export_K_csv({y1, y2}, path); });
}

void glab_green_free(glab_green* g) { delete g; }

glab_status glab_find_critical(const char* domain, const char* V, int grid_n,
                               double* xy, int m, char** out_json) {
  if (!xy) return null_arg("xy");
  if (m < 1) return fail(GLAB_ERR_INVALID_ARGUMENT, "m must be >= 1");
  if (out_json) *out_json = nullptr;
  return guarded([&] {
    const glab::GreenOracle oracle = oracle_for(domain, grid_n);
    const glab::VExpr vx = glab::VExpr::parse(V ? V : "1");
    std::vector<glab::Pt> pts;
    for (int j = 0; j < m; ++j) pts.push_back({xy[2 * j], xy[2 * j + 1]});
    pts = glab::find_critical(oracle, vx, pts);
    for (int j = 0; j < m; ++j) {
      xy[2 * j] = pts[static_cast<std::size_t>(j)].x;
      xy[2 * j + 1] = pts[static_cast<std::size_t>(j)].y;
    }
    if (out_json) {
      const glab::PeakSystem sys = glab::assemble_system(oracle, vx, pts);
      *out_json = dup_string(glab::peaksystem_json(sys));
      if (!*out_json) throw glab::NumericError("out of memory");
    }
  });
}

glab_status glab_branch1d_run(const glab_branch1d_params* p,
                              char** summary_json) {
  if (!p) return null_arg("p");
  if (!summary_json) return null_arg("summary_json");
  *summary_json = nullptr;
  return guarded([&] {
    glab::StudyConfig cfg;
    cfg.name = "branch1d";
    cfg.solver = "1d";
    cfg.find_crit = false;
    cfg.V = glab::VExpr::parse(p->V ? p->V : "1");
    cfg.s_min = p->s_min;
    cfg.s_max = p->s_max;
    cfg.s_step = p->s_step;
    if (p->q > 0) cfg.q = p->q;
    if (p->n_inner > 0) cfg.n_inner = p->n_inner;
    if (p->h_max > 0) cfg.h_max = p->h_max;
    if (p->eig_count > 0) cfg.eig_count = p->eig_count;
    cfg.eig_stride = p->eig_stride > 0 ? p->eig_stride : 0;
    if (p->ell_max > 0) cfg.ell_max = p->ell_max;
    if (p->ball_R > 0) cfg.row.ball_R = p->ball_R;
    if (p->out_jsonl) cfg.out_jsonl = p->out_jsonl;
    if (p->out_csv) cfg.out_csv = p->out_csv;
    cfg.start.push_back({0.0, 0.0});
    const glab::StudyReport rep = glab::run_study(cfg);
    *summary_json = dup_string(rep.to_json());
    if (!*summary_json) throw glab::NumericError("out of memory");
  });
}

glab_status glab_branch2d_run(const glab_branch2d_params* p,
                              char** summary_json) {
  if (!p) return null_arg("p");
  if (!summary_json) return null_arg("summary_json");
  if (!p->start_xy) return null_arg("start_xy");
  if (p->m < 1) return fail(GLAB_ERR_INVALID_ARGUMENT, "m must be >= 1");
  *summary_json = nullptr;
  return guarded([&] {
    glab::StudyConfig cfg;
    cfg.name = "branch2d";
    cfg.solver = "2d";
    cfg.domain = glab::Domain::parse(p->domain ? p->domain : "disk");
    cfg.V = glab::VExpr::parse(p->V ? p->V : "1");
    cfg.m = p->m;
    for (int j = 0; j < p->m; ++j)
      cfg.start.push_back({p->start_xy[2 * j], p->start_xy[2 * j + 1]});
    cfg.find_crit = p->find_critical != 0;
    cfg.s_min = p->s_min;
    cfg.s_max = p->s_max;
    cfg.s_step = p->s_step;
    if (p->grid_n > 0) cfg.grid_n = p->grid_n;
    if (p->green_n > 0) cfg.green_n = p->green_n;
    if (p->eig_count > 0) cfg.eig_count = p->eig_count;
    cfg.eig_stride = p->eig_stride > 0 ? p->eig_stride : 0;
    cfg.row.ball_R = p->ball_R > 0 ? p->ball_R : (p->m == 1 ? 0.4 : 0.25);
    if (p->out_jsonl) cfg.out_jsonl = p->out_jsonl;
    if (p->out_csv) cfg.out_csv = p->out_csv;
    const glab::StudyReport rep = glab::run_study(cfg);
    *summary_json = dup_string(rep.to_json());
    if (!*summary_json) throw glab::NumericError("out of memory");
  });
}

glab_status glab_eigs_run(const glab_eigs_params* p, char** out_json) {
  if (!p) return null_arg("p");
  if (!out_json) return null_arg("out_json");
  *out_json = nullptr;
  return guarded([&] {
    glab::Solver1DOpts opts;
    if (p->q > 0) opts.q = p->q;
    if (p->n_inner > 0) opts.n_inner = p->n_inner;
    if (p->h_max > 0) opts.h_max = p->h_max;
    const glab::RadialSolver solver(glab::VExpr::parse(p->V ? p->V : "1"),
                                    opts);
    glab::BranchPoint1D bp = solver.solve_at(p->s);
    const int ell_max = p->ell_max > 0 ? p->ell_max : 4;
    const int count = p->count > 0 ? p->count : 4;
    solver.assemble_spectrum(bp, ell_max, count);
    nlohmann::ordered_json o;
    o["s"] = bp.s;
    o["lambda"] = bp.lambda;
    o["delta"] = bp.delta;
    o["Sigma"] = bp.Sigma;
    nlohmann::ordered_json modes = nlohmann::ordered_json::array();
    for (const glab::RadialMode& md : bp.modes) {
      nlohmann::ordered_json e;
      e["ell"] = md.ell;
      e["k"] = md.k;
      e["multiplicity"] = md.multiplicity;
      e["mu"] = md.mu;
      e["mu_ext"] = md.mu_ext;
      modes.push_back(e);
    }
    o["modes"] = modes;
    *out_json = dup_string(o.dump(2));
    if (!*out_json) throw glab::NumericError("out of memory");
  });
}

glab_status glab_study_run(const char* config_path, char** report_json) {
  if (!config_path) return null_arg("config_path");
  if (!report_json) return null_arg("report_json");
  *report_json = nullptr;
  std::string failed_keys;
  const glab_status rc = guarded([&] {
    const glab::StudyConfig cfg = glab::StudyConfig::load(config_path);
    const glab::StudyReport rep = glab::run_study(cfg);
    *report_json = dup_string(rep.to_json());
    if (!*report_json) throw glab::NumericError("out of memory");
    for (const glab::AssertionResult& a : rep.assertions)
      if (!a.pass) failed_keys += (failed_keys.empty() ? "" : ", ") + a.key;
  });
  if (rc != GLAB_OK) return rc;
  if (!failed_keys.empty())
    return fail(GLAB_ERR_ASSERTION, "assertions failed: " + failed_keys);
  return GLAB_OK;
}

}  // extern "C"
