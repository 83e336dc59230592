#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "glab.h"

namespace {

int exit_code(glab_status st) {
  if (st == GLAB_OK) return 0;
  if (st == GLAB_ERR_ASSERTION) return 2;
  return 1;
}

int report_error(glab_status st) {
  std::fprintf(stderr, "error: %s\n", glab_last_error());
  return exit_code(st);
}

void print_owned(char* s) {
  if (!s) return;
  std::printf("%s\n", s);
  glab_string_free(s);
}

struct GreenArgs {
  std::string domain = "disk";
  int grid_n = 0;
  std::vector<double> coords;
  std::string export_k;
};

int run_green(const GreenArgs& a) {
  if (a.coords.size() != 2 && a.coords.size() != 4) {
    std::fprintf(stderr, "error: expected 2 coordinates (x) or 4 (x y)\n");
    return 1;
  }
  glab_green* g = nullptr;
  glab_status st = glab_green_create(a.domain.c_str(), a.grid_n, &g);
  if (st != GLAB_OK) return report_error(st);
  const double x1 = a.coords[0], x2 = a.coords[1];
  double val = 0, g1 = 0, g2 = 0;
  int rc = 0;
  if ((st = glab_green_R(g, x1, x2, &val)) != GLAB_OK ||
      (st = glab_green_grad_R(g, x1, x2, &g1, &g2)) != GLAB_OK) {
    rc = report_error(st);
  } else {
    std::printf("R(%.6g, %.6g) = %.12g\n", x1, x2, val);
    std::printf("grad R = (%.12g, %.12g)\n", g1, g2);
    if (a.coords.size() == 4) {
      const double y1 = a.coords[2], y2 = a.coords[3];
      double Gv = 0, Kv = 0;
      if ((st = glab_green_G(g, x1, x2, y1, y2, &Gv)) != GLAB_OK ||
          (st = glab_green_K(g, x1, x2, y1, y2, &Kv)) != GLAB_OK) {
        rc = report_error(st);
      } else {
        std::printf("G(x, y) = %.12g\n", Gv);
        std::printf("K(x, y) = %.12g\n", Kv);
      }
    }
    if (rc == 0 && !a.export_k.empty()) {
      const double y1 = a.coords.size() == 4 ? a.coords[2] : x1;
      const double y2 = a.coords.size() == 4 ? a.coords[3] : x2;
      if ((st = glab_green_export_K_csv(g, y1, y2, a.export_k.c_str())) !=
          GLAB_OK)
        rc = report_error(st);
      else
        std::printf("wrote %s\n", a.export_k.c_str());
    }
  }
  glab_green_free(g);
  return rc;
}

struct HamArgs {
  std::string domain = "disk";
  std::string V = "1";
  int grid_n = 0;
  std::vector<double> start;
};

int run_hamiltonian(const HamArgs& a) {
  if (a.start.empty() || a.start.size() % 2 != 0) {
    std::fprintf(stderr, "error: --start needs 2m coordinates\n");
    return 1;
  }
  std::vector<double> xy = a.start;
  const int m = static_cast<int>(xy.size() / 2);
  char* json = nullptr;
  const glab_status st = glab_find_critical(a.domain.c_str(), a.V.c_str(),
                                            a.grid_n, xy.data(), m, &json);
  if (st != GLAB_OK) return report_error(st);
  print_owned(json);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Peak-system laboratory for planar Liouville problems"};
  app.set_version_flag("--version", glab_version());
  app.require_subcommand(1);

  GreenArgs ga;
  CLI::App* green = app.add_subcommand(
      "green", "Evaluate the Green function, its regular part, and gradients");
  green->add_option("--domain", ga.domain, "disk, or: rect X0 X1 Y0 Y1");
  green->add_option("--grid-n", ga.grid_n,
                    "FD grid size for the numeric oracle (0 = closed form)");
  green->add_option("coords", ga.coords, "x1 x2 [y1 y2]")->expected(2, 4);
  green->add_option("--export-k", ga.export_k,
                    "write K(., y) on a grid to this CSV file");

  HamArgs ha;
  CLI::App* ham = app.add_subcommand(
      "hamiltonian", "Refine peak locations to a critical point and print "
                     "the assembled peak system as JSON");
  ham->add_option("--domain", ha.domain, "disk, or: rect X0 X1 Y0 Y1");
  ham->add_option("--V", ha.V, "weight expression, e.g. exp(1 - abs2(x))");
  ham->add_option("--grid-n", ha.grid_n,
                  "FD grid size for the numeric oracle (0 = closed form)");
  ham->add_option("--start", ha.start, "initial peak coordinates x1 y1 ...")
      ->expected(-1);

  glab_branch1d_params b1{};
  std::string b1_V = "1", b1_jsonl, b1_csv;
  b1.s_min = 1.0;
  b1.s_max = 40.0;
  b1.s_step = 0.5;
  CLI::App* br1 = app.add_subcommand(
      "branch1d", "Continue the radial branch on the unit disk in v(0)");
  br1->add_option("--V", b1_V, "radially symmetric weight expression");
  br1->add_option("--s-min", b1.s_min, "first value of v(0)");
  br1->add_option("--s-max", b1.s_max, "last value of v(0)");
  br1->add_option("--s-step", b1.s_step, "step in v(0)");
  br1->add_option("--q", b1.q, "radial mesh grading factor");
  br1->add_option("--n-inner", b1.n_inner, "cells across the bubble core");
  br1->add_option("--h-max", b1.h_max, "outer mesh width cap");
  br1->add_option("--eig-count", b1.eig_count, "eigenvalues per point");
  br1->add_option("--eig-stride", b1.eig_stride,
                  "solve eigenproblems every k-th point (0 = never)");
  br1->add_option("--ell-max", b1.ell_max, "largest angular index");
  br1->add_option("--ball-R", b1.ball_R, "radius for local mass diagnostics");
  br1->add_option("--jsonl", b1_jsonl, "write one JSON row per point");
  br1->add_option("--csv", b1_csv, "write the flat table");

  glab_branch2d_params b2{};
  std::string b2_domain = "disk", b2_V = "1", b2_jsonl, b2_csv;
  std::vector<double> b2_start;
  bool b2_no_crit = false;
  b2.m = 1;
  b2.find_critical = 1;
  b2.s_min = 2.0;
  b2.s_max = 10.0;
  b2.s_step = 0.5;
  CLI::App* br2 = app.add_subcommand(
      "branch2d", "Continue a concentrating branch on a 2-D grid");
  br2->add_option("--domain", b2_domain, "disk, or: rect X0 X1 Y0 Y1");
  br2->add_option("--V", b2_V, "weight expression");
  br2->add_option("--m", b2.m, "number of peaks");
  br2->add_option("--start", b2_start, "initial peak coordinates x1 y1 ...")
      ->expected(-1);
  br2->add_flag("--no-find-critical", b2_no_crit,
                "keep the start points instead of refining them");
  br2->add_option("--s-min", b2.s_min, "first value of max v");
  br2->add_option("--s-max", b2.s_max, "last value of max v");
  br2->add_option("--s-step", b2.s_step, "step in max v");
  br2->add_option("--grid-n", b2.grid_n, "nodes per side of the FD grid");
  br2->add_option("--green-n", b2.green_n,
                  "FD grid for the numeric Green oracle (0 = closed form)");
  br2->add_option("--eig-count", b2.eig_count, "eigenvalues per point");
  br2->add_option("--eig-stride", b2.eig_stride,
                  "solve eigenproblems every k-th point (0 = never)");
  br2->add_option("--ball-R", b2.ball_R, "radius for local mass diagnostics");
  br2->add_option("--jsonl", b2_jsonl, "write one JSON row per point");
  br2->add_option("--csv", b2_csv, "write the flat table");

  glab_eigs_params ep{};
  std::string ep_V = "1";
  ep.s = 10.0;
  CLI::App* eigs = app.add_subcommand(
      "eigs", "Solve one radial branch point and print its linearized modes");
  eigs->add_option("--V", ep_V, "radially symmetric weight expression");
  eigs->add_option("--s", ep.s, "value of v(0)");
  eigs->add_option("--ell-max", ep.ell_max, "largest angular index");
  eigs->add_option("--count", ep.count, "eigenvalues to keep");
  eigs->add_option("--q", ep.q, "radial mesh grading factor");
  eigs->add_option("--n-inner", ep.n_inner, "cells across the bubble core");
  eigs->add_option("--h-max", ep.h_max, "outer mesh width cap");

  std::string verify_cfg;
  CLI::App* verify = app.add_subcommand(
      "verify", "Run a study config and gate on its assertions (exit 2 on "
                "failure)");
  verify->add_option("config", verify_cfg, "study config file")->required();

  std::string report_cfg;
  CLI::App* report = app.add_subcommand(
      "report", "Run a study config and print the report without gating");
  report->add_option("config", report_cfg, "study config file")->required();

  CLI11_PARSE(app, argc, argv);

  if (green->parsed()) return run_green(ga);
  if (ham->parsed()) return run_hamiltonian(ha);

  if (br1->parsed()) {
    b1.V = b1_V.c_str();
    b1.out_jsonl = b1_jsonl.empty() ? nullptr : b1_jsonl.c_str();
    b1.out_csv = b1_csv.empty() ? nullptr : b1_csv.c_str();
    char* json = nullptr;
    const glab_status st = glab_branch1d_run(&b1, &json);
    if (st != GLAB_OK) return report_error(st);
    print_owned(json);
    return 0;
  }

  if (br2->parsed()) {
    if (b2_start.empty() || b2_start.size() != 2 * static_cast<size_t>(b2.m)) {
      std::fprintf(stderr, "error: --start needs exactly 2m coordinates\n");
      return 1;
    }
    b2.domain = b2_domain.c_str();
    b2.V = b2_V.c_str();
    b2.start_xy = b2_start.data();
    b2.find_critical = b2_no_crit ? 0 : 1;
    b2.out_jsonl = b2_jsonl.empty() ? nullptr : b2_jsonl.c_str();
    b2.out_csv = b2_csv.empty() ? nullptr : b2_csv.c_str();
    char* json = nullptr;
    const glab_status st = glab_branch2d_run(&b2, &json);
    if (st != GLAB_OK) return report_error(st);
    print_owned(json);
    return 0;
  }

  if (eigs->parsed()) {
    ep.V = ep_V.c_str();
    char* json = nullptr;
    const glab_status st = glab_eigs_run(&ep, &json);
    if (st != GLAB_OK) return report_error(st);
    print_owned(json);
    return 0;
  }

  if (verify->parsed() || report->parsed()) {
    const std::string& path = verify->parsed() ? verify_cfg : report_cfg;
    char* json = nullptr;
    const glab_status st = glab_study_run(path.c_str(), &json);
    print_owned(json);
    if (st == GLAB_OK) return 0;
    if (st == GLAB_ERR_ASSERTION && report->parsed()) {
      std::fprintf(stderr, "note: %s\n", glab_last_error());
      return 0;
    }
    return report_error(st);
  }

  return 1;
}
