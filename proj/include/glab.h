#ifndef GLAB_H
#define GLAB_H

/*
 * C interface to the blow-up branch laboratory.
 *
 * Every call returns a glab_status; on failure glab_last_error() holds a
 * thread-local message describing what went wrong. Strings returned through
 * char** out-parameters are heap-allocated; release them with
 * glab_string_free. Handles are opaque and freed by their *_free function.
 */

#ifdef __cplusplus
extern "C" {
#endif

typedef enum glab_status {
  GLAB_OK = 0,
  GLAB_ERR_INVALID_ARGUMENT = 1, /* bad parameter or configuration */
  GLAB_ERR_PARSE = 2,            /* expression or config text rejected */
  GLAB_ERR_DOMAIN = 3,           /* point outside the domain, bad domain spec */
  GLAB_ERR_NUMERIC = 4,          /* solver or quadrature failure */
  GLAB_ERR_IO = 5,               /* file could not be read or written */
  GLAB_ERR_ASSERTION = 6         /* study ran, but an assertion failed */
} glab_status;

const char* glab_version(void);

/* Message of the most recent failure on this thread ("" when none). */
const char* glab_last_error(void);

void glab_string_free(char* s);

/* ---- coefficient expressions ---- */

typedef struct glab_vexpr glab_vexpr;

glab_status glab_vexpr_parse(const char* src, glab_vexpr** out);
glab_status glab_vexpr_eval(const glab_vexpr* e, double x1, double x2,
                            double* out);
/* Gradient of log V by central differences with the given step. */
glab_status glab_vexpr_grad_log(const glab_vexpr* e, double x1, double x2,
                                double step, double* g1, double* g2);
/* Canonical serialization; parsing it reproduces the same tree. */
glab_status glab_vexpr_to_string(const glab_vexpr* e, char** out);
void glab_vexpr_free(glab_vexpr* e);

/* ---- Green function oracle ---- */

typedef struct glab_green glab_green;

/* domain: "disk" or "rect X0 X1 Y0 Y1". grid_n > 0 selects the finite
 * difference oracle at that resolution; grid_n = 0 selects the closed form,
 * which is available on the disk only. */
glab_status glab_green_create(const char* domain, int grid_n,
                              glab_green** out);
glab_status glab_green_G(const glab_green* g, double x1, double x2, double y1,
                         double y2, double* out);
/* Regular part K(x, y) = G(x, y) + log|x - y| / 2 pi. */
glab_status glab_green_K(const glab_green* g, double x1, double x2, double y1,
                         double y2, double* out);
/* Robin function R(x) = K(x, x). */
glab_status glab_green_R(const glab_green* g, double x1, double x2,
                         double* out);
glab_status glab_green_grad_R(const glab_green* g, double x1, double x2,
                              double* g1, double* g2);
/* Gradient of G in its first argument. */
glab_status glab_green_grad_G_x(const glab_green* g, double x1, double x2,
                                double y1, double y2, double* g1, double* g2);
/* Writes K(., y) sampled over the domain as CSV (x1, x2, K). */
glab_status glab_green_export_K_csv(const glab_green* g, double y1, double y2,
                                    const char* path);
void glab_green_free(glab_green* g);

/* ---- peak systems ---- */

/* Refines xy = x1,y1,...,xm,ym to a critical point of the m-point
 * functional (in place) and, when out_json is non-NULL, returns the
 * assembled system: interaction matrix, its spectrum, scaling constants.
 * grid_n as in glab_green_create. */
glab_status glab_find_critical(const char* domain, const char* V, int grid_n,
                               double* xy, int m, char** out_json);

/* ---- branch runs ---- */

/* Radial branch on the unit disk. Zero/NULL members select defaults. */
typedef struct glab_branch1d_params {
  const char* V;          /* coefficient expression; NULL = "1" */
  double s_min, s_max, s_step;
  double q;               /* mesh grading ratio */
  int n_inner;            /* cells across the bubble scale */
  double h_max;
  int eig_count;          /* eigenpairs kept per eigensolved point */
  int eig_stride;         /* eigensolve every k-th point; 0 = never */
  int ell_max;            /* angular indices scanned */
  double ball_R;          /* concentration ball radius */
  const char* out_jsonl;  /* optional row output */
  const char* out_csv;
} glab_branch1d_params;

glab_status glab_branch1d_run(const glab_branch1d_params* p,
                              char** summary_json);

/* Planar branch. start_xy (2m entries) seeds the peak configuration. */
typedef struct glab_branch2d_params {
  const char* domain;     /* NULL = "disk" */
  const char* V;
  int m;
  const double* start_xy;
  int find_critical;      /* nonzero: refine start by the critical search */
  double s_min, s_max, s_step;
  int grid_n;             /* nodes per side; 0 = 257 */
  int green_n;            /* numeric Green resolution; 0 = 129 */
  int eig_count;
  int eig_stride;
  double ball_R;
  const char* out_jsonl;
  const char* out_csv;
} glab_branch2d_params;

glab_status glab_branch2d_run(const glab_branch2d_params* p,
                              char** summary_json);

/* Modes of the radial linearization at a single amplitude. */
typedef struct glab_eigs_params {
  const char* V;
  double s;
  int ell_max;
  int count;
  double q;
  int n_inner;
  double h_max;
} glab_eigs_params;

glab_status glab_eigs_run(const glab_eigs_params* p, char** out_json);

/* ---- studies ---- */

/* Loads the config file, runs the study, writes its configured outputs, and
 * returns the report JSON. On GLAB_ERR_ASSERTION the study completed and the
 * report (with the failing checks) is still returned; other statuses mean
 * the run aborted. */
glab_status glab_study_run(const char* config_path, char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* GLAB_H */
