#pragma once
// Study harness: INI-style configuration, branch orchestration, rate fits,
// assertion evaluation, and report emission.
//
// A study runs one continuation branch (radial or planar), assembles a
// diagnostics row per branch point, fits the configured decay rates, and
// evaluates the [assertions] section. Repeated runs of the same
// configuration produce byte-identical output files.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "glab/diagnostics.hpp"
#include "glab/green.hpp"
#include "glab/grid2d.hpp"
#include "glab/hamiltonian.hpp"
#include "glab/vexpr.hpp"

namespace glab {

// Minimal INI reader: [section] headers, key = value lines, full-line # or ;
// comments. Entries keep file order; a key may appear once per section.
struct ConfigFile {
  struct Entry {
    std::string section, key, value;
  };
  std::vector<Entry> entries;
  std::string text;  // raw file content, hashed into reports

  static ConfigFile parse(const std::string& text);  // throws ParseError
  static ConfigFile load(const std::string& path);   // throws IoError

  const std::string* find(const std::string& section,
                          const std::string& key) const;
};

struct StudyConfig {
  std::string name = "study";
  Domain domain = Domain::disk();
  VExpr V = VExpr::parse("1");
  int m = 1;
  std::string solver = "1d";  // "1d" | "2d"
  std::vector<Pt> start;      // critical-point search start, one per peak
  bool find_crit = true;      // refine the start by a critical-point search
  int multistart = 0;
  unsigned seed = 20260816;

  // Amplitude schedule s = s_min, s_min + s_step, ..., <= s_max.
  double s_min = 1.0, s_max = 40.0, s_step = 0.5;

  // Radial grid (1d).
  double q = 1.06;
  int n_inner = 48;
  double h_max = 1.0 / 256.0;
  // Planar grid (2d) and numeric Green resolution for non-disk domains.
  int grid_n = 257;
  int green_n = 129;
  double newton_tol = 0.0;        // 0 keeps the solver default
  double min_delta_cells = 0.0;   // 2d resolution guard; 0 keeps the default

  // Eigensolves: every stride-th point plus the last (0 = never). K counts
  // eigenpairs with multiplicity and must cover the structural bands,
  // K >= 3m + 1.
  int eig_count = 4;
  int eig_stride = 1;
  int ell_max = 4;  // angular indices scanned in 1d

  RowOpts row;                // ball radius, window, far-field band
  double c_threshold = 0.1;   // concentration threshold on |c_hat|

  std::string out_jsonl, out_csv, out_report;

  // [assertions] entries in file order; keys are validated against the menu.
  std::vector<std::pair<std::string, double>> assertions;
  std::uint64_t config_hash = 0;

  static StudyConfig from_file(const ConfigFile& file);
  static StudyConfig load(const std::string& path);
};

// Least-squares rate fit over a (lambda, value) series.
//   kPower:         log |value| against the axis; value is the exponent.
//   kLogReciprocal: value * (log lambda)^2 averaged; value is the constant.
// Throws std::invalid_argument on short, degenerate, or zero-valued series.
enum class FitModel { kPower, kLogReciprocal };
enum class FitAxis { kLambda, kInvAbsLogLambda };
struct RateFit {
  double value = 0.0;
  double stderr_ = 0.0;
  int points = 0;
};
RateFit fit_rate(const std::vector<std::pair<double, double>>& series,
                 FitModel model, FitAxis axis = FitAxis::kLambda);

struct FitSummary {
  std::string name;
  double value = 0.0;
  double stderr_ = 0.0;
  int points = 0;
};

struct AssertionResult {
  std::string key;
  bool pass = false;
  double measured = 0.0;
  std::string band;  // acceptance band, human-readable
};

struct StudyReport {
  std::string name, solver;
  std::uint64_t config_hash = 0;
  PeakSystem system;
  std::vector<DiagnosticsRow> rows;
  std::vector<FitSummary> fits;
  std::vector<AssertionResult> assertions;
  ConcentrationReport concentration;  // deepest eigensolved point (2d)
  bool has_concentration = false;
  std::string stop_reason;  // early-stop reason of a 2d branch, else empty
  double t_star = 0.0, t_scan = 0.0;  // symmetric-pair location + scan check
  bool has_t_scan = false;

  bool passed() const;
  int exit_code() const { return passed() ? 0 : 2; }
  std::string to_json() const;
};

// Runs the configured study and writes the configured output files.
StudyReport run_study(const StudyConfig& cfg);

// Emission building blocks (run_study calls these for [output] paths).
void emit_jsonl(const std::vector<DiagnosticsRow>& rows,
                const std::string& path);
void emit_csv(const std::vector<DiagnosticsRow>& rows, int m,
              const std::string& path);

// Location of the interior local maximum of t -> H((t,0), (-t,0)) on the
// disk, by grid scan plus golden-section refinement. The collision and
// boundary blow-ups are excluded; throws NumericError when no interior
// maximum exists in (margin, 1 - margin).
double symmetric_slice_max(const GreenOracle& oracle, const VExpr& V,
                           double margin = 0.05);

}  // namespace glab
