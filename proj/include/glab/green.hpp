#pragma once
// Green function oracle for the Dirichlet Laplacian (-Δ) on a planar domain.
//
//   G(x, y) = -(1/2π) log|x - y| + K(x, y),   G = 0 on the boundary,
//   K(·, y) harmonic,  R(x) = K(x, x)  (Robin function).
//
// Two backings: closed forms on the unit disk, and a grid solve of the
// harmonic part on a rectangle or on the disk (for cross-checks). Numeric
// regular-part fields are cached per source point; the factorization is
// built once per oracle.

#include <Eigen/Sparse>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "glab/grid2d.hpp"
#include "glab/numerics.hpp"

namespace glab {

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class GreenOracle {
 public:
  // Closed forms on the unit disk.
  static GreenOracle exact_disk();
  // Grid-backed oracle; n is the nodes-per-side of the bounding-box grid.
  static GreenOracle numeric(Domain dom, int n);

  bool is_exact() const { return !grid_; }
  const Domain& domain() const { return dom_; }
  int grid_n() const { return grid_ ? grid_->n() : 0; }

  double G(Pt x, Pt y) const;
  double K(Pt x, Pt y) const;
  double R(Pt x) const;
  Pt grad_R(Pt x) const;
  Pt grad_G_x(Pt x, Pt y) const;  // gradient in the first argument

  // Pre-solves the regular-part fields for the given sources (and the
  // perturbed sources the gradient stencils need). After warm-up, queries at
  // those sources are read-only.
  void warm_up(const std::vector<Pt>& sources);
  // Writes the regular-part field K(·, y) as CSV rows "x1,x2,K".
  void export_K_csv(Pt y, const std::string& path) const;

  // Step used by gradient stencils: half a cell (numeric), 1e-6 (exact).
  double gradient_step() const;

 private:
  GreenOracle() = default;
  void require_inside(Pt p, const char* what) const;
  const Eigen::VectorXd& field(Pt y) const;
  double K_interp(Pt x, Pt y) const;

  Domain dom_ = Domain::disk();
  std::shared_ptr<Grid2D> grid_;
  std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
  // Cache key: source quantized to 1e-12.
  mutable std::map<std::pair<long long, long long>, Eigen::VectorXd> cache_;
};

// Closed-form helpers on the unit disk (usable without an oracle).
double disk_G(Pt x, Pt y);
double disk_K(Pt x, Pt y);
double disk_R(Pt x);

}  // namespace glab
