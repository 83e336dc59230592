#pragma once
// Planar domains and the finite-difference grid shared by the Green-function
// oracle and the 2D nonlinear solver.
//
// The grid is a tensor product over the domain's bounding box. On rectangles
// the 5-point Laplacian is standard; on the disk, stencil arms crossing the
// circle are cut at the intersection point and the one-sided second-difference
// weights are used, which keeps second-order accuracy up to the curved
// boundary. Rows stay diagonally dominant; cut rows are not symmetric.

#include <Eigen/Sparse>
#include <functional>
#include <string>
#include <vector>

#include "glab/numerics.hpp"

namespace glab {

struct Domain {
  enum class Kind { kDisk, kRect };
  Kind kind = Kind::kDisk;
  double x0 = -1.0, x1 = 1.0, y0 = -1.0, y1 = 1.0;

  static Domain disk();
  static Domain rect(double x0, double x1, double y0, double y1);
  // "disk" or "rect X0 X1 Y0 Y1".
  static Domain parse(const std::string& s);
  std::string to_string() const;

  bool contains(Pt p, double margin = 0.0) const;
  double boundary_distance(Pt p) const;
  double diameter() const;
};

class Grid2D {
 public:
  Grid2D(Domain dom, int n);

  const Domain& domain() const { return dom_; }
  int n() const { return n_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  int interior_count() const { return static_cast<int>(nodes_.size()); }
  Pt node_pos(int interior_idx) const;
  // Interior index of the grid node nearest to p, or -1.
  int nearest_interior(Pt p) const;

  // Strong-form negative Laplacian over interior unknowns: (A v)_i ~ -Δv(x_i).
  const Eigen::SparseMatrix<double>& laplacian() const { return A_; }
  // Contribution of Dirichlet data g to the right-hand side of A v = f.
  Eigen::VectorXd boundary_rhs(const std::function<double(Pt)>& g) const;
  // Cell volume attached to each interior node (cut cells shrink).
  const Eigen::VectorXd& volumes() const { return vol_; }

  // Bilinear interpolation of an interior-indexed field. Nodes of the
  // surrounding cell that are not interior take the value g at their position
  // (pass the Dirichlet data, or zero extension for homogeneous fields).
  double interpolate(const Eigen::VectorXd& field, Pt p,
                     const std::function<double(Pt)>& g) const;
  double interpolate_zero(const Eigen::VectorXd& field, Pt p) const;

  // Distance (in cells) from an interior node to the nearest non-interior
  // node; used to validate probe placement.
  int cell_depth(Pt p) const;

 private:
  struct Side {
    double len = 0.0;  // arm length
    int nb = -1;       // interior index of the neighbor, or -1 when cut
    Pt bpt;            // boundary point when nb < 0
  };
  struct Stencil {
    Side e, w, n, s;
  };

  int flat(int i, int j) const { return j * n_ + i; }
  void build_laplacian();

  Domain dom_;
  int n_ = 0;
  double hx_ = 0.0, hy_ = 0.0;
  std::vector<double> xs_, ys_;
  std::vector<int> interior_;  // flat node -> interior index or -1
  std::vector<int> nodes_;     // interior index -> flat node
  std::vector<Stencil> st_;
  Eigen::SparseMatrix<double> A_;
  Eigen::VectorXd vol_;
  std::vector<std::tuple<int, double, Pt>> bterms_;  // (row, coeff, boundary pt)
};

}  // namespace glab
