#include "glab/green.hpp"

#include <cmath>
#include <fstream>

namespace glab {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

double disk_G(Pt x, Pt y) {
  const double ry = norm(y);
  const double rxy = dist(x, y);
  if (rxy == 0.0) throw DomainError("green: x == y");
  if (ry == 0.0) return -std::log(norm(x)) / kTwoPi;
  const Pt ystar{y.x / (ry * ry), y.y / (ry * ry)};
  return std::log(dist(x, ystar) * ry / rxy) / kTwoPi;
}

double disk_K(Pt x, Pt y) {
  const double ry = norm(y);
  if (ry == 0.0) return 0.0;  // the image term vanishes for a centered source
  const Pt ystar{y.x / (ry * ry), y.y / (ry * ry)};
  return std::log(dist(x, ystar) * ry) / kTwoPi;
}

double disk_R(Pt x) {
  const double r2 = x.x * x.x + x.y * x.y;
  return std::log(1.0 - r2) / kTwoPi;
}

GreenOracle GreenOracle::exact_disk() {
  GreenOracle o;
  o.dom_ = Domain::disk();
  return o;
}

GreenOracle GreenOracle::numeric(Domain dom, int n) {
  if (n < 32) throw std::invalid_argument("green: numeric oracle needs n >= 32");
  GreenOracle o;
  o.dom_ = dom;
  o.grid_ = std::make_shared<Grid2D>(dom, n);
  o.lu_ = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
  o.lu_->compute(o.grid_->laplacian());
  if (o.lu_->info() != Eigen::Success)
    throw NumericError("green: Laplacian factorization failed");
  return o;
}

void GreenOracle::require_inside(Pt p, const char* what) const {
  if (!dom_.contains(p))
    throw DomainError(std::string("green: ") + what + " outside the domain");
}

const Eigen::VectorXd& GreenOracle::field(Pt y) const {
  const auto key = std::make_pair(static_cast<long long>(std::llround(y.x * 1e12)),
                                  static_cast<long long>(std::llround(y.y * 1e12)));
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  // Harmonic regular part: Δ K = 0, K = (1/2π) log|p - y| on the boundary.
  Eigen::VectorXd rhs = grid_->boundary_rhs(
      [&](Pt p) { return std::log(dist(p, y)) / kTwoPi; });
  Eigen::VectorXd k = lu_->solve(rhs);
  if (lu_->info() != Eigen::Success)
    throw NumericError("green: regular-part solve failed");
  return cache_.emplace(key, std::move(k)).first->second;
}

double GreenOracle::K_interp(Pt x, Pt y) const {
  const Eigen::VectorXd& f = field(y);
  return grid_->interpolate(f, x,
                            [&](Pt p) { return std::log(dist(p, y)) / kTwoPi; });
}

double GreenOracle::K(Pt x, Pt y) const {
  require_inside(x, "x");
  require_inside(y, "y");
  if (!grid_) return disk_K(x, y);
  return K_interp(x, y);
}

double GreenOracle::G(Pt x, Pt y) const {
  require_inside(x, "x");
  require_inside(y, "y");
  if (!grid_) return disk_G(x, y);
  const double sep = dist(x, y);
  const double cell = std::max(grid_->hx(), grid_->hy());
  if (sep < cell)
    throw DomainError("green: x and y closer than one grid cell");
  return K_interp(x, y) - std::log(sep) / kTwoPi;
}

double GreenOracle::R(Pt x) const {
  require_inside(x, "x");
  if (!grid_) return disk_R(x);
  return K_interp(x, x);
}

double GreenOracle::gradient_step() const {
  if (!grid_) return 1e-6;
  return 0.5 * std::max(grid_->hx(), grid_->hy());
}

Pt GreenOracle::grad_R(Pt x) const {
  const double h = gradient_step();
  if (!dom_.contains({x.x + h, x.y}) || !dom_.contains({x.x - h, x.y}) ||
      !dom_.contains({x.x, x.y + h}) || !dom_.contains({x.x, x.y - h}))
    throw DomainError("green: gradient stencil leaves the domain");
  return {(R({x.x + h, x.y}) - R({x.x - h, x.y})) / (2 * h),
          (R({x.x, x.y + h}) - R({x.x, x.y - h})) / (2 * h)};
}

Pt GreenOracle::grad_G_x(Pt x, Pt y) const {
  const double h = gradient_step();
  if (!dom_.contains({x.x + h, x.y}) || !dom_.contains({x.x - h, x.y}) ||
      !dom_.contains({x.x, x.y + h}) || !dom_.contains({x.x, x.y - h}))
    throw DomainError("green: gradient stencil leaves the domain");
  return {(G({x.x + h, x.y}, y) - G({x.x - h, x.y}, y)) / (2 * h),
          (G({x.x, x.y + h}, y) - G({x.x, x.y - h}, y)) / (2 * h)};
}

void GreenOracle::warm_up(const std::vector<Pt>& sources) {
  if (!grid_) return;
  const double h = gradient_step();
  for (Pt y : sources) {
    require_inside(y, "source");
    field(y);
    for (Pt d : {Pt{h, 0}, Pt{-h, 0}, Pt{0, h}, Pt{0, -h}}) field(y + d);
  }
}

void GreenOracle::export_K_csv(Pt y, const std::string& path) const {
  require_inside(y, "y");
  std::ofstream out(path);
  if (!out) throw IoError("green: cannot open " + path);
  out << "x1,x2,K\n";
  out.precision(17);
  if (!grid_) {
    const int n = 65;
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const Pt p{-1.0 + 2.0 * i / (n - 1), -1.0 + 2.0 * j / (n - 1)};
        if (!dom_.contains(p)) continue;
        out << p.x << ',' << p.y << ',' << disk_K(p, y) << '\n';
      }
    }
    return;
  }
  const Eigen::VectorXd& f = field(y);
  for (int k = 0; k < grid_->interior_count(); ++k) {
    const Pt p = grid_->node_pos(k);
    out << p.x << ',' << p.y << ',' << f[k] << '\n';
  }
}

}  // namespace glab
