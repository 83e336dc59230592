#include "glab/grid2d.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace glab {

Domain Domain::disk() { return Domain{Kind::kDisk, -1.0, 1.0, -1.0, 1.0}; }

Domain Domain::rect(double x0, double x1, double y0, double y1) {
  if (!(x0 < x1) || !(y0 < y1))
    throw std::invalid_argument("rect: bounds must satisfy x0 < x1, y0 < y1");
  return Domain{Kind::kRect, x0, x1, y0, y1};
}

Domain Domain::parse(const std::string& s) {
  std::istringstream in(s);
  std::string kind;
  in >> kind;
  if (kind == "disk") {
    std::string rest;
    if (in >> rest) throw std::invalid_argument("domain: trailing tokens after 'disk'");
    return disk();
  }
  if (kind == "rect") {
    double a, b, c, d;
    if (!(in >> a >> b >> c >> d))
      throw std::invalid_argument("domain: rect needs four bounds");
    std::string rest;
    if (in >> rest) throw std::invalid_argument("domain: trailing tokens after rect bounds");
    return rect(a, b, c, d);
  }
  throw std::invalid_argument("domain: unknown kind '" + kind + "'");
}

std::string Domain::to_string() const {
  if (kind == Kind::kDisk) return "disk";
  std::ostringstream out;
  out << "rect " << x0 << " " << x1 << " " << y0 << " " << y1;
  return out.str();
}

bool Domain::contains(Pt p, double margin) const {
  if (kind == Kind::kDisk) return norm(p) < 1.0 - margin;
  return p.x > x0 + margin && p.x < x1 - margin && p.y > y0 + margin &&
         p.y < y1 - margin;
}

double Domain::boundary_distance(Pt p) const {
  if (kind == Kind::kDisk) return 1.0 - norm(p);
  double d = p.x - x0;
  d = std::min(d, x1 - p.x);
  d = std::min(d, p.y - y0);
  return std::min(d, y1 - p.y);
}

double Domain::diameter() const {
  if (kind == Kind::kDisk) return 2.0;
  return std::hypot(x1 - x0, y1 - y0);
}

Grid2D::Grid2D(Domain dom, int n) : dom_(dom), n_(n) {
  if (n < 8) throw std::invalid_argument("grid: n must be at least 8");
  hx_ = (dom.x1 - dom.x0) / (n - 1);
  hy_ = (dom.y1 - dom.y0) / (n - 1);
  xs_.resize(n);
  ys_.resize(n);
  for (int i = 0; i < n; ++i) {
    xs_[i] = dom.x0 + i * hx_;
    ys_[i] = dom.y0 + i * hy_;
  }
  interior_.assign(static_cast<std::size_t>(n) * n, -1);
  // On the disk a node within snap of the circle is treated as boundary;
  // otherwise a vanishing cut arm would blow up the stencil weights.
  const double snap = 1e-10;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Pt p{xs_[i], ys_[j]};
      bool inside;
      if (dom.kind == Domain::Kind::kDisk) {
        inside = norm(p) < 1.0 - snap;
      } else {
        inside = i > 0 && i < n - 1 && j > 0 && j < n - 1;
      }
      if (inside) {
        interior_[flat(i, j)] = static_cast<int>(nodes_.size());
        nodes_.push_back(flat(i, j));
      }
    }
  }
  build_laplacian();
}

Pt Grid2D::node_pos(int k) const {
  const int f = nodes_[static_cast<std::size_t>(k)];
  return {xs_[f % n_], ys_[f / n_]};
}

int Grid2D::nearest_interior(Pt p) const {
  const int i = static_cast<int>(std::lround((p.x - dom_.x0) / hx_));
  const int j = static_cast<int>(std::lround((p.y - dom_.y0) / hy_));
  int best = -1;
  double bestd = 1e300;
  for (int dj = -1; dj <= 1; ++dj) {
    for (int di = -1; di <= 1; ++di) {
      const int ii = i + di, jj = j + dj;
      if (ii < 0 || ii >= n_ || jj < 0 || jj >= n_) continue;
      const int idx = interior_[flat(ii, jj)];
      if (idx < 0) continue;
      const double d = dist(p, {xs_[ii], ys_[jj]});
      if (d < bestd) {
        bestd = d;
        best = idx;
      }
    }
  }
  return best;
}

void Grid2D::build_laplacian() {
  const int m = interior_count();
  st_.resize(m);
  vol_.resize(m);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(m) * 5);
  const double min_arm = 1e-6;

  // Intersection of the axis-parallel ray from an interior node with the
  // unit circle, on the side given by dir.
  auto cut_x = [](double y, int dir) {
    const double xc = std::sqrt(std::max(0.0, 1.0 - y * y));
    return dir > 0 ? xc : -xc;
  };
  auto cut_y = [](double x, int dir) {
    const double yc = std::sqrt(std::max(0.0, 1.0 - x * x));
    return dir > 0 ? yc : -yc;
  };

  for (int k = 0; k < m; ++k) {
    const int f = nodes_[static_cast<std::size_t>(k)];
    const int i = f % n_, j = f / n_;
    const Pt p{xs_[i], ys_[j]};
    Stencil& s = st_[static_cast<std::size_t>(k)];

    auto side = [&](int di, int dj, double harm) {
      Side out;
      const int ii = i + di, jj = j + dj;
      const int nb = (ii >= 0 && ii < n_ && jj >= 0 && jj < n_)
                         ? interior_[flat(ii, jj)]
                         : -1;
      if (nb >= 0) {
        out.len = harm;
        out.nb = nb;
        return out;
      }
      if (dom_.kind == Domain::Kind::kRect) {
        out.len = harm;
        out.bpt = {dom_.x0 + ii * hx_, dom_.y0 + jj * hy_};
        return out;
      }
      // Disk: cut the arm at the circle.
      Pt b;
      if (dj == 0) {
        b = {cut_x(p.y, di), p.y};
        out.len = std::abs(b.x - p.x);
      } else {
        b = {p.x, cut_y(p.x, dj)};
        out.len = std::abs(b.y - p.y);
      }
      out.len = std::max(out.len, min_arm * harm);
      out.bpt = b;
      return out;
    };

    s.e = side(1, 0, hx_);
    s.w = side(-1, 0, hx_);
    s.n = side(0, 1, hy_);
    s.s = side(0, -1, hy_);

    // One-sided second-difference weights for unequal arms a (minus side)
    // and b (plus side): -Δ row is 2/(a b) on the diagonal and -2/(a(a+b)),
    // -2/(b(a+b)) on the sides.
    auto add_pair = [&](const Side& plus, const Side& minus) {
      const double a = minus.len, b = plus.len;
      trip.emplace_back(k, k, 2.0 / (a * b));
      if (plus.nb >= 0)
        trip.emplace_back(k, plus.nb, -2.0 / (b * (a + b)));
      else
        bterms_.emplace_back(k, 2.0 / (b * (a + b)), plus.bpt);
      if (minus.nb >= 0)
        trip.emplace_back(k, minus.nb, -2.0 / (a * (a + b)));
      else
        bterms_.emplace_back(k, 2.0 / (a * (a + b)), minus.bpt);
    };
    add_pair(s.e, s.w);
    add_pair(s.n, s.s);

    vol_[k] = 0.5 * (s.e.len + s.w.len) * 0.5 * (s.n.len + s.s.len);
  }
  A_.resize(m, m);
  A_.setFromTriplets(trip.begin(), trip.end());
  A_.makeCompressed();
}

Eigen::VectorXd Grid2D::boundary_rhs(const std::function<double(Pt)>& g) const {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(interior_count());
  for (const auto& [row, coeff, bpt] : bterms_) rhs[row] += coeff * g(bpt);
  return rhs;
}

double Grid2D::interpolate(const Eigen::VectorXd& field, Pt p,
                           const std::function<double(Pt)>& g) const {
  double fx = (p.x - dom_.x0) / hx_;
  double fy = (p.y - dom_.y0) / hy_;
  int i = static_cast<int>(std::floor(fx));
  int j = static_cast<int>(std::floor(fy));
  i = std::max(0, std::min(i, n_ - 2));
  j = std::max(0, std::min(j, n_ - 2));
  const double tx = fx - i, ty = fy - j;
  auto val = [&](int ii, int jj) {
    const int idx = interior_[flat(ii, jj)];
    if (idx >= 0) return field[idx];
    return g({xs_[ii], ys_[jj]});
  };
  return (1 - tx) * (1 - ty) * val(i, j) + tx * (1 - ty) * val(i + 1, j) +
         (1 - tx) * ty * val(i, j + 1) + tx * ty * val(i + 1, j + 1);
}

double Grid2D::interpolate_zero(const Eigen::VectorXd& field, Pt p) const {
  return interpolate(field, p, [](Pt) { return 0.0; });
}

int Grid2D::cell_depth(Pt p) const {
  const int i = static_cast<int>(std::lround((p.x - dom_.x0) / hx_));
  const int j = static_cast<int>(std::lround((p.y - dom_.y0) / hy_));
  for (int ring = 0; ring < n_; ++ring) {
    for (int dj = -ring; dj <= ring; ++dj) {
      for (int di = -ring; di <= ring; ++di) {
        if (std::max(std::abs(di), std::abs(dj)) != ring) continue;
        const int ii = i + di, jj = j + dj;
        if (ii < 0 || ii >= n_ || jj < 0 || jj >= n_) return ring;
        if (interior_[flat(ii, jj)] < 0) return ring;
      }
    }
  }
  return n_;
}

}  // namespace glab
