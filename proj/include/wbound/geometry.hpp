#pragma once

// Cubes, boundary distances, the boundary pseudo-distance, partitions and
// the smooth cutoff used near the boundary.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wbound {

/// Thrown when two objects of different spatial dimension meet.
class DimensionMismatch : public std::invalid_argument {
 public:
  explicit DimensionMismatch(const std::string& what) : std::invalid_argument(what) {}
};

inline void require_dim(std::size_t got, int want, const char* where) {
  if (static_cast<int>(got) != want) {
    throw DimensionMismatch(std::string(where) + ": expected dimension " + std::to_string(want) +
                            ", got " + std::to_string(got));
  }
}

/// Axis-aligned cube origin + (0,L)^d. The top-level domain has origin 0;
/// sub-cubes produced by partition_box carry their offset.
class Box {
 public:
  Box() = default;

  Box(int dim, double side) : Box(std::vector<double>(dim > 0 ? dim : 0, 0.0), side) {
    if (dim < 1) throw std::invalid_argument("Box: dimension must be >= 1");
  }

  Box(std::vector<double> origin, double side) : origin_(std::move(origin)), side_(side) {
    if (origin_.empty()) throw std::invalid_argument("Box: dimension must be >= 1");
    if (!(side > 0.0) || !std::isfinite(side)) throw std::invalid_argument("Box: side must be positive");
  }

  int dim() const { return static_cast<int>(origin_.size()); }
  double side() const { return side_; }
  std::span<const double> origin() const { return origin_; }
  double lower(int i) const { return origin_[i]; }
  double upper(int i) const { return origin_[i] + side_; }

  double volume() const { return std::pow(side_, dim()); }
  double diameter() const { return side_ * std::sqrt(static_cast<double>(dim())); }
  double circumradius() const { return 0.5 * diameter(); }

  std::vector<double> center() const {
    std::vector<double> c(origin_);
    for (double& x : c) x += 0.5 * side_;
    return c;
  }

  bool contains_closed(std::span<const double> x) const {
    require_dim(x.size(), dim(), "Box::contains_closed");
    for (int i = 0; i < dim(); ++i)
      if (x[i] < lower(i) || x[i] > upper(i)) return false;
    return true;
  }

  bool contains_open(std::span<const double> x) const {
    require_dim(x.size(), dim(), "Box::contains_open");
    for (int i = 0; i < dim(); ++i)
      if (x[i] <= lower(i) || x[i] >= upper(i)) return false;
    return true;
  }

 private:
  std::vector<double> origin_;
  double side_ = 1.0;
};

/// Euclidean distance from x to the complement of the box; 0 outside.
inline double dist_to_complement(std::span<const double> x, const Box& box) {
  require_dim(x.size(), box.dim(), "dist_to_complement");
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < box.dim(); ++i) {
    double a = std::min(x[i] - box.lower(i), box.upper(i) - x[i]);
    best = std::min(best, std::max(0.0, a));
  }
  return best;
}

inline double squared_distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("squared_distance: point dimensions differ");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

inline double distance(std::span<const double> x, std::span<const double> y) {
  return std::sqrt(squared_distance(x, y));
}

/// r^p with the common exponents special-cased (exact for p = 1, 2, 3).
inline double power_p(double r, double p) {
  if (p == 2.0) return r * r;
  if (p == 1.0) return r;
  if (p == 3.0) return r * r * r;
  return std::pow(r, p);
}

/// |x-y|^p without the square root when p = 2.
inline double euclidean_cost(std::span<const double> x, std::span<const double> y, double p) {
  double s = squared_distance(x, y);
  if (p == 2.0) return s;
  return power_p(std::sqrt(s), p);
}

enum class Branch { euclidean, boundary };

/// b(x,y)^p = min(|x-y|^p, dist(x)^p + dist(y)^p).
inline double boundary_cost(std::span<const double> x, std::span<const double> y, const Box& box,
                            double p) {
  if (p < 1.0) throw std::invalid_argument("boundary_cost: p must be >= 1");
  require_dim(x.size(), box.dim(), "boundary_cost");
  require_dim(y.size(), box.dim(), "boundary_cost");
  double direct = euclidean_cost(x, y, p);
  double via = power_p(dist_to_complement(x, box), p) + power_p(dist_to_complement(y, box), p);
  return std::min(direct, via);
}

/// Which branch attains the minimum; exact ties report euclidean.
inline Branch boundary_branch(std::span<const double> x, std::span<const double> y, const Box& box,
                              double p) {
  double direct = euclidean_cost(x, y, p);
  double via = power_p(dist_to_complement(x, box), p) + power_p(dist_to_complement(y, box), p);
  return direct <= via ? Branch::euclidean : Branch::boundary;
}

/// Membership in the inner region {dist(x, complement) > r}.
inline bool inner_region_contains(std::span<const double> x, const Box& box, double r) {
  if (r < 0.0) throw std::invalid_argument("inner_region_contains: r must be >= 0");
  return dist_to_complement(x, box) > r;
}

/// Regular split into m^d sub-cubes, row-major (first axis slowest).
inline std::vector<Box> partition_box(const Box& box, int m) {
  if (m < 1) throw std::invalid_argument("partition_box: m must be >= 1");
  const int d = box.dim();
  const double s = box.side() / m;
  std::size_t count = 1;
  for (int i = 0; i < d; ++i) count *= static_cast<std::size_t>(m);
  std::vector<Box> parts;
  parts.reserve(count);
  std::vector<int> idx(d, 0);
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> o(d);
    for (int i = 0; i < d; ++i) o[i] = box.lower(i) + idx[i] * s;
    parts.emplace_back(std::move(o), s);
    for (int i = d - 1; i >= 0; --i) {
      if (++idx[i] < m) break;
      idx[i] = 0;
    }
  }
  return parts;
}

/// Index of the sub-cube of partition_box(box, m) containing x (clamped).
inline std::size_t block_index(std::span<const double> x, const Box& box, int m) {
  require_dim(x.size(), box.dim(), "block_index");
  std::size_t k = 0;
  for (int i = 0; i < box.dim(); ++i) {
    int c = static_cast<int>(std::floor((x[i] - box.lower(i)) / box.side() * m));
    c = std::clamp(c, 0, m - 1);
    k = k * static_cast<std::size_t>(m) + static_cast<std::size_t>(c);
  }
  return k;
}

/// Quintic smoothstep 10t^3 - 15t^4 + 6t^5 and its derivatives.
namespace quintic {
inline double f(double t) { return t * t * t * (10.0 + t * (-15.0 + 6.0 * t)); }
inline double df(double t) { return 30.0 * t * t * (1.0 - t) * (1.0 - t); }
inline double d2f(double t) { return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t); }
/// sup |f'| on [0,1], attained at t = 1/2.
inline constexpr double max_df = 1.875;
/// sup |f''| on [0,1] = 10/sqrt(3), attained at t = (3 -+ sqrt 3)/6.
inline const double max_d2f = 10.0 / std::sqrt(3.0);
}  // namespace quintic

/// eta(x) = 1 - prod_i xi(x_i/L - 1/2): equal to 1 within r = delta L of the
/// boundary, 0 beyond 2r, C^2 in between.
class CutoffFunction {
 public:
  CutoffFunction(Box box, double delta) : box_(std::move(box)), delta_(delta) {
    if (!(delta > 0.0) || delta > 0.25) throw std::invalid_argument("make_cutoff: delta must lie in (0, 1/4]");
  }

  const Box& box() const { return box_; }
  double delta() const { return delta_; }
  double r() const { return delta_ * box_.side(); }

  double value(std::span<const double> x) const {
    require_dim(x.size(), box_.dim(), "CutoffFunction::value");
    double prod = 1.0;
    for (int i = 0; i < box_.dim(); ++i) prod *= xi(s_of(x, i)).v;
    return 1.0 - prod;
  }

  std::vector<double> gradient(std::span<const double> x) const {
    require_dim(x.size(), box_.dim(), "CutoffFunction::gradient");
    const int d = box_.dim();
    std::vector<Xi> t(d);
    for (int i = 0; i < d; ++i) t[i] = xi(s_of(x, i));
    std::vector<double> g(d);
    for (int i = 0; i < d; ++i) {
      double prod = t[i].d1 / box_.side();
      for (int j = 0; j < d; ++j)
        if (j != i) prod *= t[j].v;
      g[i] = -prod;
    }
    return g;
  }

  /// Full Hessian, row-major d x d.
  std::vector<double> hessian(std::span<const double> x) const {
    require_dim(x.size(), box_.dim(), "CutoffFunction::hessian");
    const int d = box_.dim();
    const double L = box_.side();
    std::vector<Xi> t(d);
    for (int i = 0; i < d; ++i) t[i] = xi(s_of(x, i));
    std::vector<double> h(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        double prod = 1.0;
        for (int k = 0; k < d; ++k) {
          if (k == i && k == j) prod *= t[k].d2 / (L * L);
          else if (k == i || k == j) prod *= t[k].d1 / L;
          else prod *= t[k].v;
        }
        h[static_cast<std::size_t>(i) * d + j] = -prod;
      }
    }
    return h;
  }

  double laplacian(std::span<const double> x) const {
    auto h = hessian(x);
    double s = 0.0;
    for (int i = 0; i < box_.dim(); ++i) s += h[static_cast<std::size_t>(i) * box_.dim() + i];
    return s;
  }

  /// Certified C with |grad eta| <= C/r and |Hess eta|_F <= C/r^2 everywhere.
  double derivative_constant() const {
    const double d = box_.dim();
    double cg = std::sqrt(d) * quintic::max_df;
    double ch = std::sqrt(d * quintic::max_d2f * quintic::max_d2f +
                          d * (d - 1.0) * std::pow(quintic::max_df, 4));
    return std::max(cg, ch);
  }

  /// Certified bound on |Laplacian eta| times r^2.
  double laplacian_constant() const { return box_.dim() * quintic::max_d2f; }

  /// Distance to the zero set Gamma, the inner cube of side (1 - 4 delta) L.
  double dist_to_zero_set(std::span<const double> x) const {
    require_dim(x.size(), box_.dim(), "CutoffFunction::dist_to_zero_set");
    double s2 = 0.0;
    const double half = (0.5 - 2.0 * delta_) * box_.side();
    for (int i = 0; i < box_.dim(); ++i) {
      double c = box_.lower(i) + 0.5 * box_.side();
      double e = std::max(0.0, std::abs(x[i] - c) - half);
      s2 += e * e;
    }
    return std::sqrt(s2);
  }

  /// C with (dist/r)^3 / C <= eta <= C (dist/r)^3.
  double sandwich_constant() const {
    const double d = box_.dim();
    return std::max(10.0, 8.0 * std::pow(d, 1.5));
  }

 private:
  struct Xi {
    double v = 1.0, d1 = 0.0, d2 = 0.0;  // derivatives with respect to s
  };

  double s_of(std::span<const double> x, int i) const {
    return (x[i] - box_.lower(i)) / box_.side() - 0.5;
  }

  // Even profile in s: 1 on |s| <= 1/2 - 2 delta, 0 on |s| >= 1/2 - delta.
  Xi xi(double s) const {
    const double a = 0.5 - 2.0 * delta_;
    const double as = std::abs(s);
    Xi out;
    if (as <= a) return out;
    if (as >= a + delta_) return Xi{0.0, 0.0, 0.0};
    const double t = (as - a) / delta_;
    const double sg = s < 0 ? -1.0 : 1.0;
    out.v = 1.0 - quintic::f(t);
    out.d1 = -sg * quintic::df(t) / delta_;
    out.d2 = -quintic::d2f(t) / (delta_ * delta_);
    return out;
  }

  Box box_;
  double delta_;
};

inline CutoffFunction make_cutoff(const Box& box, double delta) { return CutoffFunction(box, delta); }

/// Flat list of points of a common dimension.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(int dim) : dim_(dim) {
    if (dim < 1) throw std::invalid_argument("PointSet: dimension must be >= 1");
  }
  PointSet(int dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
    if (dim < 1) throw std::invalid_argument("PointSet: dimension must be >= 1");
    if (coords_.size() % static_cast<std::size_t>(dim) != 0)
      throw DimensionMismatch("PointSet: coordinate count not a multiple of dimension");
  }

  int dim() const { return dim_; }
  std::size_t size() const { return dim_ ? coords_.size() / dim_ : 0; }
  bool empty() const { return size() == 0; }
  std::span<const double> operator[](std::size_t i) const {
    return {coords_.data() + i * dim_, static_cast<std::size_t>(dim_)};
  }
  const std::vector<double>& coords() const { return coords_; }

  void push_back(std::span<const double> x) {
    require_dim(x.size(), dim_, "PointSet::push_back");
    coords_.insert(coords_.end(), x.begin(), x.end());
  }
  void reserve(std::size_t n) { coords_.reserve(n * dim_); }

 private:
  int dim_ = 0;
  std::vector<double> coords_;
};

/// Cell centers of the regular m^d grid on the box, row-major.
inline PointSet grid_centers(const Box& box, int m) {
  if (m < 1) throw std::invalid_argument("grid_centers: m must be >= 1");
  const int d = box.dim();
  const double h = box.side() / m;
  std::size_t count = 1;
  for (int i = 0; i < d; ++i) count *= static_cast<std::size_t>(m);
  PointSet pts(d);
  pts.reserve(count);
  std::vector<int> idx(d, 0);
  std::vector<double> x(d);
  for (std::size_t k = 0; k < count; ++k) {
    for (int i = 0; i < d; ++i) x[i] = box.lower(i) + (idx[i] + 0.5) * h;
    pts.push_back(x);
    for (int i = d - 1; i >= 0; --i) {
      if (++idx[i] < m) break;
      idx[i] = 0;
    }
  }
  return pts;
}

/// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

}  // namespace wbound
