#pragma once

// Weighted point measures, samplers for the random measure families,
// Lebesgue discretization and the point-cloud text format.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wbound/geometry.hpp"
#include "wbound/rng.hpp"

namespace wbound {

/// Finite list of atoms with positive masses.
class PointMeasure {
 public:
  PointMeasure() = default;
  explicit PointMeasure(int dim) : points_(dim) {}
  PointMeasure(PointSet points, std::vector<double> masses) : points_(std::move(points)), masses_(std::move(masses)) {
    if (masses_.size() != points_.size()) throw std::invalid_argument("PointMeasure: mass count differs from point count");
    for (double m : masses_) {
      if (!(m > 0.0) || !std::isfinite(m)) throw std::invalid_argument("PointMeasure: masses must be positive");
      total_ += m;
    }
  }

  int dim() const { return points_.dim(); }
  std::size_t size() const { return masses_.size(); }
  bool empty() const { return masses_.empty(); }
  std::span<const double> point(std::size_t i) const { return points_[i]; }
  double mass(std::size_t i) const { return masses_[i]; }
  double total_mass() const { return total_; }
  const PointSet& points() const { return points_; }
  const std::vector<double>& masses() const { return masses_; }

  void push_back(std::span<const double> x, double m) {
    if (!(m > 0.0) || !std::isfinite(m)) throw std::invalid_argument("PointMeasure: masses must be positive");
    points_.push_back(x);
    masses_.push_back(m);
    total_ += m;
  }

  void reserve(std::size_t n) {
    points_.reserve(n);
    masses_.reserve(n);
  }

  /// Multiply every mass by c > 0.
  PointMeasure scaled(double c) const {
    if (!(c > 0.0)) throw std::invalid_argument("PointMeasure::scaled: factor must be positive");
    std::vector<double> m(masses_);
    for (double& x : m) x *= c;
    return PointMeasure(points_, std::move(m));
  }

 private:
  PointSet points_;
  std::vector<double> masses_;
  double total_ = 0.0;
};

enum class SamplerKind { poisson, iid_uniform, shifted_grid, interlacement };

inline const char* to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::poisson: return "poisson";
    case SamplerKind::iid_uniform: return "iid_uniform";
    case SamplerKind::shifted_grid: return "shifted_grid";
    case SamplerKind::interlacement: return "interlacement";
  }
  return "?";
}

inline SamplerKind sampler_kind_from_string(const std::string& s) {
  if (s == "poisson") return SamplerKind::poisson;
  if (s == "iid_uniform") return SamplerKind::iid_uniform;
  if (s == "shifted_grid") return SamplerKind::shifted_grid;
  if (s == "interlacement") return SamplerKind::interlacement;
  throw std::invalid_argument("unknown sampler kind '" + s + "'");
}

/// Sampler parameters. Zero radii mean "pick the default for the box".
struct SamplerSpec {
  SamplerKind kind = SamplerKind::poisson;
  double intensity = 1.0;
  std::size_t n = 0;
  double radius = 0.0;       // enclosing radius R
  double kill_radius = 0.0;  // R_kill
  double dt = 1e-3;

  /// Concentration exponent of the family.
  double alpha() const { return kind == SamplerKind::interlacement ? 2.0 : 0.0; }
};

inline PointMeasure sample_poisson(const Box& box, double intensity, RngStream& rng) {
  if (!(intensity > 0.0)) throw std::invalid_argument("sample_poisson: intensity must be positive");
  double mean = intensity * box.volume();
  if (mean > 1e9) throw std::invalid_argument("sample_poisson: expected atom count too large");
  std::uint64_t n = rng.poisson(mean);
  PointMeasure mu(box.dim());
  mu.reserve(n);
  std::vector<double> x(box.dim());
  for (std::uint64_t k = 0; k < n; ++k) {
    for (int i = 0; i < box.dim(); ++i) x[i] = box.lower(i) + box.side() * rng.uniform();
    mu.push_back(x, 1.0);
  }
  return mu;
}

inline PointMeasure sample_iid_uniform(const Box& box, std::size_t n, RngStream& rng) {
  PointMeasure mu(box.dim());
  mu.reserve(n);
  std::vector<double> x(box.dim());
  for (std::size_t k = 0; k < n; ++k) {
    for (int i = 0; i < box.dim(); ++i) x[i] = box.lower(i) + box.side() * rng.uniform();
    mu.push_back(x, 1.0);
  }
  return mu;
}

/// Atoms at (Z^d + U) inside the box, U uniform on (0,1)^d.
inline PointMeasure sample_shifted_grid(const Box& box, RngStream& rng) {
  const double L = box.side();
  if (std::abs(L - std::round(L)) > 1e-12 || L < 1.0)
    throw std::invalid_argument("sample_shifted_grid: side must be a positive integer");
  const int n = static_cast<int>(std::round(L));
  const int d = box.dim();
  std::vector<double> shift(d);
  for (double& s : shift) s = rng.uniform();
  PointMeasure mu(d);
  std::size_t count = 1;
  for (int i = 0; i < d; ++i) count *= static_cast<std::size_t>(n);
  mu.reserve(count);
  std::vector<int> idx(d, 0);
  std::vector<double> x(d);
  for (std::size_t k = 0; k < count; ++k) {
    for (int i = 0; i < d; ++i) x[i] = box.lower(i) + idx[i] + shift[i];
    mu.push_back(x, 1.0);
    for (int i = d - 1; i >= 0; --i) {
      if (++idx[i] < n) break;
      idx[i] = 0;
    }
  }
  return mu;
}

/// Green constant c_d of g(x,y) = c_d |x-y|^{2-d}.
inline double green_constant(int d) {
  if (d < 3) throw std::invalid_argument("green_constant: d must be >= 3");
  return std::tgamma(0.5 * d - 1.0) / (2.0 * std::pow(std::numbers::pi, 0.5 * d));
}

/// Newtonian capacity of the ball of radius R.
inline double ball_capacity(int d, double R) { return std::pow(R, d - 2) / green_constant(d); }

struct InterlacementParams {
  std::vector<double> center;
  double R = 0.0;
  double R_kill = 0.0;
  double dt = 0.0;
};

inline InterlacementParams interlacement_params(const Box& box, const SamplerSpec& spec) {
  if (box.dim() < 3) throw std::invalid_argument("sample_interlacement: requires d >= 3");
  InterlacementParams p;
  p.center = box.center();
  p.R = spec.radius > 0.0 ? spec.radius : 1.1 * box.circumradius();
  p.R_kill = spec.kill_radius > 0.0 ? spec.kill_radius : 8.0 * p.R;
  p.dt = spec.dt;
  if (!(p.R > box.circumradius())) throw std::invalid_argument("sample_interlacement: R must enclose the box");
  if (!(p.R_kill > p.R)) throw std::invalid_argument("sample_interlacement: R_kill must exceed R");
  if (!(p.dt > 0.0)) throw std::invalid_argument("sample_interlacement: dt must be positive");
  if (p.dt > 1e-2 * box.side() * box.side()) throw std::invalid_argument("sample_interlacement: dt too large for the box");
  return p;
}

/// Occupation measure of the interlacement paths hitting B_R, restricted to
/// the box. A path leaving B(R_kill) at radius rho comes back to B_R with
/// probability (R/rho)^{d-2}; when it does, it restarts from the exterior
/// harmonic measure on the sphere, so truncation introduces no bias.
inline PointMeasure sample_interlacement(const Box& box, const SamplerSpec& spec, RngStream& rng) {
  const InterlacementParams prm = interlacement_params(box, spec);
  const int d = box.dim();
  const double sdt = std::sqrt(prm.dt);
  PointMeasure mu(d);
  const std::uint64_t paths = rng.poisson(ball_capacity(d, prm.R));
  std::vector<double> x(d), y(d), mid(d), dir(d), z(d);
  auto radius_of = [&](const std::vector<double>& p) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += (p[i] - prm.center[i]) * (p[i] - prm.center[i]);
    return std::sqrt(s);
  };
  for (std::uint64_t k = 0; k < paths; ++k) {
    rng.unit_sphere(dir);
    for (int i = 0; i < d; ++i) x[i] = prm.center[i] + prm.R * dir[i];
    for (;;) {
      for (int i = 0; i < d; ++i) {
        y[i] = x[i] + sdt * rng.normal();
        mid[i] = 0.5 * (x[i] + y[i]);
      }
      if (box.contains_open(mid)) mu.push_back(mid, prm.dt);
      x.swap(y);
      const double rho = radius_of(x);
      if (rho < prm.R_kill) continue;
      if (rng.uniform() >= std::pow(prm.R / rho, d - 2)) break;
      // conditional hitting density on the sphere is proportional to |x - z|^{-d}
      for (;;) {
        rng.unit_sphere(dir);
        double s = 0.0;
        for (int i = 0; i < d; ++i) {
          z[i] = prm.center[i] + prm.R * dir[i];
          s += (x[i] - z[i]) * (x[i] - z[i]);
        }
        if (rng.uniform() < std::pow((rho - prm.R) / std::sqrt(s), d)) break;
      }
      x = z;
    }
  }
  return mu;
}

inline PointMeasure sample(const Box& box, const SamplerSpec& spec, RngStream& rng) {
  switch (spec.kind) {
    case SamplerKind::poisson: return sample_poisson(box, spec.intensity, rng);
    case SamplerKind::iid_uniform: return sample_iid_uniform(box, spec.n, rng);
    case SamplerKind::shifted_grid: return sample_shifted_grid(box, rng);
    case SamplerKind::interlacement: return sample_interlacement(box, spec, rng);
  }
  throw std::invalid_argument("sample: unknown sampler");
}

/// m^d atoms at cell centers, each of mass total_mass / m^d.
inline PointMeasure discretize_lebesgue(const Box& box, int m, double total_mass) {
  if (m < 1) throw std::invalid_argument("discretize_lebesgue: m must be >= 1");
  if (!(total_mass > 0.0)) throw std::invalid_argument("discretize_lebesgue: total mass must be positive");
  PointSet pts = grid_centers(box, m);
  const std::size_t n = pts.size();
  return PointMeasure(std::move(pts), std::vector<double>(n, total_mass / static_cast<double>(n)));
}

/// Grid with a given number of cells per unit length (rounded, at least 1).
inline int cells_for(const Box& box, double per_unit) {
  return std::max(1, static_cast<int>(std::lround(box.side() * per_unit)));
}

/// Thrown when a rescaling target is requested for an empty restriction.
class EmptyRestriction : public std::runtime_error {
 public:
  EmptyRestriction() : std::runtime_error("restrict_and_rescale: restriction is empty") {}
};

/// Atoms strictly inside the sub-box, optionally rescaled to target mass.
inline PointMeasure restrict_and_rescale(const PointMeasure& mu, const Box& sub,
                                         std::optional<double> target_mass = std::nullopt) {
  require_dim(static_cast<std::size_t>(mu.dim()), sub.dim(), "restrict_and_rescale");
  PointMeasure out(mu.dim());
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (sub.contains_open(mu.point(i))) out.push_back(mu.point(i), mu.mass(i));
  if (!target_mass) return out;
  if (out.empty()) throw EmptyRestriction();
  return out.scaled(*target_mass / out.total_mass());
}

/// Split atoms among the m^d blocks of partition_box(box, m); atoms on block
/// faces go to the block block_index picks.
inline std::vector<PointMeasure> split_by_blocks(const PointMeasure& mu, const Box& box, int m) {
  std::vector<PointMeasure> parts(static_cast<std::size_t>(std::pow(m, box.dim()) + 0.5), PointMeasure(mu.dim()));
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!box.contains_closed(mu.point(i))) continue;
    parts[block_index(mu.point(i), box, m)].push_back(mu.point(i), mu.mass(i));
  }
  return parts;
}

// ---- point-cloud text format: "d n" then n lines "x_1 ... x_d mass" ----

inline void write_point_cloud(std::ostream& os, const PointSet& pts, const std::vector<double>& last) {
  if (last.size() != pts.size()) throw std::invalid_argument("write_point_cloud: value count mismatch");
  os << pts.dim() << ' ' << pts.size() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (double x : pts[i]) {
      std::snprintf(buf, sizeof buf, "%.17g ", x);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", last[i]);
    os << buf << '\n';
  }
}

inline void write_point_cloud(std::ostream& os, const PointMeasure& mu) {
  write_point_cloud(os, mu.points(), mu.masses());
}

/// Reads the common "d n" layout; the last column is returned unchecked.
inline std::pair<PointSet, std::vector<double>> read_point_table(std::istream& is) {
  long long d = 0, n = 0;
  if (!(is >> d >> n) || d < 1 || n < 0) throw std::runtime_error("point cloud: bad header");
  PointSet pts(static_cast<int>(d));
  std::vector<double> vals;
  pts.reserve(static_cast<std::size_t>(n));
  vals.reserve(static_cast<std::size_t>(n));
  std::vector<double> x(static_cast<std::size_t>(d));
  for (long long k = 0; k < n; ++k) {
    for (auto& c : x)
      if (!(is >> c)) throw std::runtime_error("point cloud: truncated at atom " + std::to_string(k));
    double v;
    if (!(is >> v)) throw std::runtime_error("point cloud: truncated at atom " + std::to_string(k));
    pts.push_back(x);
    vals.push_back(v);
  }
  return {std::move(pts), std::move(vals)};
}

inline PointMeasure read_point_cloud(std::istream& is) {
  auto [pts, masses] = read_point_table(is);
  return PointMeasure(std::move(pts), std::move(masses));
}

inline PointMeasure read_point_cloud_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_point_cloud(in);
}

}  // namespace wbound
