#pragma once

// Discrete Poisson problems on cell-centered grids, the discrete H^{-1,2}
// norm, the dyadic block scan and the PDE-ansatz experiment.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "wbound/geometry.hpp"
#include "wbound/grid_field.hpp"
#include "wbound/measures.hpp"
#include "wbound/parallel.hpp"
#include "wbound/rng.hpp"
#include "wbound/stats.hpp"
#include "wbound/transport.hpp"

namespace wbound {

enum class BoundaryCondition { dirichlet, neumann };
enum class PoissonMethod { spectral, cg };

/// Cell mass density minus the mean density; integrates to zero.
inline ScalarGridField rasterize(const PointMeasure& mu, const Box& box, int m) {
  if (m < 2) throw std::invalid_argument("rasterize: m must be >= 2");
  ScalarGridField f(box, m);
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!box.contains_closed(mu.point(i))) continue;
    f[block_index(mu.point(i), box, m)] += mu.mass(i);
    total += mu.mass(i);
  }
  const double hv = f.cell_volume();
  const double mean = total / box.volume();
  for (auto& v : f.values()) v = v / hv - mean;
  return f;
}

/// Standard (2d+1)-point Laplacian; Neumann ghosts reflect, Dirichlet ghosts
/// are the negated boundary value (zero on the face).
inline ScalarGridField apply_laplacian(const ScalarGridField& u, BoundaryCondition bc) {
  ScalarGridField out(u.box(), u.m());
  const int d = u.dim(), m = u.m();
  const double ih2 = 1.0 / (u.spacing() * u.spacing());
  std::vector<int> idx;
  for (std::size_t k = 0; k < u.size(); ++k) {
    u.multi_index(k, idx);
    double s = 0.0;
    for (int a = 0; a < d; ++a) {
      const std::size_t st = u.stride(a);
      const double lo = idx[a] > 0 ? u[k - st] : (bc == BoundaryCondition::neumann ? u[k] : -u[k]);
      const double hi = idx[a] < m - 1 ? u[k + st] : (bc == BoundaryCondition::neumann ? u[k] : -u[k]);
      s += lo - 2.0 * u[k] + hi;
    }
    out[k] = s * ih2;
  }
  return out;
}

/// Discrete Dirichlet energy -h^d <u, Lap_h u>, summed face by face.
inline double grad_energy(const ScalarGridField& u, BoundaryCondition bc = BoundaryCondition::neumann) {
  const int d = u.dim(), m = u.m();
  const double w = std::pow(u.spacing(), d - 2);
  std::vector<int> idx;
  double e = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    u.multi_index(k, idx);
    for (int a = 0; a < d; ++a) {
      if (idx[a] < m - 1) {
        const double df = u[k + u.stride(a)] - u[k];
        e += df * df;
      }
      if (bc == BoundaryCondition::dirichlet) {
        if (idx[a] == 0) e += 2.0 * u[k] * u[k];
        if (idx[a] == m - 1) e += 2.0 * u[k] * u[k];
      }
    }
  }
  return e * w;
}

inline double poisson_residual(const ScalarGridField& u, const ScalarGridField& datum, BoundaryCondition bc) {
  auto lap = apply_laplacian(u, bc);
  double r = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) r = std::max(r, std::abs(lap[k] - datum[k]));
  return r;
}

namespace detail {

/// Orthonormal 1D eigenbasis of the three-point Laplacian: phi[k*m + i].
struct AxisBasis {
  int m = 0;
  std::vector<double> phi;
  std::vector<double> eig;  // eigenvalues of -Lap_h, >= 0
};

inline AxisBasis axis_basis(int m, double h, BoundaryCondition bc) {
  AxisBasis b;
  b.m = m;
  b.phi.resize(static_cast<std::size_t>(m) * m);
  b.eig.resize(m);
  const double pi = std::numbers::pi;
  for (int k = 0; k < m; ++k) {
    const int q = bc == BoundaryCondition::neumann ? k : k + 1;
    const bool single = bc == BoundaryCondition::neumann ? k == 0 : k == m - 1;
    const double c = std::sqrt((single ? 1.0 : 2.0) / m);
    for (int i = 0; i < m; ++i) {
      const double arg = pi * q * (i + 0.5) / m;
      b.phi[static_cast<std::size_t>(k) * m + i] = c * (bc == BoundaryCondition::neumann ? std::cos(arg) : std::sin(arg));
    }
    const double s = std::sin(pi * q / (2.0 * m));
    b.eig[k] = 4.0 / (h * h) * s * s;
  }
  return b;
}

/// Apply the basis along one axis; forward gives coefficients.
inline void transform_axis(std::vector<double>& data, int d, int m, int axis, const AxisBasis& b, bool forward) {
  std::size_t stride = 1;
  for (int i = axis + 1; i < d; ++i) stride *= static_cast<std::size_t>(m);
  const std::size_t block = stride * static_cast<std::size_t>(m);
  std::vector<double> line(m), out(m);
  for (std::size_t base0 = 0; base0 < data.size(); base0 += block) {
    for (std::size_t off = 0; off < stride; ++off) {
      const std::size_t base = base0 + off;
      for (int i = 0; i < m; ++i) line[i] = data[base + i * stride];
      if (forward) {
        for (int k = 0; k < m; ++k) {
          const double* row = b.phi.data() + static_cast<std::size_t>(k) * m;
          double s = 0.0;
          for (int i = 0; i < m; ++i) s += row[i] * line[i];
          out[k] = s;
        }
      } else {
        std::fill(out.begin(), out.end(), 0.0);
        for (int k = 0; k < m; ++k) {
          const double* row = b.phi.data() + static_cast<std::size_t>(k) * m;
          const double c = line[k];
          for (int i = 0; i < m; ++i) out[i] += row[i] * c;
        }
      }
      for (int i = 0; i < m; ++i) data[base + i * stride] = out[i];
    }
  }
}

inline ScalarGridField solve_spectral(const ScalarGridField& datum, BoundaryCondition bc) {
  const int d = datum.dim(), m = datum.m();
  const AxisBasis b = axis_basis(m, datum.spacing(), bc);
  std::vector<double> c = datum.values();
  for (int a = 0; a < d; ++a) transform_axis(c, d, m, a, b, true);
  std::vector<int> idx;
  for (std::size_t k = 0; k < c.size(); ++k) {
    datum.multi_index(k, idx);
    double lam = 0.0;
    for (int a = 0; a < d; ++a) lam += b.eig[idx[a]];
    c[k] = lam > 0.0 ? -c[k] / lam : 0.0;
  }
  for (int a = 0; a < d; ++a) transform_axis(c, d, m, a, b, false);
  return ScalarGridField(datum.box(), m, std::move(c));
}

inline void remove_mean(std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  s /= static_cast<double>(x.size());
  for (double& v : x) v -= s;
}

/// Jacobi-preconditioned conjugate gradients on -Lap_h u = -f.
inline ScalarGridField solve_cg(const ScalarGridField& datum, BoundaryCondition bc, double tol, int max_iter) {
  const int d = datum.dim(), m = datum.m();
  const bool neu = bc == BoundaryCondition::neumann;
  const double ih2 = 1.0 / (datum.spacing() * datum.spacing());
  const std::size_t n = datum.size();
  std::vector<double> diag(n);
  std::vector<int> idx;
  for (std::size_t k = 0; k < n; ++k) {
    datum.multi_index(k, idx);
    double s = 0.0;
    for (int a = 0; a < d; ++a) {
      for (int side = 0; side < 2; ++side) {
        bool edge = side == 0 ? idx[a] == 0 : idx[a] == m - 1;
        s += edge ? (neu ? 0.0 : 2.0) : 1.0;
      }
    }
    diag[k] = std::max(s, 1.0) * ih2;
  }
  auto apply = [&](const std::vector<double>& x) {
    ScalarGridField f(datum.box(), m, x);
    auto l = apply_laplacian(f, bc);
    std::vector<double> y = l.values();
    for (double& v : y) v = -v;
    return y;
  };
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  std::vector<double> rhs = datum.values();
  for (double& v : rhs) v = -v;
  if (neu) remove_mean(rhs);
  std::vector<double> x(n, 0.0), r = rhs, z(n), p(n);
  const double bnorm = std::sqrt(dot(rhs, rhs));
  if (bnorm == 0.0) return ScalarGridField(datum.box(), m);
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  if (neu) remove_mean(z);
  p = z;
  double rz = dot(r, z);
  for (int it = 0; it < max_iter; ++it) {
    auto Ap = apply(p);
    const double alpha = rz / dot(p, Ap);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    if (std::sqrt(dot(r, r)) <= tol * bnorm) break;
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    if (neu) remove_mean(z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  if (neu) remove_mean(x);
  return ScalarGridField(datum.box(), m, std::move(x));
}

}  // namespace detail

class NonZeroMean : public std::invalid_argument {
 public:
  NonZeroMean() : std::invalid_argument("Neumann datum must integrate to zero") {}
};

inline void require_zero_mean(const ScalarGridField& f) {
  double s = 0.0, a = 0.0;
  for (double v : f.values()) {
    s += v;
    a += std::abs(v);
  }
  if (std::abs(s) > 1e-9 * std::max(1.0, a)) throw NonZeroMean();
}

/// Solve Lap_h u = datum; Neumann solutions are returned mean-zero.
inline ScalarGridField solve_poisson(const ScalarGridField& datum, BoundaryCondition bc,
                                     PoissonMethod method = PoissonMethod::spectral) {
  if (bc == BoundaryCondition::neumann) require_zero_mean(datum);
  if (method == PoissonMethod::cg) return detail::solve_cg(datum, bc, 1e-10, 100000);
  auto u = detail::solve_spectral(datum, bc);
  if (bc == BoundaryCondition::neumann) detail::remove_mean(u.values());
  return u;
}

/// Discrete H^{-1,2} norm: square root of the Neumann potential's energy.
inline double neg_sobolev_norm(const ScalarGridField& datum) {
  return std::sqrt(grad_energy(solve_poisson(datum, BoundaryCondition::neumann), BoundaryCondition::neumann));
}

/// inf_a sum over selected cells of |f - a|^2 h^d.
inline double grid_variance(const ScalarGridField& f, const std::function<bool(std::span<const double>)>& keep) {
  double s = 0.0, s2 = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    auto x = f.cell_center(k);
    if (!keep(x)) continue;
    s += f[k];
    s2 += f[k] * f[k];
    ++n;
  }
  if (n == 0) return 0.0;
  const double var = std::max(0.0, s2 - s * s / static_cast<double>(n));
  return var * f.cell_volume();
}

/// Variance over the inner region {dist(x, complement) > r}.
inline double inner_variance(const ScalarGridField& f, double r) {
  const Box& b = f.box();
  return grid_variance(f, [&](std::span<const double> x) { return inner_region_contains(x, b, r); });
}

// ---- dyadic block scan ----

struct DyadicPoint {
  double L0 = 0.0;
  double norm_sq_per_volume = 0.0;
};

inline bool is_power_of_two_ratio(double L, double L0) {
  const double q = L / L0;
  const double k = std::round(std::log2(q));
  return k >= 0 && std::abs(q - std::ldexp(1.0, static_cast<int>(k))) <= 1e-9 * q;
}

/// Per-volume squared H^{-1,2} norm of kappa(Q_L) - sum_k kappa(Q_k) chi_k
/// for each block side L0.
inline std::vector<DyadicPoint> dyadic_block_norm_scan(const PointMeasure& mu, const Box& box,
                                                       std::span<const double> L0s, int m) {
  std::vector<DyadicPoint> out;
  const double L = box.side();
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (box.contains_closed(mu.point(i))) total += mu.mass(i);
  const double kappa = total / box.volume();
  for (double L0 : L0s) {
    if (!(L0 > 0.0) || !is_power_of_two_ratio(L, L0))
      throw std::invalid_argument("dyadic_block_norm_scan: L/L0 must be a power of two");
    const int nb = static_cast<int>(std::lround(L / L0));
    if (m % nb != 0) throw std::invalid_argument("dyadic_block_norm_scan: grid must refine the blocks");
    auto parts = split_by_blocks(mu, box, nb);
    const double v0 = std::pow(L0, box.dim());
    ScalarGridField f(box, m);
    for (std::size_t k = 0; k < f.size(); ++k) {
      auto x = f.cell_center(k);
      f[k] = kappa - parts[block_index(x, box, nb)].total_mass() / v0;
    }
    const double n = neg_sobolev_norm(f);
    out.push_back({L0, n * n / box.volume()});
  }
  return out;
}

// ---- PDE ansatz experiment ----

struct PdeAnsatzRecord {
  double L = 0.0;
  double L0 = 0.0;
  int m = 0;
  std::size_t reps = 0;
  MeanSe dirichlet_energy;  // per volume
  MeanSe neumann_energy;    // per volume
  MeanSe u_squared;         // int u_D^2 / L^{d+2}
  MeanSe glued_energy;      // per volume
  std::size_t order_violations = 0;  // replications with Dirichlet > Neumann
};

/// Sub-field of the cells inside block b of an nb^d split.
inline ScalarGridField extract_block(const ScalarGridField& f, int nb, std::size_t b) {
  const int d = f.dim();
  const int mb = f.m() / nb;
  auto boxes = partition_box(f.box(), nb);
  ScalarGridField out(boxes[b], mb);
  std::vector<int> bidx(d);
  {
    std::size_t t = b;
    for (int i = d - 1; i >= 0; --i) {
      bidx[i] = static_cast<int>(t % nb);
      t /= nb;
    }
  }
  std::vector<int> idx;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out.multi_index(k, idx);
    std::size_t g = 0;
    for (int i = 0; i < d; ++i) g = g * f.m() + static_cast<std::size_t>(bidx[i] * mb + idx[i]);
    out[k] = f[g];
  }
  return out;
}

inline PdeAnsatzRecord pde_ansatz_stats(const Box& box, double intensity, int m, double L0, std::size_t reps,
                                        std::uint64_t master_seed, std::uint64_t stream_offset = 0) {
  const double L = box.side();
  const double q = L / L0;
  if (!(L0 > 0.0) || std::abs(q - std::round(q)) > 1e-9) throw std::invalid_argument("pde_ansatz_stats: L/L0 must be an integer");
  const int nb = static_cast<int>(std::lround(q));
  if (m % nb != 0) throw std::invalid_argument("pde_ansatz_stats: grid must refine the blocks");
  const int d = box.dim();
  std::vector<double> ed(reps), en(reps), uu(reps), eg(reps);
  std::vector<char> bad(reps, 0);
  parallel_for(reps, [&](std::size_t r) {
    RngStream rng(master_seed, stream_offset + r);
    auto mu = sample_poisson(box, intensity, rng);
    auto f = rasterize(mu, box, m);
    auto uD = solve_poisson(f, BoundaryCondition::dirichlet);
    auto uN = solve_poisson(f, BoundaryCondition::neumann);
    ed[r] = grad_energy(uD, BoundaryCondition::dirichlet) / box.volume();
    en[r] = grad_energy(uN, BoundaryCondition::neumann) / box.volume();
    double s = 0.0;
    for (double v : uD.values()) s += v * v;
    uu[r] = s * uD.cell_volume() / std::pow(L, d + 2);
    bad[r] = ed[r] > en[r] * (1.0 + 1e-12);
    double g = 0.0;
    const std::size_t nblocks = static_cast<std::size_t>(std::lround(std::pow(nb, d)));
    for (std::size_t b = 0; b < nblocks; ++b) {
      auto fb = extract_block(f, nb, b);
      detail::remove_mean(fb.values());
      g += grad_energy(solve_poisson(fb, BoundaryCondition::dirichlet), BoundaryCondition::dirichlet);
    }
    eg[r] = g / box.volume();
  });
  PdeAnsatzRecord rec;
  rec.L = L;
  rec.L0 = L0;
  rec.m = m;
  rec.reps = reps;
  rec.dirichlet_energy = mean_se(ed);
  rec.neumann_energy = mean_se(en);
  rec.u_squared = mean_se(uu);
  rec.glued_energy = mean_se(eg);
  for (char b : bad) rec.order_violations += b;
  return rec;
}

// ---- Kantorovich potential on a grid ----

struct GradientField {
  ScalarGridField u;
  std::vector<ScalarGridField> grad;  // one component per axis
  double energy = 0.0;                // h^d sum |grad u|^2
  bool coarse = false;                // spacing larger than ell / 2
};

/// u = Q(v) at the cell centers of an m^d grid, with central differences
/// (one-sided on the outer layer) for the gradient.
inline GradientField potential_gradient_field(std::span<const double> v, const PointMeasure& mu, const CostSpec& cost,
                                              int m, std::optional<double> ell = std::nullopt) {
  cost.validate();
  if (cost.p != 2.0) throw std::invalid_argument("potential_gradient_field: p = 2 only");
  if (!cost.box) throw std::invalid_argument("potential_gradient_field: cost needs a box");
  const Box& box = *cost.box;
  GradientField out;
  auto centers = grid_centers(box, m);
  auto vals = c_transform(mu.points(), v, cost, centers);
  out.u = ScalarGridField(box, m, std::move(vals));
  const int d = box.dim();
  const double h = out.u.spacing();
  std::vector<int> idx;
  for (int a = 0; a < d; ++a) out.grad.emplace_back(box, m);
  for (std::size_t k = 0; k < out.u.size(); ++k) {
    out.u.multi_index(k, idx);
    double g2 = 0.0;
    for (int a = 0; a < d; ++a) {
      const std::size_t st = out.u.stride(a);
      double g;
      if (m == 1) g = 0.0;
      else if (idx[a] == 0) g = (out.u[k + st] - out.u[k]) / h;
      else if (idx[a] == m - 1) g = (out.u[k] - out.u[k - st]) / h;
      else g = (out.u[k + st] - out.u[k - st]) / (2.0 * h);
      out.grad[a][k] = g;
      g2 += g * g;
    }
    out.energy += g2;
  }
  out.energy *= out.u.cell_volume();
  if (ell) out.coarse = h > 0.5 * *ell;
  return out;
}

struct BrenierReport {
  std::size_t checked = 0;     // unsplit pairs with x in the inner region
  std::size_t within = 0;      // of those, |x - grad u(x)/2 - y| <= tolerance
  double max_error = 0.0;
};

/// Compares y with x - grad u(x)/2 for plan pairs whose source x lies in the
/// inner region at distance ell and sends all its mass to one target.
inline BrenierReport brenier_map_check(const TransportSolution& sol, const PointMeasure& mu, const PointMeasure& lambda,
                                       const CostSpec& cost, double ell, double step, double tolerance) {
  if (cost.p != 2.0 || cost.metric != Metric::boundary) throw std::invalid_argument("brenier_map_check: boundary cost, p = 2");
  const Box& box = *cost.box;
  std::vector<int> outdeg(lambda.size(), 0);
  for (const auto& e : sol.plan) outdeg[e.source]++;
  BrenierReport rep;
  const int d = box.dim();
  for (const auto& e : sol.plan) {
    auto x = lambda.point(e.source);
    if (outdeg[e.source] != 1 || !inner_region_contains(x, box, ell)) continue;
    PointSet probes(d);
    std::vector<double> z(x.begin(), x.end());
    for (int a = 0; a < d; ++a) {
      z[a] = x[a] + step;
      probes.push_back(z);
      z[a] = x[a] - step;
      probes.push_back(z);
      z[a] = x[a];
    }
    auto q = c_transform(mu.points(), sol.v, cost, probes);
    double err2 = 0.0;
    auto y = mu.point(e.target);
    for (int a = 0; a < d; ++a) {
      const double g = (q[2 * a] - q[2 * a + 1]) / (2.0 * step);
      const double diff = x[a] - 0.5 * g - y[a];
      err2 += diff * diff;
    }
    const double err = std::sqrt(err2);
    rep.checked++;
    if (err <= tolerance) rep.within++;
    rep.max_error = std::max(rep.max_error, err);
  }
  return rep;
}

}  // namespace wbound
