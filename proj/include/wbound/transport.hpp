#pragma once

// Exact discrete transport for |x-y|^p and the boundary cost b^p, with dual
// potentials and the c-transforms Q and Q-hat.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wbound/geometry.hpp"
#include "wbound/measures.hpp"
#include "wbound/network_simplex.hpp"

namespace wbound {

enum class Metric { euclidean, boundary };

inline const char* to_string(Metric m) { return m == Metric::euclidean ? "euclidean" : "boundary"; }

/// Cost |x-y|^p or b(x,y)^p, multiplied by t^{1-p}.
struct CostSpec {
  double p = 2.0;
  Metric metric = Metric::euclidean;
  std::optional<Box> box;
  double scale = 1.0;

  static CostSpec euclidean(double p, double t = 1.0) { return CostSpec{p, Metric::euclidean, std::nullopt, t}; }
  static CostSpec boundary(const Box& b, double p, double t = 1.0) { return CostSpec{p, Metric::boundary, b, t}; }

  void validate() const {
    if (!(p >= 1.0) || !std::isfinite(p)) throw std::invalid_argument("CostSpec: p must be >= 1");
    if (!(scale > 0.0)) throw std::invalid_argument("CostSpec: scale must be positive");
    if (metric == Metric::boundary && !box) throw std::invalid_argument("CostSpec: boundary metric needs a box");
  }

  /// p' = p/(p-1); infinite for p = 1.
  double conjugate() const { return p > 1.0 ? p / (p - 1.0) : std::numeric_limits<double>::infinity(); }

  double scale_factor() const { return scale == 1.0 ? 1.0 : std::pow(scale, 1.0 - p); }

  CostSpec unscaled() const {
    CostSpec c = *this;
    c.scale = 1.0;
    return c;
  }

  double base(std::span<const double> x, std::span<const double> y) const {
    return metric == Metric::euclidean ? euclidean_cost(x, y, p) : boundary_cost(x, y, *box, p);
  }

  double operator()(std::span<const double> x, std::span<const double> y) const {
    return base(x, y) * scale_factor();
  }
};

struct PlanEntry {
  std::size_t source;  // index into lambda
  std::size_t target;  // index into mu
  double mass;
};

struct Certificate {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;  // |primal - dual| / max(|primal|, |dual|, floor)
  std::int64_t iterations = 0;
  bool optimal = false;
};

/// Optimal value, plan, potentials (u on lambda atoms, v on mu atoms) and
/// the primal-dual certificate.
struct TransportSolution {
  double value = 0.0;
  std::vector<PlanEntry> plan;
  std::vector<double> u;
  std::vector<double> v;
  Certificate certificate;
};

class CapacityExceeded : public std::runtime_error {
 public:
  explicit CapacityExceeded(const std::string& w) : std::runtime_error(w) {}
};

class MassMismatch : public std::invalid_argument {
 public:
  explicit MassMismatch(const std::string& w) : std::invalid_argument(w) {}
};

class EmptyMeasure : public std::invalid_argument {
 public:
  explicit EmptyMeasure(const std::string& w) : std::invalid_argument(w) {}
};

struct SolveOptions {
  /// Largest dense problem accepted, n_lambda * n_mu.
  std::int64_t max_arcs = std::int64_t{1} << 26;
  std::int64_t max_pivots = std::int64_t{1} << 40;
};

/// Dense row-major matrix of base costs (scale 1), rows = X, columns = Y.
inline std::vector<double> cost_matrix(const PointSet& X, const PointSet& Y, const CostSpec& cost) {
  cost.validate();
  require_dim(static_cast<std::size_t>(X.dim()), Y.dim(), "cost_matrix");
  const std::size_t nx = X.size(), ny = Y.size();
  std::vector<double> C(nx * ny);
  if (cost.metric == Metric::boundary) {
    std::vector<double> dy(ny);
    for (std::size_t j = 0; j < ny; ++j) dy[j] = power_p(dist_to_complement(Y[j], *cost.box), cost.p);
    for (std::size_t i = 0; i < nx; ++i) {
      const double dx = power_p(dist_to_complement(X[i], *cost.box), cost.p);
      double* row = C.data() + i * ny;
      for (std::size_t j = 0; j < ny; ++j) row[j] = std::min(euclidean_cost(X[i], Y[j], cost.p), dx + dy[j]);
    }
  } else {
    for (std::size_t i = 0; i < nx; ++i) {
      double* row = C.data() + i * ny;
      for (std::size_t j = 0; j < ny; ++j) row[j] = euclidean_cost(X[i], Y[j], cost.p);
    }
  }
  return C;
}

namespace detail {

/// Z-order of the points on a quantized bounding box.
inline std::vector<int> morton_order(const PointSet& P) {
  const int d = P.dim();
  const std::size_t n = P.size();
  std::vector<double> lo(d, std::numeric_limits<double>::infinity()), hi(d, -std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < n; ++k)
    for (int i = 0; i < d; ++i) {
      lo[i] = std::min(lo[i], P[k][i]);
      hi[i] = std::max(hi[i], P[k][i]);
    }
  const int bits = std::max(1, std::min(21, 63 / d));
  const double cells = std::ldexp(1.0, bits) - 1.0;
  std::vector<std::uint64_t> key(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    std::uint64_t code = 0;
    std::vector<std::uint64_t> q(d);
    for (int i = 0; i < d; ++i) {
      double w = hi[i] - lo[i];
      q[i] = w > 0 ? static_cast<std::uint64_t>((P[k][i] - lo[i]) / w * cells) : 0;
    }
    for (int b = bits - 1; b >= 0; --b)
      for (int i = 0; i < d; ++i) code = (code << 1) | ((q[i] >> b) & 1u);
    key[k] = code;
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key[a] < key[b]; });
  return order;
}

/// Q on a dense matrix: out[i] = min_j v[j] + C[i][j].
inline std::vector<double> q_dense(const std::vector<double>& C, std::size_t nx, std::size_t ny,
                                   const std::vector<double>& v) {
  std::vector<double> out(nx);
  for (std::size_t i = 0; i < nx; ++i) {
    const double* row = C.data() + i * ny;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < ny; ++j) best = std::min(best, v[j] + row[j]);
    out[i] = best;
  }
  return out;
}

/// Q-hat on a dense matrix: out[j] = max_i u[i] - C[i][j].
inline std::vector<double> qhat_dense(const std::vector<double>& C, std::size_t nx, std::size_t ny,
                                      const std::vector<double>& u) {
  std::vector<double> out(ny, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < nx; ++i) {
    const double* row = C.data() + i * ny;
    for (std::size_t j = 0; j < ny; ++j) out[j] = std::max(out[j], u[i] - row[j]);
  }
  return out;
}

}  // namespace detail

/// Exact optimum of the discrete problem between lambda (sources) and mu.
inline TransportSolution solve(const PointMeasure& mu, const PointMeasure& lambda, const CostSpec& cost,
                               const SolveOptions& opt = {}) {
  cost.validate();
  if (mu.empty() || lambda.empty()) throw EmptyMeasure("solve: empty measure");
  require_dim(static_cast<std::size_t>(mu.dim()), lambda.dim(), "solve");
  if (cost.box) require_dim(static_cast<std::size_t>(mu.dim()), cost.box->dim(), "solve");
  const double mmax = std::max(mu.total_mass(), lambda.total_mass());
  if (std::abs(mu.total_mass() - lambda.total_mass()) > 1e-9 * mmax)
    throw MassMismatch("solve: total masses differ");
  const std::size_t nx = lambda.size(), ny = mu.size();
  if (static_cast<double>(nx) * static_cast<double>(ny) > static_cast<double>(opt.max_arcs))
    throw CapacityExceeded("solve: " + std::to_string(nx) + " x " + std::to_string(ny) + " exceeds solver capacity");

  const std::vector<double> C = cost_matrix(lambda.points(), mu.points(), cost.unscaled());
  const auto so = detail::morton_order(lambda.points());
  const auto sk = detail::morton_order(mu.points());
  detail::DenseNetworkSimplex ns(lambda.masses(), mu.masses(), C, so, sk);
  auto status = ns.run(opt.max_pivots);

  TransportSolution sol;
  sol.certificate.iterations = ns.pivots();
  double primal = 0.0;
  for (const auto& f : ns.flows()) {
    sol.plan.push_back({static_cast<std::size_t>(f.source), static_cast<std::size_t>(f.sink), f.amount});
    primal += f.amount * C[static_cast<std::size_t>(f.source) * ny + f.sink];
  }

  // potentials, then one Q-hat o Q pass to land in the transform class
  std::vector<double> v(ny);
  for (std::size_t j = 0; j < ny; ++j) v[j] = -ns.sink_potential(static_cast<int>(j));
  const double vmin = *std::min_element(v.begin(), v.end());
  for (double& x : v) x -= vmin;
  v = detail::qhat_dense(C, nx, ny, detail::q_dense(C, nx, ny, v));
  std::vector<double> u = detail::q_dense(C, nx, ny, v);
  double dual = 0.0;
  for (std::size_t i = 0; i < nx; ++i) dual += lambda.mass(i) * u[i];
  for (std::size_t j = 0; j < ny; ++j) dual -= mu.mass(j) * v[j];

  const double s = cost.scale_factor();
  if (s != 1.0) {
    primal *= s;
    dual *= s;
    for (double& x : u) x *= s;
    for (double& x : v) x *= s;
  }
  const double floor = 1e-15 * mmax * ns.max_cost() * s;
  sol.value = primal;
  sol.u = std::move(u);
  sol.v = std::move(v);
  sol.certificate.primal = primal;
  sol.certificate.dual = dual;
  sol.certificate.gap = std::abs(primal - dual) / std::max({std::abs(primal), std::abs(dual), floor, 1e-300});
  sol.certificate.optimal = status == detail::DenseNetworkSimplex::Status::optimal && sol.certificate.gap <= 1e-9;
  return sol;
}

/// Q_t(v)(x) = min_y v(y) + cost_t(x,y) at every query.
inline std::vector<double> c_transform(const PointSet& Y, std::span<const double> v, const CostSpec& cost,
                                       const PointSet& queries) {
  cost.validate();
  if (Y.empty()) throw EmptyMeasure("c_transform: empty support");
  if (v.size() != Y.size()) throw std::invalid_argument("c_transform: value count differs from support size");
  require_dim(static_cast<std::size_t>(Y.dim()), queries.dim(), "c_transform");
  std::vector<double> out(queries.size());
  for (std::size_t k = 0; k < queries.size(); ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < Y.size(); ++j) best = std::min(best, v[j] + cost(queries[k], Y[j]));
    out[k] = best;
  }
  return out;
}

/// Q-hat_t(u)(y) = max_x u(x) - cost_t(x,y) at every query.
inline std::vector<double> hat_transform(const PointSet& X, std::span<const double> u, const CostSpec& cost,
                                         const PointSet& queries) {
  cost.validate();
  if (X.empty()) throw EmptyMeasure("hat_transform: empty support");
  if (u.size() != X.size()) throw std::invalid_argument("hat_transform: value count differs from support size");
  require_dim(static_cast<std::size_t>(X.dim()), queries.dim(), "hat_transform");
  std::vector<double> out(queries.size());
  for (std::size_t k = 0; k < queries.size(); ++k) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < X.size(); ++i) best = std::max(best, u[i] - cost(X[i], queries[k]));
    out[k] = best;
  }
  return out;
}

/// Shift v so that min_y v(y) + t^{1-p} dist(y, complement)^p = 0.
inline std::vector<double> normalize_potential_S0(std::span<const double> v, const PointSet& Y, const Box& box,
                                                  double p, double scale = 1.0) {
  if (v.size() != Y.size()) throw std::invalid_argument("normalize_potential_S0: size mismatch");
  if (Y.empty()) return {};
  const double s = scale == 1.0 ? 1.0 : std::pow(scale, 1.0 - p);
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < Y.size(); ++j) m = std::min(m, v[j] + s * power_p(dist_to_complement(Y[j], box), p));
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x -= m;
  return out;
}

inline double oscillation(std::span<const double> v) {
  if (v.empty()) return 0.0;
  auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

/// max over x in X of the distance to the nearest y in Y.
inline double hausdorff_to(const PointSet& X, const PointSet& Y) {
  double worst = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < Y.size(); ++j) best = std::min(best, squared_distance(X[i], Y[j]));
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

struct PairInfo {
  std::size_t source;
  std::size_t target;
  double mass;
  double b;          // b(x,y), not raised to p
  double euclid;     // |x-y|
  Branch branch;
  bool x_inner;      // x in the inner region at distance ell
  bool y_inner;
};

struct DisplacementReport {
  double ell = 0.0;
  double osc_v = 0.0;
  double d_xy = 0.0;
  double max_b = 0.0;
  double max_euclid = 0.0;
  std::size_t euclidean_pairs = 0;
  std::size_t boundary_pairs = 0;
  std::vector<PairInfo> pairs;
};

/// ell = (osc_Y v + d(X,Y)^p)^{1/p} and, per plan pair, b(x,y) and its branch.
inline DisplacementReport displacement_stats(const TransportSolution& sol, const PointMeasure& mu,
                                             const PointMeasure& lambda, const CostSpec& cost) {
  cost.validate();
  if (cost.metric != Metric::boundary) throw std::invalid_argument("displacement_stats: boundary cost required");
  if (sol.v.size() != mu.size() || sol.u.size() != lambda.size())
    throw std::invalid_argument("displacement_stats: missing duals");
  const Box& box = *cost.box;
  DisplacementReport r;
  r.osc_v = oscillation(sol.v);
  r.d_xy = hausdorff_to(lambda.points(), mu.points());
  r.ell = std::pow(r.osc_v + power_p(r.d_xy, cost.p), 1.0 / cost.p);
  for (const auto& e : sol.plan) {
    auto x = lambda.point(e.source);
    auto y = mu.point(e.target);
    PairInfo pi{e.source, e.target, e.mass, 0.0, distance(x, y), boundary_branch(x, y, box, cost.p),
                inner_region_contains(x, box, r.ell), inner_region_contains(y, box, r.ell)};
    pi.b = std::pow(boundary_cost(x, y, box, cost.p), 1.0 / cost.p);
    r.max_b = std::max(r.max_b, pi.b);
    r.max_euclid = std::max(r.max_euclid, pi.euclid);
    (pi.branch == Branch::euclidean ? r.euclidean_pairs : r.boundary_pairs)++;
    r.pairs.push_back(pi);
  }
  return r;
}

}  // namespace wbound
