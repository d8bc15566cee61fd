#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "wbound/transport.hpp"

using namespace wbound;

namespace {

PointMeasure line_measure(std::initializer_list<double> xs, double mass = 1.0) {
  PointMeasure m(1);
  for (double x : xs) m.push_back(std::vector<double>{x}, mass);
  return m;
}

}  // namespace

TEST(Solve, TwoAtomMonotoneMatching) {
  auto mu = line_measure({0.0, 1.0});
  auto lambda = line_measure({0.25, 0.75});
  auto sol = solve(mu, lambda, CostSpec::euclidean(2.0));
  EXPECT_NEAR(sol.value, 0.125, 1e-15);
  EXPECT_TRUE(sol.certificate.optimal);
  ASSERT_EQ(sol.plan.size(), 2u);
}

TEST(Solve, BoundaryCostPrefersExit) {
  Box b(1, 1.0);
  auto mu = line_measure({0.05});
  auto lambda = line_measure({0.95});
  auto sol = solve(mu, lambda, CostSpec::boundary(b, 2.0));
  EXPECT_NEAR(sol.value, 0.005, 1e-15);
  auto solW = solve(mu, lambda, CostSpec::euclidean(2.0));
  EXPECT_NEAR(solW.value, 0.81, 1e-15);
}

TEST(Solve, IdenticalMeasuresCostNothing) {
  RngStream rng(1, 0);
  auto mu = oracle::random_cloud(2, 30, 3.0, rng, false);
  auto sol = solve(mu, mu, CostSpec::euclidean(2.0));
  EXPECT_EQ(sol.value, 0.0);
}

TEST(Solve, MatchesBruteForceOnSmallInstances) {
  RngStream rng(2024, 0);
  for (int t = 0; t < 60; ++t) {
    const int d = 1 + t % 3;
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 6);
    auto mu = oracle::random_cloud(d, n, 2.0, rng, true);
    auto lambda = oracle::random_cloud(d, n, 2.0, rng, true);
    const double p = 1.0 + t % 3;
    for (auto cost : {CostSpec::euclidean(p), CostSpec::boundary(Box(d, 2.0), p)}) {
      auto sol = solve(mu, lambda, cost);
      const double ref = oracle::brute_force_matching(mu, lambda, cost);
      EXPECT_NEAR(sol.value, ref, 1e-9 * std::max(1.0, ref)) << "t=" << t;
    }
  }
}

TEST(Solve, OptimalityConditionsHoldWithUnequalCounts) {
  RngStream rng(99, 0);
  for (int t = 0; t < 20; ++t) {
    const int d = 1 + t % 3;
    auto mu = oracle::random_cloud(d, 5 + t, 4.0, rng, false);
    auto lambda = oracle::random_cloud(d, 40 + 3 * t, 4.0, rng, false);
    lambda = lambda.scaled(mu.total_mass() / lambda.total_mass());
    for (auto cost : {CostSpec::euclidean(2.0), CostSpec::boundary(Box(d, 4.0), 1.5)}) {
      auto sol = solve(mu, lambda, cost);
      auto a = oracle::audit(sol, mu, lambda, cost);
      const double scale = mu.total_mass() * std::pow(Box(d, 4.0).diameter(), cost.p);
      EXPECT_LE(a.marginal_error, 1e-10 * mu.total_mass());
      EXPECT_LE(a.dual_violation, 1e-10 * scale);
      EXPECT_LE(a.slackness, 1e-10 * scale);
      EXPECT_NEAR(a.primal, sol.value, 1e-10 * scale);
      EXPECT_NEAR(a.dual, a.primal, 1e-9 * std::max(1.0, a.primal));
      EXPECT_LE(sol.certificate.gap, 1e-9);
      EXPECT_TRUE(sol.certificate.optimal);
    }
  }
}

TEST(Solve, ScaledCostMultipliesValueAndPotentials) {
  RngStream rng(5, 0);
  Box b(2, 3.0);
  auto mu = oracle::random_cloud(2, 12, 3.0, rng, true);
  auto lambda = oracle::random_cloud(2, 12, 3.0, rng, true);
  const double t = 1.5, p = 2.0;
  auto s1 = solve(mu, lambda, CostSpec::boundary(b, p));
  auto st = solve(mu, lambda, CostSpec::boundary(b, p, t));
  EXPECT_NEAR(st.value, s1.value / t, 1e-12);
  auto a = oracle::audit(st, mu, lambda, CostSpec::boundary(b, p, t));
  EXPECT_LE(a.dual_violation, 1e-12);
}

TEST(Solve, Errors) {
  auto mu = line_measure({0.0, 1.0});
  auto lambda = line_measure({0.5}, 1.0);
  EXPECT_THROW(solve(mu, lambda, CostSpec::euclidean(2.0)), MassMismatch);
  EXPECT_THROW(solve(PointMeasure(1), lambda, CostSpec::euclidean(2.0)), EmptyMeasure);
  SolveOptions tiny;
  tiny.max_arcs = 1;
  EXPECT_THROW(solve(mu, line_measure({0.1, 0.2}), CostSpec::euclidean(2.0), tiny), CapacityExceeded);
  CostSpec bad{2.0, Metric::boundary, std::nullopt, 1.0};
  EXPECT_THROW(solve(mu, line_measure({0.1, 0.2}), bad), std::invalid_argument);
  EXPECT_THROW(solve(mu, line_measure({0.1, 0.2}), CostSpec::euclidean(0.5)), std::invalid_argument);
}

TEST(Solve, DegenerateCostsStillCertify) {
  // every atom at the same place: all costs zero
  PointMeasure mu(2), lambda(2);
  for (int i = 0; i < 6; ++i) mu.push_back(std::vector<double>{1.0, 1.0}, 1.0);
  for (int i = 0; i < 3; ++i) lambda.push_back(std::vector<double>{1.0, 1.0}, 2.0);
  auto sol = solve(mu, lambda, CostSpec::euclidean(2.0));
  EXPECT_EQ(sol.value, 0.0);
  EXPECT_EQ(sol.certificate.gap, 0.0);
  // grid against grid: many ties
  auto g = grid_centers(Box(2, 2.0), 4);
  PointMeasure a(g, std::vector<double>(g.size(), 1.0));
  PointMeasure c(2);
  for (std::size_t i = 0; i < g.size(); ++i) c.push_back(std::vector<double>{g[i][0] + 0.5, g[i][1]}, 1.0);
  auto s2 = solve(a, c, CostSpec::euclidean(2.0));
  EXPECT_NEAR(s2.value, 16 * 0.25, 1e-12);
  EXPECT_LE(s2.certificate.gap, 1e-12);
}

TEST(Transforms, HandValuesAndIdempotence) {
  PointSet Y(1, {0.0, 1.0});
  std::vector<double> v{0.0, -0.5};
  PointSet Q(1, {0.25, 0.75});
  auto u = c_transform(Y, v, CostSpec::euclidean(2.0), Q);
  EXPECT_NEAR(u[0], std::min(0.0625, -0.5 + 0.5625), 1e-15);
  EXPECT_NEAR(u[1], std::min(0.5625, -0.5 + 0.0625), 1e-15);

  RngStream rng(8, 0);
  Box b(2, 2.0);
  auto X = oracle::random_cloud(2, 25, 2.0, rng, true);
  auto Yc = oracle::random_cloud(2, 10, 2.0, rng, true);
  std::vector<double> w(10);
  for (auto& x : w) x = rng.uniform(-1.0, 1.0);
  const auto cost = CostSpec::boundary(b, 2.0);
  auto q = c_transform(Yc.points(), w, cost, X.points());
  auto vh = hat_transform(X.points(), q, cost, Yc.points());
  for (std::size_t j = 0; j < w.size(); ++j) EXPECT_LE(vh[j], w[j] + 1e-15);
  auto q2 = c_transform(Yc.points(), vh, cost, X.points());
  for (std::size_t i = 0; i < q.size(); ++i) EXPECT_NEAR(q2[i], q[i], 1e-14);
  EXPECT_THROW(c_transform(PointSet(2), {}, cost, X.points()), EmptyMeasure);
}

TEST(Potentials, S0NormalizationAndOscillation) {
  Box b(1, 1.0);
  PointSet Y(1, {0.1, 0.5});
  std::vector<double> v{3.0, 2.0};
  auto n = normalize_potential_S0(v, Y, b, 2.0);
  // min(3 + 0.01, 2 + 0.25) = 2.25
  EXPECT_NEAR(n[0], 0.75, 1e-15);
  EXPECT_NEAR(n[1], -0.25, 1e-15);
  EXPECT_DOUBLE_EQ(oscillation(n), 1.0);
  auto t = normalize_potential_S0(v, Y, b, 2.0, 2.0);
  // min(3 + 0.005, 2 + 0.125)
  EXPECT_NEAR(t[1], -0.125, 1e-15);
  PointSet X(1, {0.0, 1.0});
  EXPECT_NEAR(hausdorff_to(X, Y), 0.5, 1e-15);
}

TEST(Displacement, IdenticalMeasuresHaveNoDisplacement) {
  Box b(2, 4.0);
  auto g = grid_centers(b, 4);
  PointMeasure m(g, std::vector<double>(g.size(), 1.0));
  auto sol = solve(m, m, CostSpec::boundary(b, 2.0));
  auto r = displacement_stats(sol, m, m, CostSpec::boundary(b, 2.0));
  EXPECT_EQ(r.max_b, 0.0);
  EXPECT_EQ(r.max_euclid, 0.0);
  EXPECT_EQ(r.boundary_pairs, 0u);
  EXPECT_THROW(displacement_stats(sol, m, m, CostSpec::euclidean(2.0)), std::invalid_argument);
}

TEST(Detail, MortonOrderIsAPermutation) {
  RngStream rng(1, 1);
  auto X = oracle::random_cloud(3, 50, 1.0, rng, true);
  auto o = detail::morton_order(X.points());
  std::vector<int> s(o);
  std::sort(s.begin(), s.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(s[i], i);
}
