#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "wbound/geometry.hpp"
#include "wbound/rng.hpp"

using namespace wbound;

TEST(Box, BasicQuantities) {
  Box b(3, 2.0);
  EXPECT_EQ(b.dim(), 3);
  EXPECT_DOUBLE_EQ(b.volume(), 8.0);
  EXPECT_DOUBLE_EQ(b.diameter(), 2.0 * std::sqrt(3.0));
  EXPECT_DOUBLE_EQ(b.circumradius(), std::sqrt(3.0));
  std::vector<double> c = b.center();
  for (double x : c) EXPECT_DOUBLE_EQ(x, 1.0);
  std::vector<double> face{0.0, 1.0, 1.0};
  EXPECT_TRUE(b.contains_closed(face));
  EXPECT_FALSE(b.contains_open(face));
  EXPECT_THROW(Box(0, 1.0), std::invalid_argument);
  EXPECT_THROW(Box(2, 0.0), std::invalid_argument);
  EXPECT_THROW(Box(2, -1.0), std::invalid_argument);
}

TEST(Box, DistanceToComplement) {
  Box b(2, 4.0);
  std::vector<double> x{1.0, 3.5};
  EXPECT_DOUBLE_EQ(dist_to_complement(x, b), 0.5);
  std::vector<double> out{5.0, 1.0};
  EXPECT_DOUBLE_EQ(dist_to_complement(out, b), 0.0);
  std::vector<double> wrong{1.0};
  EXPECT_THROW(dist_to_complement(wrong, b), DimensionMismatch);
}

TEST(BoundaryCost, HandValues) {
  Box b(1, 1.0);
  std::vector<double> x{0.1}, y{0.9};
  // direct 0.8^2 = 0.64, via boundary 0.1^2 + 0.1^2 = 0.02
  EXPECT_NEAR(boundary_cost(x, y, b, 2.0), 0.02, 1e-15);
  EXPECT_EQ(boundary_branch(x, y, b, 2.0), Branch::boundary);
  std::vector<double> u{0.4}, v{0.6};
  EXPECT_NEAR(boundary_cost(u, v, b, 2.0), 0.04, 1e-15);
  EXPECT_EQ(boundary_branch(u, v, b, 2.0), Branch::euclidean);
  EXPECT_THROW(boundary_cost(u, v, b, 0.5), std::invalid_argument);
}

TEST(BoundaryCost, TieReportsEuclidean) {
  Box b(1, 2.0);
  // p = 1: |x-y| = 1 and d(x) + d(y) = 0.5 + 0.5
  std::vector<double> x{0.5}, y{1.5};
  EXPECT_EQ(boundary_branch(x, y, b, 1.0), Branch::euclidean);
  EXPECT_DOUBLE_EQ(boundary_cost(x, y, b, 1.0), 1.0);
}

TEST(BoundaryCost, NeverExceedsEuclideanAndIsSymmetric) {
  RngStream rng(3, 0);
  for (int d = 1; d <= 3; ++d) {
    Box b(d, 3.0);
    std::vector<double> x(d), y(d);
    for (int t = 0; t < 500; ++t) {
      for (int i = 0; i < d; ++i) {
        x[i] = rng.uniform(0.0, 3.0);
        y[i] = rng.uniform(0.0, 3.0);
      }
      for (double p : {1.0, 1.5, 2.0, 3.0}) {
        EXPECT_LE(boundary_cost(x, y, b, p), euclidean_cost(x, y, p));
        EXPECT_DOUBLE_EQ(boundary_cost(x, y, b, p), boundary_cost(y, x, b, p));
      }
    }
  }
}

TEST(Regions, InnerRegionAndPartition) {
  Box b(2, 4.0);
  std::vector<double> x{1.5, 2.0};
  EXPECT_TRUE(inner_region_contains(x, b, 1.0));
  EXPECT_FALSE(inner_region_contains(x, b, 1.5));
  EXPECT_THROW(inner_region_contains(x, b, -1.0), std::invalid_argument);

  auto parts = partition_box(b, 2);
  ASSERT_EQ(parts.size(), 4u);
  EXPECT_DOUBLE_EQ(parts[1].lower(0), 0.0);
  EXPECT_DOUBLE_EQ(parts[1].lower(1), 2.0);
  EXPECT_DOUBLE_EQ(parts[2].lower(0), 2.0);
  double vol = 0.0;
  for (const auto& p : parts) vol += p.volume();
  EXPECT_DOUBLE_EQ(vol, b.volume());
  std::vector<double> y{3.0, 1.0};
  EXPECT_EQ(block_index(y, b, 2), 2u);
  std::vector<double> corner{4.0, 4.0};
  EXPECT_EQ(block_index(corner, b, 2), 3u);
}

TEST(Quintic, ProfileAndBounds) {
  EXPECT_DOUBLE_EQ(quintic::f(0.0), 0.0);
  EXPECT_DOUBLE_EQ(quintic::f(1.0), 1.0);
  EXPECT_DOUBLE_EQ(quintic::df(0.0), 0.0);
  EXPECT_DOUBLE_EQ(quintic::df(1.0), 0.0);
  EXPECT_DOUBLE_EQ(quintic::d2f(0.0), 0.0);
  EXPECT_DOUBLE_EQ(quintic::d2f(1.0), 0.0);
  double m1 = 0.0, m2 = 0.0;
  for (int i = 0; i <= 100000; ++i) {
    double t = i / 100000.0;
    m1 = std::max(m1, std::abs(quintic::df(t)));
    m2 = std::max(m2, std::abs(quintic::d2f(t)));
  }
  EXPECT_NEAR(m1, quintic::max_df, 1e-9);
  EXPECT_NEAR(m2, quintic::max_d2f, 1e-6);
  EXPECT_LE(m2, quintic::max_d2f);
}

class CutoffTest : public ::testing::TestWithParam<int> {};

TEST_P(CutoffTest, ValuesDerivativesAndConstants) {
  const int d = GetParam();
  const double L = 10.0, delta = 0.2;
  Box b(d, L);
  CutoffFunction eta(b, delta);
  const double r = eta.r();
  EXPECT_DOUBLE_EQ(r, 2.0);
  RngStream rng(11, d);
  std::vector<double> x(d), xp(d), xm(d);
  const double hstep = 1e-5;
  double max_grad_r = 0.0, max_hess_r2 = 0.0, max_lap_r2 = 0.0;
  for (int t = 0; t < 4000; ++t) {
    for (int i = 0; i < d; ++i) x[i] = rng.uniform(0.0, L);
    const double v = eta.value(x);
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
    if (dist_to_complement(x, b) < r) EXPECT_DOUBLE_EQ(v, 1.0);
    if (eta.dist_to_zero_set(x) == 0.0) EXPECT_DOUBLE_EQ(v, 0.0);
    auto g = eta.gradient(x);
    auto H = eta.hessian(x);
    double gn = 0.0, hn = 0.0;
    for (int i = 0; i < d; ++i) {
      xp = x;
      xm = x;
      xp[i] += hstep;
      xm[i] -= hstep;
      EXPECT_NEAR(g[i], (eta.value(xp) - eta.value(xm)) / (2 * hstep), 1e-6);
      auto gp = eta.gradient(xp), gm = eta.gradient(xm);
      for (int j = 0; j < d; ++j) EXPECT_NEAR(H[j * d + i], (gp[j] - gm[j]) / (2 * hstep), 1e-5);
      gn += g[i] * g[i];
      for (int j = 0; j < d; ++j) hn += H[i * d + j] * H[i * d + j];
    }
    max_grad_r = std::max(max_grad_r, std::sqrt(gn) * r);
    max_hess_r2 = std::max(max_hess_r2, std::sqrt(hn) * r * r);
    max_lap_r2 = std::max(max_lap_r2, std::abs(eta.laplacian(x)) * r * r);
    // sandwich against the cubed distance to the zero set, inside the transition layer
    const double dz = eta.dist_to_zero_set(x);
    if (dz > 0.0 && dz < r) {
      const double q = std::pow(dz / r, 3);
      EXPECT_LE(q / eta.sandwich_constant(), v * (1 + 1e-12));
      EXPECT_LE(v, eta.sandwich_constant() * q * (1 + 1e-12));
    }
  }
  EXPECT_LE(max_grad_r, eta.derivative_constant());
  EXPECT_LE(max_hess_r2, eta.derivative_constant());
  EXPECT_LE(max_lap_r2, eta.laplacian_constant());
}

INSTANTIATE_TEST_SUITE_P(Dims, CutoffTest, ::testing::Values(1, 2, 3));

TEST(Cutoff, RejectsBadDelta) {
  Box b(2, 1.0);
  EXPECT_THROW(make_cutoff(b, 0.0), std::invalid_argument);
  EXPECT_THROW(make_cutoff(b, 0.3), std::invalid_argument);
  EXPECT_NO_THROW(make_cutoff(b, 0.25));
}

TEST(Cutoff, QuarterDeltaZeroSetIsCenter) {
  Box b(2, 8.0);
  auto eta = make_cutoff(b, 0.25);
  std::vector<double> c{4.0, 4.0}, off{4.5, 4.0};
  EXPECT_DOUBLE_EQ(eta.value(c), 0.0);
  EXPECT_GT(eta.value(off), 0.0);
  EXPECT_DOUBLE_EQ(eta.dist_to_zero_set(off), 0.5);
}

TEST(PointSetAndGrid, CentersAndBallVolume) {
  Box b(2, 2.0);
  auto g = grid_centers(b, 2);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_DOUBLE_EQ(g[0][0], 0.5);
  EXPECT_DOUBLE_EQ(g[3][1], 1.5);
  EXPECT_NEAR(unit_ball_volume(1), 2.0, 1e-14);
  EXPECT_NEAR(unit_ball_volume(2), std::numbers::pi, 1e-14);
  EXPECT_NEAR(unit_ball_volume(3), 4.0 * std::numbers::pi / 3.0, 1e-14);
  EXPECT_THROW(PointSet(2, std::vector<double>{1.0, 2.0, 3.0}), std::invalid_argument);
}
