#include "mmls/point_cloud.hpp"

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace mmls;

namespace {

MatrixXd random_points(Rng& rng, Index n, Index dim) {
  MatrixXd m(n, dim);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < dim; ++j) m(i, j) = rng.uniform();
  }
  return m;
}

TEST(PointCloudBuild, SinglePoint) {
  MatrixXd m(1, 3);
  m << 1, 2, 3;
  const PointCloud cloud = PointCloud::build(m);
  EXPECT_EQ(cloud.size(), 1);
  VectorXd center(3);
  center << 1, 2, 3;
  EXPECT_EQ(cloud.radius_query(center, 0.5).size(), 1u);
}

TEST(PointCloudBuild, RejectsEmptyAndNonFinite) {
  try {
    PointCloud::build(MatrixXd(0, 3));
    FAIL() << "expected EmptyInput";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyInput);
  }
  MatrixXd bad(2, 2);
  bad << 1, 2, std::numeric_limits<double>::quiet_NaN(), 4;
  try {
    PointCloud::build(bad);
    FAIL() << "expected NonFiniteInput";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFiniteInput);
  }
}

TEST(RadiusQuery, HugeRadiusReturnsEverything) {
  Rng rng(5);
  const MatrixXd m = random_points(rng, 200, 3);
  const PointCloud cloud = PointCloud::build(m);
  const auto hits = cloud.radius_query(VectorXd::Zero(3), 1e6);
  ASSERT_EQ(hits.size(), 200u);
  for (Index i = 0; i < 200; ++i) EXPECT_EQ(hits[static_cast<std::size_t>(i)], i);
}

TEST(RadiusQuery, FarCenterReturnsNothing) {
  Rng rng(6);
  const PointCloud cloud = PointCloud::build(random_points(rng, 100, 2));
  VectorXd center(2);
  center << 100, 100;
  EXPECT_TRUE(cloud.radius_query(center, 1.0).empty());
}

TEST(RadiusQuery, StoredPointWithTinyRadius) {
  MatrixXd m(3, 2);
  m << 0, 0, 1, 1, 2, 2;
  const PointCloud cloud = PointCloud::build(m);
  VectorXd center(2);
  center << 1, 1;
  const auto hits = cloud.radius_query(center, 1e-12);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0], 1);
}

TEST(RadiusQuery, StrictInequalityAtTheBoundary) {
  MatrixXd m(2, 1);
  m << 0, 1;
  const PointCloud cloud = PointCloud::build(m);
  VectorXd center(1);
  center << 0;
  // The point at distance exactly 1 is excluded.
  const auto hits = cloud.radius_query(center, 1.0);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0], 0);
}

TEST(RadiusQuery, MatchesBruteForceInR5) {
  Rng rng(7);
  const MatrixXd m = random_points(rng, 1000, 5);
  const PointCloud cloud = PointCloud::build(m);
  for (int trial = 0; trial < 50; ++trial) {
    VectorXd center(5);
    for (Index j = 0; j < 5; ++j) center(j) = rng.uniform(-0.2, 1.2);
    const double radius = rng.uniform(0.05, 0.8);
    const auto fast = cloud.radius_query(center, radius);
    const auto slow = oracles::brute_force_radius(m, center, radius);
    EXPECT_EQ(fast, slow);
  }
}

TEST(RadiusQuery, SeededUnitSquareCountMatchesBruteForce) {
  Rng rng(2024);
  const MatrixXd m = random_points(rng, 5000, 2);
  const PointCloud cloud = PointCloud::build(m);
  VectorXd center(2);
  center << 0.5, 0.5;
  const auto fast = cloud.radius_query(center, 0.25);
  const auto slow = oracles::brute_force_radius(m, center, 0.25);
  EXPECT_EQ(fast, slow);
  EXPECT_GT(fast.size(), 0u);
}

TEST(RadiusQuery, BruteForcePathAboveKdTreeCutoff) {
  Rng rng(11);
  const Index dim = PointCloud::kKdTreeMaxDim + 4;
  const MatrixXd m = random_points(rng, 300, dim);
  const PointCloud cloud = PointCloud::build(m);
  for (int trial = 0; trial < 10; ++trial) {
    VectorXd center(dim);
    for (Index j = 0; j < dim; ++j) center(j) = rng.uniform();
    const double radius = rng.uniform(0.3, 1.5);
    EXPECT_EQ(cloud.radius_query(center, radius),
              oracles::brute_force_radius(m, center, radius));
  }
}

TEST(RadiusQuery, DeterministicOrderedResults) {
  Rng rng(13);
  const MatrixXd m = random_points(rng, 800, 3);
  const PointCloud cloud = PointCloud::build(m);
  VectorXd center(3);
  center << 0.4, 0.6, 0.5;
  const auto first = cloud.radius_query(center, 0.3);
  const auto second = cloud.radius_query(center, 0.3);
  EXPECT_EQ(first, second);
  for (std::size_t i = 1; i < first.size(); ++i) {
    EXPECT_LT(first[i - 1], first[i]);
  }
}

TEST(RadiusQuery, ErrorsOnBadInputs) {
  Rng rng(17);
  const PointCloud cloud = PointCloud::build(random_points(rng, 10, 3));
  EXPECT_THROW(cloud.radius_query(VectorXd::Zero(2), 1.0), Error);
  EXPECT_THROW(cloud.radius_query(VectorXd::Zero(3), 0.0), Error);
  EXPECT_THROW(cloud.radius_query(VectorXd::Zero(3), -1.0), Error);
}

}  // namespace
