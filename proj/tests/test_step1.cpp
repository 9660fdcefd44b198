#include "mmls/step1.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "mmls/synthetic.hpp"
#include "oracles.hpp"

using namespace mmls;

namespace {

Step1Config circle_config(double sigma = 0.5, double tau = 10.0) {
  Step1Config cfg;
  cfg.sigma = sigma;
  cfg.tau = tau;
  cfg.d = 1;
  return cfg;
}

/// Noiseless samples on an affine plane in R^3.
PointCloud plane_cloud(Rng& rng, const VectorXd& origin, const MatrixXd& span,
                       Index n, double extent) {
  MatrixXd pts(n, origin.size());
  for (Index i = 0; i < n; ++i) {
    VectorXd coeff(span.cols());
    for (Index j = 0; j < span.cols(); ++j) {
      coeff(j) = rng.uniform(-extent, extent);
    }
    pts.row(i) = (origin + span * coeff).transpose();
  }
  return PointCloud::build(pts);
}

TEST(Roi, AllPointsInsideWindow) {
  MatrixXd m(4, 2);
  m << 0, 0, 0.1, 0, 0, 0.1, -0.1, 0;
  const PointCloud cloud = PointCloud::build(m);
  const auto indices = roi(cloud, VectorXd::Zero(2), 0.5, 10.0);
  EXPECT_EQ(indices.size(), 4u);
}

TEST(Roi, IsolatedQueryRaisesEmptyRoi) {
  MatrixXd m(2, 2);
  m << 0, 0, 1, 1;
  const PointCloud cloud = PointCloud::build(m);
  VectorXd far(2);
  far << 100, 100;
  try {
    roi(cloud, far, 0.5, 10.0);
    FAIL() << "expected EmptyROI";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyRoi);
  }
}

TEST(Roi, SeededCircleCountMatchesBruteForce) {
  const ManifoldSpec spec = ManifoldSpec::circle(10.0);
  const NoisySample sample = sample_tubular(spec, 5000, 0.5, 42);
  const PointCloud cloud = PointCloud::build(sample.points);
  Rng rng(9);
  const VectorXd r = spec.sample_point(rng);
  const auto fast = roi(cloud, r, 0.5, 10.0);
  const auto slow =
      oracles::brute_force_radius(sample.points, r, std::sqrt(0.5 * 10.0));
  EXPECT_EQ(fast, slow);
}

TEST(J1Score, ZeroOnTheFramePlane) {
  Rng rng(3);
  VectorXd origin(3);
  origin << 1, 2, 3;
  MatrixXd span(3, 2);
  span << 1, 0, 0, 1, 0, 0;
  const PointCloud cloud = plane_cloud(rng, origin, span, 50, 1.0);
  std::vector<Index> all(50);
  std::iota(all.begin(), all.end(), Index{0});
  const Frame frame(origin, orthonormalize(span));
  EXPECT_LT(j1_score(cloud, all, frame), 1e-20);
}

TEST(J1Score, SinglePointOffPlane) {
  MatrixXd m(1, 3);
  m << 0, 0, 0.7;
  const PointCloud cloud = PointCloud::build(m);
  MatrixXd span(3, 2);
  span << 1, 0, 0, 1, 0, 0;
  const Frame frame(VectorXd::Zero(3), orthonormalize(span));
  EXPECT_NEAR(j1_score(cloud, {0}, frame), 0.49, 1e-12);
}

TEST(J1Score, MatchesNaiveLoopOracle) {
  Rng rng(5);
  MatrixXd m(20, 4);
  for (Index i = 0; i < 20; ++i) {
    m.row(i) = oracles::random_vector(rng, 4).transpose();
  }
  const PointCloud cloud = PointCloud::build(m);
  const Subspace h = orthonormalize(oracles::random_matrix(rng, 4, 2));
  const VectorXd q = oracles::random_vector(rng, 4);
  const Frame frame(q, h);
  std::vector<Index> all(20);
  std::iota(all.begin(), all.end(), Index{0});

  double naive = 0.0;
  for (Index i = 0; i < 20; ++i) {
    naive += oracles::projector_distance(h.basis(), q, cloud.point(i)) *
             oracles::projector_distance(h.basis(), q, cloud.point(i));
  }
  naive /= 20.0;
  EXPECT_NEAR(j1_score(cloud, all, frame), naive, 1e-12);
}

TEST(FindInitialFrame, NoiselessPlaneIsAFixedPoint) {
  Rng rng(7);
  VectorXd origin(3);
  origin << 0.5, -1.0, 2.0;
  MatrixXd span(3, 2);
  span << 1, 0, 0, 1, 0, 0;
  const PointCloud cloud = plane_cloud(rng, origin, span, 400, 2.0);

  Step1Config cfg;
  cfg.sigma = 0.5;
  cfg.tau = 8.0;  // sqrt(sigma*tau) = 2 covers a patch of the plane
  cfg.d = 2;

  VectorXd r = origin;
  r(2) += 0.3;  // within 2*sigma of the plane
  r(0) += 0.4;
  const Step1Result result = find_initial_frame(cloud, r, cfg);

  EXPECT_TRUE(result.converged);
  const Subspace truth = orthonormalize(span);
  EXPECT_LE(max_angle(result.frame.subspace, truth), 1e-8);
  EXPECT_NEAR(result.frame.origin(2), origin(2), 1e-8);
  EXPECT_LT(result.j1, 1e-16);
}

TEST(FindInitialFrame, CircleTangentAngleMedianBelowPointTwo) {
  const ManifoldSpec spec = ManifoldSpec::circle(10.0);
  const Step1Config cfg = circle_config(0.1);
  std::vector<double> angles;
  for (int seed = 0; seed < 20; ++seed) {
    const NoisySample sample =
        sample_tubular(spec, 5000, 0.1, 1000 + static_cast<std::uint64_t>(seed));
    const PointCloud cloud = PointCloud::build(sample.points);
    Rng rng(static_cast<std::uint64_t>(seed));
    const VectorXd r = spec.sample_point(rng);
    const Step1Result result = find_initial_frame(cloud, r, cfg);
    const auto truth = spec.analytic_project(result.frame.origin);
    angles.push_back(max_angle(result.frame.subspace, truth.tangent));
  }
  std::sort(angles.begin(), angles.end());
  EXPECT_LE(angles[angles.size() / 2], 0.2);
}

TEST(FindInitialFrame, ConstraintsAlwaysHold) {
  const ManifoldSpec spec = ManifoldSpec::circle(10.0);
  const Step1Config cfg = circle_config();
  for (int seed = 0; seed < 10; ++seed) {
    const NoisySample sample =
        sample_tubular(spec, 4000, 0.5, 500 + static_cast<std::uint64_t>(seed));
    const PointCloud cloud = PointCloud::build(sample.points);
    Rng rng(static_cast<std::uint64_t>(seed) + 1);
    for (int q = 0; q < 5; ++q) {
      const Index pick = static_cast<Index>(rng.index(4000));
      const VectorXd r = cloud.point(pick);
      const Step1Result result = find_initial_frame(cloud, r, cfg);
      const VectorXd delta = r - result.frame.origin;
      EXPECT_LT(delta.norm(), 2.0 * cfg.sigma);
      const VectorXd overlap =
          result.frame.subspace.basis().transpose() * delta;
      EXPECT_LE(overlap.cwiseAbs().maxCoeff(),
                1e-8 * std::max(delta.norm(), 1e-30));
    }
  }
}

TEST(FindInitialFrame, ObjectiveBoundFiftySigmaSquared) {
  // M = tau/sigma = 20.
  const ManifoldSpec spec = ManifoldSpec::circle(10.0);
  const Step1Config cfg = circle_config(0.5);
  int ok = 0, total = 0;
  for (int seed = 0; seed < 10; ++seed) {
    const NoisySample sample =
        sample_tubular(spec, 4000, 0.5, 900 + static_cast<std::uint64_t>(seed));
    const PointCloud cloud = PointCloud::build(sample.points);
    Rng rng(static_cast<std::uint64_t>(seed) + 77);
    for (int q = 0; q < 5; ++q) {
      const VectorXd r = spec.sample_point(rng);
      const Step1Result result = find_initial_frame(cloud, r, cfg);
      ++total;
      if (result.j1 <= 50.0 * cfg.sigma * cfg.sigma) ++ok;
    }
  }
  EXPECT_GE(static_cast<double>(ok) / total, 0.95);
}

TEST(FindInitialFrame, MonotoneObjectiveDescent) {
  const ManifoldSpec spec = ManifoldSpec::circle(10.0);
  const Step1Config cfg = circle_config();
  int monotone = 0, total = 0;
  for (int seed = 0; seed < 20; ++seed) {
    const NoisySample sample =
        sample_tubular(spec, 4000, 0.5, 1300 + static_cast<std::uint64_t>(seed));
    const PointCloud cloud = PointCloud::build(sample.points);
    Rng rng(static_cast<std::uint64_t>(seed) + 5);
    const VectorXd r = spec.sample_point(rng);
    const Step1Result result = find_initial_frame(cloud, r, cfg);
    ++total;
    bool ok = true;
    for (std::size_t i = 1; i < result.j1_trace.size(); ++i) {
      if (result.j1_trace[i] > result.j1_trace[i - 1] + 1e-12) ok = false;
    }
    if (ok) ++monotone;
  }
  EXPECT_GE(static_cast<double>(monotone) / total, 0.99);
}

TEST(FindInitialFrame, RigidMotionEquivariance) {
  Rng rng(31);
  const ManifoldSpec spec = ManifoldSpec::circle(10.0);
  const NoisySample sample = sample_tubular(spec, 4000, 0.5, 2222);
  const PointCloud cloud = PointCloud::build(sample.points);
  Rng qrng(8);
  const VectorXd r = spec.sample_point(qrng);
  const Step1Config cfg = circle_config();
  const Step1Result plain = find_initial_frame(cloud, r, cfg);

  // Rotation + translation.
  const double theta = 0.83;
  MatrixXd rot(2, 2);
  rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  VectorXd shift(2);
  shift << 3.5, -1.25;
  MatrixXd moved = sample.points * rot.transpose();
  moved.rowwise() += shift.transpose();
  const PointCloud moved_cloud = PointCloud::build(moved);
  const Step1Result transported =
      find_initial_frame(moved_cloud, rot * r + shift, cfg);

  EXPECT_LT((transported.frame.origin - (rot * plain.frame.origin + shift)).norm(),
            1e-6);
  const Subspace rotated_h(rot * plain.frame.subspace.basis());
  EXPECT_LE(max_angle(transported.frame.subspace, rotated_h), 1e-6);
}

TEST(FindInitialFrame, DegenerateRoiRaises) {
  // Two distinct points cannot support d = 2 in R^3.
  MatrixXd m(2, 3);
  m << 0, 0, 0, 0.1, 0, 0;
  const PointCloud cloud = PointCloud::build(m);
  Step1Config cfg;
  cfg.sigma = 0.5;
  cfg.tau = 8.0;
  cfg.d = 2;
  try {
    find_initial_frame(cloud, VectorXd::Zero(3), cfg);
    FAIL() << "expected DegenerateROI";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateRoi);
  }
}

TEST(FindInitialFrame, GaussianWeightingAlsoWorks) {
  const ManifoldSpec spec = ManifoldSpec::circle(10.0);
  const NoisySample sample = sample_tubular(spec, 4000, 0.5, 3100);
  const PointCloud cloud = PointCloud::build(sample.points);
  Step1Config cfg = circle_config();
  cfg.weighting = PcaWeighting::kGaussian;
  Rng rng(17);
  const VectorXd r = spec.sample_point(rng);
  const Step1Result result = find_initial_frame(cloud, r, cfg);
  const auto truth = spec.analytic_project(result.frame.origin);
  EXPECT_LE(max_angle(result.frame.subspace, truth.tangent), 0.3);
}

}  // namespace
