#include "mmls/polynomial.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "mmls/subspace.hpp"
#include "oracles.hpp"

using namespace mmls;

namespace {

MultiPolynomial random_poly(Rng& rng, int d, int m, int degree) {
  const Index basis = monomial_basis_size(d, degree);
  MatrixXd coeffs(m, basis);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < basis; ++j) coeffs(i, j) = rng.normal();
  }
  return MultiPolynomial(d, m, degree, coeffs);
}

TEST(MonomialBasis, GradedLexOrder) {
  const auto exps = monomial_exponents(2, 2);
  // [1, x, y, x^2, xy, y^2]
  const std::vector<std::vector<int>> expected = {
      {0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  EXPECT_EQ(exps, expected);
  EXPECT_EQ(monomial_basis_size(2, 2), 6);
  EXPECT_EQ(monomial_basis_size(3, 3), 20);
}

TEST(Bandwidth, RateConsistentFormula) {
  EXPECT_NEAR(bandwidth(1000, 2, 1, 1.0, BandwidthMode::kRateConsistent),
              0.251189, 1e-6);
}

TEST(Bandwidth, PaperLiteralExactPowerOfTwo) {
  EXPECT_DOUBLE_EQ(bandwidth(1024, 2, 1, 1.0, BandwidthMode::kPaperLiteral),
                   0.25);
}

TEST(Bandwidth, ScalingLawUnderDoubling) {
  for (int k : {1, 2, 3}) {
    for (int d : {1, 2, 3}) {
      const double c = 2.7;
      for (Index n : {100, 1000, 4096}) {
        const double ratio =
            bandwidth(2 * n, k, d, c, BandwidthMode::kRateConsistent) /
            bandwidth(n, k, d, c, BandwidthMode::kRateConsistent);
        EXPECT_NEAR(ratio, std::pow(2.0, -1.0 / (2.0 * k + d)), 1e-12);
      }
    }
  }
}

TEST(Fit, RecoversModelClassExactly) {
  Rng rng(3);
  for (int d = 1; d <= 3; ++d) {
    for (int degree = 0; degree <= 2; ++degree) {
      const int m = 2;
      const MultiPolynomial truth = random_poly(rng, d, m, degree);
      const Index n = truth.basis_size() + 10;
      MatrixXd xs(n, d), ys(n, m);
      for (Index i = 0; i < n; ++i) {
        const VectorXd x = oracles::random_vector(rng, d);
        xs.row(i) = x.transpose();
        ys.row(i) = truth.eval(x).transpose();
      }
      const auto [fitted, diag] = fit(xs, ys, degree);
      EXPECT_LT((fitted.coeffs() - truth.coeffs()).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_EQ(diag.n_used, n);
      EXPECT_FALSE(diag.used_median_of_means);
    }
  }
}

TEST(Fit, ConstantData) {
  Rng rng(5);
  MatrixXd xs(12, 2), ys(12, 1);
  for (Index i = 0; i < 12; ++i) {
    xs.row(i) = oracles::random_vector(rng, 2).transpose();
    ys(i, 0) = 4.25;
  }
  const auto [fitted, diag] = fit(xs, ys, 2);
  EXPECT_NEAR(fitted.coeffs()(0, 0), 4.25, 1e-10);
  for (Index j = 1; j < fitted.basis_size(); ++j) {
    EXPECT_LT(std::abs(fitted.coeffs()(0, j)), 1e-12);
  }
}

TEST(Fit, HandSolvedThreePointLine) {
  // Points (-1,1), (0,0), (1,1): normal equations give intercept 2/3, slope 0.
  MatrixXd xs(3, 1), ys(3, 1);
  xs << -1, 0, 1;
  ys << 1, 0, 1;
  const auto [fitted, diag] = fit(xs, ys, 1);
  EXPECT_NEAR(fitted.coeffs()(0, 0), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(fitted.coeffs()(0, 1), 0.0, 1e-12);
}

TEST(Fit, InsufficientSamplesSignalsCaller) {
  MatrixXd xs(2, 1), ys(2, 1);
  xs << 0, 1;
  ys << 0, 1;
  try {
    fit(xs, ys, 2);  // needs 3 points
    FAIL() << "expected InsufficientSamples";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientSamples);
  }
}

TEST(Fit, DegenerateGeometryIsIllConditioned) {
  // Points on a line in R^2 cannot pin down a full bivariate linear model.
  MatrixXd xs(8, 2), ys(8, 1);
  for (Index i = 0; i < 8; ++i) {
    xs(i, 0) = static_cast<double>(i);
    xs(i, 1) = 2.0 * static_cast<double>(i);
    ys(i, 0) = static_cast<double>(i);
  }
  try {
    fit(xs, ys, 1);
    FAIL() << "expected IllConditioned";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIllConditioned);
  }
}

TEST(Eval, AtZeroReturnsConstantColumn) {
  Rng rng(9);
  const MultiPolynomial p = random_poly(rng, 3, 2, 3);
  const VectorXd at_zero = p.eval(VectorXd::Zero(3));
  EXPECT_LT((at_zero - p.coeffs().col(0)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Eval, DegreeOneClosedForm) {
  // p(x) = a + B x at x = e1.
  MatrixXd coeffs(2, 3);  // basis [1, x1, x2]
  coeffs << 1, 2, 3, 4, 5, 6;
  const MultiPolynomial p(2, 2, 1, coeffs);
  VectorXd e1(2);
  e1 << 1, 0;
  const VectorXd value = p.eval(e1);
  EXPECT_NEAR(value(0), 1 + 2, 1e-14);
  EXPECT_NEAR(value(1), 4 + 5, 1e-14);
}

TEST(Eval, MatchesNaiveOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 1 + static_cast<int>(rng.index(3));
    const int degree = static_cast<int>(rng.index(4));
    const MultiPolynomial p = random_poly(rng, d, 2, degree);
    const VectorXd x = oracles::random_vector(rng, d);
    const VectorXd naive = oracles::naive_poly_eval(p.coeffs(), p.exponents(), x);
    EXPECT_LT((p.eval(x) - naive).cwiseAbs().maxCoeff(),
              1e-12 * std::max(1.0, naive.cwiseAbs().maxCoeff()));
  }
}

TEST(DifferentialAtZero, PureLinearRecoversMatrix) {
  MatrixXd coeffs = MatrixXd::Zero(2, 3);  // [1, x1, x2]
  coeffs(0, 1) = 1.5;
  coeffs(0, 2) = -2.0;
  coeffs(1, 1) = 0.25;
  coeffs(1, 2) = 4.0;
  const MultiPolynomial p(2, 2, 1, coeffs);
  const MatrixXd jac = p.differential_at_zero();
  EXPECT_DOUBLE_EQ(jac(0, 0), 1.5);
  EXPECT_DOUBLE_EQ(jac(0, 1), -2.0);
  EXPECT_DOUBLE_EQ(jac(1, 0), 0.25);
  EXPECT_DOUBLE_EQ(jac(1, 1), 4.0);
}

TEST(DifferentialAtZero, ConstantPolynomialGivesZero) {
  MatrixXd coeffs(1, 1);
  coeffs << 3.0;
  const MultiPolynomial p(2, 1, 0, coeffs);
  EXPECT_EQ(p.differential_at_zero().cwiseAbs().maxCoeff(), 0.0);
}

TEST(DifferentialAtZero, MatchesFiniteDifferences) {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + static_cast<int>(rng.index(3));
    const MultiPolynomial p = random_poly(rng, d, 3, 3);
    const MatrixXd fd = oracles::finite_difference_jacobian(
        [&](const VectorXd& x) { return p.eval(x); }, VectorXd::Zero(d), 1e-5);
    EXPECT_LT((p.differential_at_zero() - fd).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(GraphTangentColumns, ConstantGraphIsFlat) {
  MatrixXd coeffs(1, 1);
  coeffs << 2.0;
  const MultiPolynomial p(2, 1, 0, coeffs);
  const MatrixXd cols = p.graph_tangent_columns();
  ASSERT_EQ(cols.rows(), 3);
  ASSERT_EQ(cols.cols(), 2);
  EXPECT_LT((cols.topRows(2) - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(),
            1e-15);
  EXPECT_EQ(cols.bottomRows(1).cwiseAbs().maxCoeff(), 0.0);
}

TEST(GraphTangentColumns, SlopeGivesArctanAngle) {
  const double slope = 0.75;
  MatrixXd coeffs(1, 2);  // [1, x]
  coeffs << 0.0, slope;
  const MultiPolynomial p(1, 1, 1, coeffs);
  const MatrixXd cols = p.graph_tangent_columns();
  const double angle = std::atan2(cols(1, 0), cols(0, 0));
  EXPECT_NEAR(angle, std::atan(slope), 1e-14);
}

TEST(GraphTangentColumns, MatchesFiniteDifferenceGraphTangent) {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 1 + static_cast<int>(rng.index(2));
    const int m = 1 + static_cast<int>(rng.index(2));
    const MultiPolynomial p = random_poly(rng, d, m, 2);
    const Subspace exact = orthonormalize(p.graph_tangent_columns());
    auto graph = [&](const VectorXd& x) {
      VectorXd g(d + m);
      g.head(d) = x;
      g.tail(m) = p.eval(x);
      return g;
    };
    const MatrixXd fd = oracles::finite_difference_jacobian(
        graph, VectorXd::Zero(d), 1e-6);
    const Subspace approx = orthonormalize(fd);
    EXPECT_LT(max_angle(exact, approx), 1e-5);
  }
}

TEST(FitProperties, OrthogonalOutputEquivariance) {
  Rng rng(19);
  const int d = 2, m = 3, degree = 2;
  const Index n = 40;
  MatrixXd xs(n, d), ys(n, m);
  for (Index i = 0; i < n; ++i) {
    xs.row(i) = oracles::random_vector(rng, d).transpose();
    ys.row(i) = oracles::random_vector(rng, m).transpose();
  }
  const MatrixXd gauss = oracles::random_matrix(rng, m, m);
  const Eigen::HouseholderQR<MatrixXd> qr(gauss);
  const MatrixXd rot = qr.householderQ() * MatrixXd::Identity(m, m);

  const auto [plain, d1] = fit(xs, ys, degree);
  const auto [rotated, d2] = fit(xs, MatrixXd(ys * rot.transpose()), degree);
  EXPECT_LT((rotated.coeffs() - rot * plain.coeffs()).cwiseAbs().maxCoeff(),
            1e-9);
}

TEST(FitProperties, InputScalingStability) {
  Rng rng(23);
  const int d = 2, degree = 2;
  const Index n = 30;
  const double eps = 1e-3;
  MatrixXd xs(n, d), ys(n, 1);
  for (Index i = 0; i < n; ++i) {
    xs.row(i) = (eps * oracles::random_vector(rng, d)).transpose();
    ys(i, 0) = rng.normal();
  }
  const auto [tiny_fit, diag] = fit(xs, ys, degree);
  // The same data expressed in rescaled coordinates must predict the same
  // values at matching points.
  const auto [unit_fit, diag2] = fit(MatrixXd(xs / eps), ys, degree);
  for (int trial = 0; trial < 10; ++trial) {
    const VectorXd x = eps * oracles::random_vector(rng, d);
    EXPECT_NEAR(tiny_fit.eval(x)(0), unit_fit.eval(x / eps)(0), 1e-8);
  }
}

TEST(FitProperties, MedianOfMeansReducesToPlainLsWithOneBlock) {
  Rng rng(29);
  const Index n = 25;
  MatrixXd xs(n, 1), ys(n, 1);
  for (Index i = 0; i < n; ++i) {
    xs(i, 0) = rng.normal();
    ys(i, 0) = rng.normal();
  }
  const auto [a, da] = fit(xs, ys, 2, 1);
  const auto [b, db] = fit(xs, ys, 2);
  EXPECT_EQ(a.coeffs(), b.coeffs());
  EXPECT_FALSE(da.used_median_of_means);
}

TEST(FitProperties, MedianOfMeansShrugsOffGrossOutliers) {
  Rng rng(31);
  const Index n = 90;
  MatrixXd xs(n, 1), ys(n, 1);
  for (Index i = 0; i < n; ++i) {
    xs(i, 0) = rng.uniform(-1.0, 1.0);
    ys(i, 0) = 2.0 + 3.0 * xs(i, 0);
  }
  // A few wild outliers.
  ys(4, 0) = 1e5;
  ys(40, 0) = -7e4;
  const auto [robust, diag] = fit(xs, ys, 1, 9);
  EXPECT_TRUE(diag.used_median_of_means);
  EXPECT_NEAR(robust.coeffs()(0, 0), 2.0, 0.2);
  EXPECT_NEAR(robust.coeffs()(0, 1), 3.0, 0.4);
}

}  // namespace
