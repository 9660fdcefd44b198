/**
 * @file polynomial.hpp
 * @brief Multivariate polynomial least squares: the local regression engine.
 *
 * Polynomials map R^d -> R^m with total degree <= degree, stored against the
 * monomial basis in graded-lexicographic order: grades ascending, ties broken
 * lexicographically by exponent tuple, first variable's exponent highest
 * first. For d=2, degree=2 the order is [1, x, y, x^2, xy, y^2].
 *
 * Fits evaluate monomials in scaled coordinates (x / max|x|) and unscale the
 * coefficients afterwards; the solve uses column-pivoted QR. Raw monomials at
 * bandwidth scale would otherwise be catastrophically ill-conditioned.
 */
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "mmls/errors.hpp"
#include "mmls/random.hpp"

namespace mmls {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Exponent tuples of all monomials in d variables with total degree
/// <= degree, graded-lexicographic order.
inline std::vector<std::vector<int>> monomial_exponents(int d, int degree) {
  std::vector<std::vector<int>> table;
  std::vector<int> current(static_cast<std::size_t>(d), 0);
  auto emit = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == d - 1) {
      current[static_cast<std::size_t>(pos)] = remaining;
      table.push_back(current);
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      current[static_cast<std::size_t>(pos)] = e;
      self(self, pos + 1, remaining - e);
    }
  };
  for (int total = 0; total <= degree; ++total) emit(emit, 0, total);
  return table;
}

/// Number of monomials: C(d + degree, degree).
inline Index monomial_basis_size(int d, int degree) {
  // Small arguments only; exact in double well past anything we use.
  double result = 1.0;
  for (int i = 1; i <= d; ++i) {
    result = result * (degree + i) / i;
  }
  return static_cast<Index>(std::llround(result));
}

/// A polynomial map R^d -> R^m of total degree <= degree.
class MultiPolynomial {
 public:
  MultiPolynomial(int intrinsic_dim, int out_dim, int degree, MatrixXd coeffs)
      : intrinsic_dim_(intrinsic_dim),
        out_dim_(out_dim),
        degree_(degree),
        coeffs_(std::move(coeffs)),
        exponents_(monomial_exponents(intrinsic_dim, degree)) {
    if (intrinsic_dim_ < 1 || out_dim_ < 1 || degree_ < 0) {
      throw Error(ErrorCode::kInvalidArgument, "bad polynomial dimensions");
    }
    if (coeffs_.rows() != out_dim_ ||
        coeffs_.cols() != static_cast<Index>(exponents_.size())) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "coefficient matrix must be out_dim x basis_size");
    }
  }

  static MultiPolynomial zero(int intrinsic_dim, int out_dim, int degree) {
    return MultiPolynomial(
        intrinsic_dim, out_dim, degree,
        MatrixXd::Zero(out_dim, monomial_basis_size(intrinsic_dim, degree)));
  }

  int intrinsic_dim() const { return intrinsic_dim_; }
  int out_dim() const { return out_dim_; }
  int degree() const { return degree_; }
  Index basis_size() const { return coeffs_.cols(); }
  const MatrixXd& coeffs() const { return coeffs_; }
  const std::vector<std::vector<int>>& exponents() const { return exponents_; }

  /// Evaluates at x, accumulating grade by grade in basis order.
  VectorXd eval(const VectorXd& x) const {
    if (x.size() != intrinsic_dim_) {
      throw Error(ErrorCode::kDimensionMismatch, "eval point has wrong dimension");
    }
    // Power table per variable.
    MatrixXd powers(intrinsic_dim_, degree_ + 1);
    powers.col(0).setOnes();
    for (int e = 1; e <= degree_; ++e) {
      powers.col(e) = powers.col(e - 1).cwiseProduct(x);
    }
    VectorXd value = VectorXd::Zero(out_dim_);
    for (std::size_t j = 0; j < exponents_.size(); ++j) {
      double monomial = 1.0;
      for (int v = 0; v < intrinsic_dim_; ++v) {
        monomial *= powers(v, exponents_[j][static_cast<std::size_t>(v)]);
      }
      value += coeffs_.col(static_cast<Index>(j)) * monomial;
    }
    return value;
  }

  /// Jacobian at 0: exactly the linear-monomial coefficient block.
  MatrixXd differential_at_zero() const {
    MatrixXd jac = MatrixXd::Zero(out_dim_, intrinsic_dim_);
    if (degree_ < 1) return jac;
    // Degree-1 monomials occupy indices 1..d in graded-lex order, x_1 first.
    for (int v = 0; v < intrinsic_dim_; ++v) {
      jac.col(v) = coeffs_.col(1 + v);
    }
    return jac;
  }

  /// Columns spanning the tangent of the graph x -> (x, p(x)) at 0, in the
  /// (domain, codomain) block coordinates: [I_d ; J].
  MatrixXd graph_tangent_columns() const {
    MatrixXd stacked(intrinsic_dim_ + out_dim_, intrinsic_dim_);
    stacked.topRows(intrinsic_dim_) =
        MatrixXd::Identity(intrinsic_dim_, intrinsic_dim_);
    stacked.bottomRows(out_dim_) = differential_at_zero();
    return stacked;
  }

 private:
  int intrinsic_dim_;
  int out_dim_;
  int degree_;
  MatrixXd coeffs_;  // out_dim x basis_size
  std::vector<std::vector<int>> exponents_;
};

struct FitDiagnostics {
  Index n_used = 0;
  double condition_estimate = 0.0;
  double residual_rms = 0.0;
  bool used_median_of_means = false;
};

enum class BandwidthMode {
  kRateConsistent,  // c * n^(-1/(2k+d))
  kPaperLiteral,    // c * n^(-1/(2k+1))
};

/// Fitting-window radius as a function of the sample count.
inline double bandwidth(Index n, int k, int d, double c, BandwidthMode mode) {
  if (n < 1 || k < 1 || d < 1 || !(c > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bandwidth needs n,k,d >= 1, c > 0");
  }
  const double exponent = (mode == BandwidthMode::kRateConsistent)
                              ? -1.0 / (2.0 * k + d)
                              : -1.0 / (2.0 * k + 1);
  return c * std::pow(static_cast<double>(n), exponent);
}

namespace detail {

inline MatrixXd build_design(const MatrixXd& xs,
                             const std::vector<std::vector<int>>& exps,
                             const std::vector<Index>& rows, int degree,
                             double scale) {
  const int d = static_cast<int>(xs.cols());
  const Index n = static_cast<Index>(rows.size());
  const Index B = static_cast<Index>(exps.size());
  MatrixXd phi(n, B);
  MatrixXd powers(d, degree + 1);
  for (Index r = 0; r < n; ++r) {
    const VectorXd x =
        xs.row(rows[static_cast<std::size_t>(r)]).transpose() / scale;
    powers.col(0).setOnes();
    for (int e = 1; e <= degree; ++e) {
      powers.col(e) = powers.col(e - 1).cwiseProduct(x);
    }
    for (Index j = 0; j < B; ++j) {
      double monomial = 1.0;
      for (int v = 0; v < d; ++v) {
        monomial *= powers(v, exps[static_cast<std::size_t>(j)]
                                  [static_cast<std::size_t>(v)]);
      }
      phi(r, j) = monomial;
    }
  }
  return phi;
}

/// Solves one scaled LS block; returns scaled coefficients (B x m) and a
/// condition estimate from the pivoted R diagonal.
inline std::pair<MatrixXd, double> solve_block(
    const MatrixXd& xs, const MatrixXd& ys,
    const std::vector<std::vector<int>>& exps, const std::vector<Index>& rows,
    int degree, double scale) {
  const Index B = static_cast<Index>(exps.size());
  const MatrixXd phi = build_design(xs, exps, rows, degree, scale);

  MatrixXd targets(rows.size(), ys.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    targets.row(static_cast<Index>(r)) = ys.row(rows[r]);
  }

  Eigen::ColPivHouseholderQR<MatrixXd> qr(phi);
  const VectorXd rdiag =
      qr.matrixR().topLeftCorner(B, B).diagonal().cwiseAbs();
  const double cond = (rdiag.minCoeff() > 0.0)
                          ? rdiag.maxCoeff() / rdiag.minCoeff()
                          : std::numeric_limits<double>::infinity();
  if (qr.rank() < B || cond > 1e12) {
    throw Error(ErrorCode::kIllConditioned,
                "design matrix condition estimate " + std::to_string(cond));
  }
  return {qr.solve(targets), cond};
}

}  // namespace detail

/// Least-squares polynomial fit of ys ~ p(xs). With mom_blocks = b > 1 the
/// rows are split into b seeded random blocks, each block is fitted, and the
/// coefficientwise median is returned (robust variant; b = 1 is plain LS).
inline std::pair<MultiPolynomial, FitDiagnostics> fit(
    const MatrixXd& xs, const MatrixXd& ys, int degree, int mom_blocks = 1) {
  if (xs.rows() != ys.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "xs and ys row counts differ");
  }
  if (xs.cols() < 1 || ys.cols() < 1 || degree < 0) {
    throw Error(ErrorCode::kInvalidArgument, "bad fit dimensions");
  }
  const int d = static_cast<int>(xs.cols());
  const int m = static_cast<int>(ys.cols());
  const Index n = xs.rows();
  const auto exps = monomial_exponents(d, degree);
  const Index B = static_cast<Index>(exps.size());
  if (n < B) {
    throw Error(ErrorCode::kInsufficientSamples,
                "need at least " + std::to_string(B) + " samples, got " +
                    std::to_string(n));
  }

  double scale = xs.cwiseAbs().maxCoeff();
  if (scale <= 0.0) scale = 1.0;

  int blocks = std::max(1, mom_blocks);
  blocks = std::min<int>(blocks, static_cast<int>(n / B));
  blocks = std::max(1, blocks);

  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});

  MatrixXd scaled_coeffs;  // B x m
  double cond = 0.0;
  bool used_mom = false;

  if (blocks == 1) {
    auto [c, block_cond] = detail::solve_block(xs, ys, exps, all, degree, scale);
    scaled_coeffs = std::move(c);
    cond = block_cond;
  } else {
    used_mom = true;
    // Deterministic block split, seeded from the problem shape.
    Rng rng(split_seed(0x6D6F6D5FULL, static_cast<std::uint64_t>(n) * 131 +
                                          static_cast<std::uint64_t>(blocks)));
    for (std::size_t i = all.size(); i > 1; --i) {
      std::swap(all[i - 1], all[rng.index(i)]);
    }
    std::vector<MatrixXd> block_coeffs;
    block_coeffs.reserve(static_cast<std::size_t>(blocks));
    const Index base = n / blocks;
    Index start = 0;
    for (int b = 0; b < blocks; ++b) {
      const Index len = base + (b < n % blocks ? 1 : 0);
      std::vector<Index> rows(all.begin() + start, all.begin() + start + len);
      std::sort(rows.begin(), rows.end());
      auto [c, block_cond] =
          detail::solve_block(xs, ys, exps, rows, degree, scale);
      block_coeffs.push_back(std::move(c));
      cond = std::max(cond, block_cond);
      start += len;
    }
    scaled_coeffs.resize(B, m);
    std::vector<double> slot(block_coeffs.size());
    for (Index j = 0; j < B; ++j) {
      for (Index c = 0; c < m; ++c) {
        for (std::size_t b = 0; b < block_coeffs.size(); ++b) {
          slot[b] = block_coeffs[b](j, c);
        }
        std::sort(slot.begin(), slot.end());
        const std::size_t mid = slot.size() / 2;
        scaled_coeffs(j, c) = (slot.size() % 2 == 1)
                                  ? slot[mid]
                                  : 0.5 * (slot[mid - 1] + slot[mid]);
      }
    }
  }

  // Unscale: coefficient of monomial with exponent tuple e divides by
  // scale^|e|.
  MatrixXd coeffs(m, B);
  for (Index j = 0; j < B; ++j) {
    int total = 0;
    for (int v = 0; v < d; ++v) total += exps[static_cast<std::size_t>(j)]
                                             [static_cast<std::size_t>(v)];
    coeffs.col(j) =
        scaled_coeffs.row(j).transpose() / std::pow(scale, total);
  }

  MultiPolynomial poly(d, m, degree, std::move(coeffs));
  FitDiagnostics diag;
  diag.n_used = n;
  diag.condition_estimate = cond;
  diag.used_median_of_means = used_mom;
  double sq = 0.0;
  for (Index i = 0; i < n; ++i) {
    sq += (ys.row(i).transpose() - poly.eval(xs.row(i).transpose()))
              .squaredNorm();
  }
  diag.residual_rms = std::sqrt(sq / static_cast<double>(n));
  return {std::move(poly), diag};
}

}  // namespace mmls
