/**
 * @file subspace.hpp
 * @brief Linear subspaces of R^D, local frames, and principal angles.
 */
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "mmls/errors.hpp"

namespace mmls {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace detail {

/// Flips column signs so the first non-negligible entry of each column is
/// positive. Makes QR/eigen output reproducible across inputs spanning the
/// same space up to column sign.
inline void apply_sign_convention(MatrixXd& columns) {
  for (Index j = 0; j < columns.cols(); ++j) {
    const double scale = columns.col(j).cwiseAbs().maxCoeff();
    if (scale <= 0.0) continue;
    for (Index i = 0; i < columns.rows(); ++i) {
      const double v = columns(i, j);
      if (std::abs(v) > 1e-12 * scale) {
        if (v < 0.0) columns.col(j) = -columns.col(j);
        break;
      }
    }
  }
}

}  // namespace detail

/// A d-dimensional linear subspace of R^D held as a D x d matrix with
/// orthonormal columns, 1 <= d < D.
class Subspace {
 public:
  explicit Subspace(MatrixXd basis) : basis_(std::move(basis)) {
    const Index D = basis_.rows();
    const Index d = basis_.cols();
    if (d < 1 || d >= D) {
      throw Error(ErrorCode::kInvalidArgument,
                  "subspace dimension must satisfy 1 <= d < D");
    }
    const MatrixXd gram = basis_.transpose() * basis_;
    const double defect =
        (gram - MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff();
    if (defect > 1e-10) {
      throw Error(ErrorCode::kInvalidArgument,
                  "basis columns are not orthonormal (defect " +
                      std::to_string(defect) + ")");
    }
  }

  Index ambient_dim() const { return basis_.rows(); }
  Index dim() const { return basis_.cols(); }
  const MatrixXd& basis() const { return basis_; }

  /// Orthogonal projector B B^T (D x D).
  MatrixXd projector() const { return basis_ * basis_.transpose(); }

 private:
  MatrixXd basis_;
};

/// A local coordinate system: origin q plus a subspace H.
struct Frame {
  VectorXd origin;
  Subspace subspace;

  Frame(VectorXd q, Subspace h) : origin(std::move(q)), subspace(std::move(h)) {
    if (origin.size() != subspace.ambient_dim()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "frame origin and subspace ambient dimensions differ");
    }
  }
};

/// Principal angles between two subspaces, ascending, in [0, pi/2].
struct AngleSpectrum {
  std::vector<double> angles;

  double max() const { return angles.empty() ? 0.0 : angles.back(); }
  double min() const { return angles.empty() ? 0.0 : angles.front(); }
};

/// Orthonormalizes linearly independent columns into a Subspace (QR with a
/// deterministic sign convention). Throws RankDeficient when the smallest
/// singular value falls below 1e-12 of the largest.
inline Subspace orthonormalize(const MatrixXd& vectors) {
  const Index D = vectors.rows();
  const Index d = vectors.cols();
  if (d < 1 || d >= D) {
    throw Error(ErrorCode::kInvalidArgument,
                "orthonormalize requires 1 <= cols < rows");
  }
  Eigen::JacobiSVD<MatrixXd> svd(vectors);
  const VectorXd& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(d - 1) <= 1e-12 * sv(0)) {
    throw Error(ErrorCode::kRankDeficient,
                "columns are numerically linearly dependent");
  }
  const Eigen::HouseholderQR<MatrixXd> qr(vectors);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(D, d);
  detail::apply_sign_convention(q);
  return Subspace(std::move(q));
}

/// Orthonormal basis of the orthogonal complement H^perp (D x (D-d)),
/// deterministic for a given basis.
inline MatrixXd orthonormal_complement(const Subspace& subspace) {
  const Index D = subspace.ambient_dim();
  const Index d = subspace.dim();
  const Eigen::HouseholderQR<MatrixXd> qr(subspace.basis());
  MatrixXd full = qr.householderQ() * MatrixXd::Identity(D, D);
  MatrixXd complement = full.rightCols(D - d);
  // Remove any leakage of the original span caused by round-off.
  complement -= subspace.basis() * (subspace.basis().transpose() * complement);
  const Eigen::HouseholderQR<MatrixXd> reqr(complement);
  MatrixXd w = reqr.householderQ() * MatrixXd::Identity(D, D - d);
  detail::apply_sign_convention(w);
  return w;
}

/// Coordinates of a point in a frame: tangential coefficients x = B^T (p - q)
/// and the ambient residual y = (p - q) - B x (which lies in H^perp).
struct FrameCoordinates {
  VectorXd tangential;       // R^d
  VectorXd normal_residual;  // ambient vector in R^D
};

inline FrameCoordinates project_point(const Frame& frame, const VectorXd& point) {
  if (point.size() != frame.subspace.ambient_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "point dimension does not match frame ambient dimension");
  }
  const VectorXd delta = point - frame.origin;
  FrameCoordinates coords;
  coords.tangential = frame.subspace.basis().transpose() * delta;
  coords.normal_residual = delta - frame.subspace.basis() * coords.tangential;
  return coords;
}

/// Distance from (point - q) to the subspace H of the frame.
inline double dist_to_subspace(const Frame& frame, const VectorXd& point) {
  return project_point(frame, point).normal_residual.norm();
}

/// Principal angles via singular values of A^T B, clamped to [0,1] before
/// arccos. Requires dim(A) <= dim(B) and equal ambient dimensions.
inline AngleSpectrum principal_angles(const Subspace& a, const Subspace& b) {
  if (a.ambient_dim() != b.ambient_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "subspaces live in different ambient spaces");
  }
  if (a.dim() > b.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "principal_angles requires dim(A) <= dim(B)");
  }
  const MatrixXd cross = a.basis().transpose() * b.basis();
  Eigen::JacobiSVD<MatrixXd> svd(cross);
  const VectorXd& sv = svd.singularValues();
  AngleSpectrum spectrum;
  spectrum.angles.resize(static_cast<std::size_t>(a.dim()));
  // Singular values are sorted descending, so arccos comes out ascending.
  for (Index i = 0; i < a.dim(); ++i) {
    const double c = std::clamp(sv(i), 0.0, 1.0);
    spectrum.angles[static_cast<std::size_t>(i)] = std::acos(c);
  }
  return spectrum;
}

/// Largest principal angle between two subspaces.
inline double max_angle(const Subspace& a, const Subspace& b) {
  if (a.dim() <= b.dim()) return principal_angles(a, b).max();
  return principal_angles(b, a).max();
}

}  // namespace mmls
