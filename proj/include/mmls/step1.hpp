/**
 * @file step1.hpp
 * @brief Initial coordinate system: constrained minimization of the mean
 *        squared distance of ROI samples to an affine d-plane.
 *
 * Given a query r, the working window is the open ball of radius
 * sqrt(sigma*tau) around r. The frame (q, H) minimizes
 *
 *   J1 = (1/N) * sum_{i in ROI} dist^2(r_i - q, H)
 *
 * subject to r - q _|_ H and ||r - q|| < 2*sigma. The solver is a fixed-point
 * iteration: initialize H from weighted PCA of the ROI, then alternate an
 * affine least-squares fit in the current coordinates with a QR
 * re-orthonormalization of the linear block, re-imposing the orthogonality
 * constraint by q = q~ + U U^T (r - q~) each pass. The ROI is computed once
 * from r and stays fixed for the whole iteration.
 *
 * The search-region constraint is not enforced inside the loop; when the
 * final origin drifts to ||r - q|| >= 2*sigma it is pulled back radially
 * toward r (which preserves orthogonality) and the result is flagged.
 */
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "mmls/errors.hpp"
#include "mmls/point_cloud.hpp"
#include "mmls/subspace.hpp"

namespace mmls {

enum class PcaWeighting { kIndicator, kGaussian };

struct Step1Config {
  double sigma = 0.0;
  double tau = 0.0;
  int d = 1;
  double eps_stop = 0.0;  // 0 -> 1e-9 * sqrt(sigma*tau)
  int max_iters = 100;
  PcaWeighting weighting = PcaWeighting::kIndicator;
  double gaussian_h = 0.0;  // 0 -> sigma*tau

  void validate() const {
    if (!(sigma > 0.0) || !(sigma < tau)) {
      throw Error(ErrorCode::kInvalidArgument, "need 0 < sigma < tau");
    }
    if (d < 1) throw Error(ErrorCode::kInvalidArgument, "need d >= 1");
    if (max_iters < 1) {
      throw Error(ErrorCode::kInvalidArgument, "need max_iters >= 1");
    }
    if (eps_stop < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "eps_stop must be >= 0");
    }
  }

  double effective_eps_stop() const {
    return eps_stop > 0.0 ? eps_stop : 1e-9 * std::sqrt(sigma * tau);
  }

  double effective_gaussian_h() const {
    return gaussian_h > 0.0 ? gaussian_h : sigma * tau;
  }
};

struct Step1Result {
  Frame frame;
  double j1 = 0.0;
  Index roi_count = 0;
  int iters = 0;
  bool converged = false;
  bool clamped = false;             // search-region pullback applied
  std::vector<double> j1_trace;     // objective after each iteration
};

/// Working window around the query: indices within sqrt(sigma*tau) of r.
inline std::vector<Index> roi(const PointCloud& cloud, const VectorXd& r,
                              double sigma, double tau) {
  if (!(sigma > 0.0) || !(tau > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sigma and tau must be positive");
  }
  auto indices = cloud.radius_query(r, std::sqrt(sigma * tau));
  if (indices.empty()) {
    throw Error(ErrorCode::kEmptyRoi, "no samples within sqrt(sigma*tau) of r");
  }
  return indices;
}

/// Mean squared distance of the ROI points to the frame's affine plane.
inline double j1_score(const PointCloud& cloud,
                       const std::vector<Index>& roi_indices,
                       const Frame& frame) {
  if (roi_indices.empty()) {
    throw Error(ErrorCode::kEmptyRoi, "j1_score over an empty ROI");
  }
  double total = 0.0;
  for (Index i : roi_indices) {
    const double dist = dist_to_subspace(frame, cloud.point(i));
    total += dist * dist;
  }
  return total / static_cast<double>(roi_indices.size());
}

namespace detail {

inline Subspace weighted_pca(const PointCloud& cloud,
                             const std::vector<Index>& roi_indices,
                             const VectorXd& r, const Step1Config& cfg) {
  const Index D = cloud.dim();
  VectorXd weights(static_cast<Index>(roi_indices.size()));
  for (std::size_t k = 0; k < roi_indices.size(); ++k) {
    if (cfg.weighting == PcaWeighting::kIndicator) {
      weights(static_cast<Index>(k)) = 1.0;
    } else {
      const double dist2 =
          (cloud.point(roi_indices[k]) - r).squaredNorm();
      weights(static_cast<Index>(k)) =
          std::exp(-dist2 / cfg.effective_gaussian_h());
    }
  }
  const double wsum = weights.sum();
  VectorXd mean = VectorXd::Zero(D);
  for (std::size_t k = 0; k < roi_indices.size(); ++k) {
    mean += weights(static_cast<Index>(k)) * cloud.point(roi_indices[k]);
  }
  mean /= wsum;

  MatrixXd cov = MatrixXd::Zero(D, D);
  for (std::size_t k = 0; k < roi_indices.size(); ++k) {
    const VectorXd delta = cloud.point(roi_indices[k]) - mean;
    cov += weights(static_cast<Index>(k)) * (delta * delta.transpose());
  }
  cov /= wsum;

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
  const VectorXd& values = eig.eigenvalues();  // ascending
  const double top = values(D - 1);
  if (!(top > 0.0) || values(D - cfg.d) <= 1e-12 * top) {
    throw Error(ErrorCode::kDegenerateRoi,
                "ROI covariance rank below the intrinsic dimension");
  }
  MatrixXd basis(D, cfg.d);
  for (int j = 0; j < cfg.d; ++j) {
    basis.col(j) = eig.eigenvectors().col(D - 1 - j);  // descending eigenvalue
  }
  detail::apply_sign_convention(basis);
  return Subspace(std::move(basis));
}

}  // namespace detail

/// Solves for the initial frame at the query point r.
inline Step1Result find_initial_frame(const PointCloud& cloud,
                                      const VectorXd& r,
                                      const Step1Config& cfg) {
  cfg.validate();
  if (r.size() != cloud.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "query dimension does not match cloud");
  }
  if (cfg.d >= cloud.dim()) {
    throw Error(ErrorCode::kInvalidArgument, "need d < ambient dimension");
  }

  const auto roi_indices = roi(cloud, r, cfg.sigma, cfg.tau);
  const Index N = static_cast<Index>(roi_indices.size());
  if (N < cfg.d + 1) {
    throw Error(ErrorCode::kDegenerateRoi,
                "ROI has fewer than d+1 points");
  }

  // Gather ROI rows once; the window is frozen for the whole iteration.
  MatrixXd pts(N, cloud.dim());
  for (Index k = 0; k < N; ++k) {
    pts.row(k) = cloud.points().row(roi_indices[static_cast<std::size_t>(k)]);
  }

  Subspace h = detail::weighted_pca(cloud, roi_indices, r, cfg);
  MatrixXd u = h.basis();
  VectorXd q = r;

  const double eps_stop = cfg.effective_eps_stop();
  std::vector<double> j1_trace;
  int iters = 0;
  bool converged = false;

  MatrixXd design(N, cfg.d + 1);
  design.col(0).setOnes();
  for (; iters < cfg.max_iters;) {
    const VectorXd q_prev = q;

    const MatrixXd centered = pts.rowwise() - q.transpose();
    design.rightCols(cfg.d) = centered * u;
    const MatrixXd alpha =
        Eigen::ColPivHouseholderQR<MatrixXd>(design).solve(centered);

    const VectorXd q_shift = q + alpha.row(0).transpose();
    Subspace refreshed = [&] {
      try {
        return orthonormalize(alpha.bottomRows(cfg.d).transpose());
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kRankDeficient) {
          throw Error(ErrorCode::kDegenerateRoi,
                      "direction block collapsed during iteration");
        }
        throw;
      }
    }();
    u = refreshed.basis();
    q = q_shift + u * (u.transpose() * (r - q_shift));
    ++iters;

    {
      double total = 0.0;
      const MatrixXd rel = pts.rowwise() - q.transpose();
      const MatrixXd residual = rel - (rel * u) * u.transpose();
      total = residual.rowwise().squaredNorm().sum();
      j1_trace.push_back(total / static_cast<double>(N));
    }

    if ((q - q_prev).norm() < eps_stop) {
      converged = true;
      break;
    }
  }

  // Search-region constraint: pull q back toward r along r - q, which is
  // orthogonal to H after the projection step, so orthogonality survives.
  bool clamped = false;
  const double offset = (r - q).norm();
  const double limit = 2.0 * cfg.sigma;
  if (offset >= limit) {
    q = r - (r - q) * (limit * (1.0 - 1e-9) / offset);
    clamped = true;
  }

  Frame frame(q, Subspace(u));
  const double final_j1 = j1_score(cloud, roi_indices, frame);
  return Step1Result{std::move(frame), final_j1,  N,
                     iters,            converged, clamped,
                     std::move(j1_trace)};
}

}  // namespace mmls
