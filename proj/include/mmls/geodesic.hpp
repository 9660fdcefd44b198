/**
 * @file geodesic.hpp
 * @brief Step-project-transport tracing of approximate geodesics on the
 *        estimated manifold.
 *
 * Each step moves the current point by `step` along the current unit tangent
 * direction, projects the moved point back onto the estimate, and transports
 * the direction by projecting it onto the new tangent and renormalizing
 * (first-order parallel transport for small steps).
 */
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmls/errors.hpp"
#include "mmls/point_cloud.hpp"
#include "mmls/step2.hpp"

namespace mmls {

struct WalkConfig {
  double step = 0.0;
  int n_steps = 0;
  Step1Config step1;
  Step2Config step2;
  /// Reuse the previous tangent as the initial frame for the next projection,
  /// skipping step 1 after the first point.
  bool warm_start = false;

  void validate() const {
    step1.validate();
    step2.validate();
    if (!(step > 0.0) || !(step < step1.tau / 2.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "step length must lie in (0, tau/2)");
    }
    if (n_steps < 0) {
      throw Error(ErrorCode::kInvalidArgument, "n_steps must be >= 0");
    }
  }
};

struct Trajectory {
  MatrixXd points;      // K x D, on-estimate points
  MatrixXd directions;  // K x D, unit tangent directions
  bool truncated = false;
  int failed_step = -1;
  std::string failure;

  Index length() const { return points.rows(); }
};

/// Walks n_steps from x0 in direction v0. A projection failure truncates the
/// trajectory (fails forward); a degenerate transported direction does too.
/// A degenerate initial direction is an error.
inline Trajectory geodesic_walk(const PointCloud& cloud, const VectorXd& x0,
                                const VectorXd& v0, const WalkConfig& cfg) {
  cfg.validate();
  if (v0.size() != cloud.dim() || x0.size() != cloud.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "walk start/direction dimensions do not match cloud");
  }
  if (!(v0.norm() > 0.0)) {
    throw Error(ErrorCode::kZeroDirection, "initial direction is zero");
  }

  std::vector<VectorXd> points;
  std::vector<VectorXd> directions;
  points.reserve(static_cast<std::size_t>(cfg.n_steps) + 1);
  directions.reserve(static_cast<std::size_t>(cfg.n_steps) + 1);

  EstimateResult start = project(cloud, x0, cfg.step1, cfg.step2);
  VectorXd v = start.tangent_hat.projector() * v0.normalized();
  if (v.norm() < 1e-10) {
    throw Error(ErrorCode::kZeroDirection,
                "initial direction projects to zero on the tangent");
  }
  v.normalize();
  points.push_back(start.p_hat);
  directions.push_back(v);

  Trajectory trajectory;
  Subspace tangent = start.tangent_hat;
  for (int i = 0; i < cfg.n_steps; ++i) {
    const VectorXd stepped = points.back() + cfg.step * v;
    std::optional<EstimateResult> next;
    std::string cause;
    try {
      if (cfg.warm_start) {
        next = refine(cloud, Frame(stepped, tangent), cfg.step2, stepped);
      } else {
        next = project(cloud, stepped, cfg.step1, cfg.step2);
      }
      if (!next->failure.empty()) cause = next->failure;
    } catch (const Error& e) {
      if (!e.is_estimator_failure()) throw;
      cause = error_code_name(e.code());
    }
    if (!cause.empty()) {
      trajectory.truncated = true;
      trajectory.failed_step = i + 1;
      trajectory.failure =
          std::string(error_code_name(ErrorCode::kProjectionFailed)) +
          " at step " + std::to_string(i + 1) + " (" + cause + ")";
      break;
    }
    VectorXd transported = next->tangent_hat.projector() * v;
    if (transported.norm() < 1e-10) {
      trajectory.truncated = true;
      trajectory.failed_step = i + 1;
      trajectory.failure = error_code_name(ErrorCode::kZeroDirection);
      break;
    }
    transported.normalize();
    v = transported;
    tangent = next->tangent_hat;
    points.push_back(next->p_hat);
    directions.push_back(v);
  }

  trajectory.points.resize(static_cast<Index>(points.size()), cloud.dim());
  trajectory.directions.resize(static_cast<Index>(points.size()), cloud.dim());
  for (std::size_t k = 0; k < points.size(); ++k) {
    trajectory.points.row(static_cast<Index>(k)) = points[k].transpose();
    trajectory.directions.row(static_cast<Index>(k)) = directions[k].transpose();
  }
  return trajectory;
}

}  // namespace mmls
