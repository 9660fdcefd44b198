/**
 * @file step2.hpp
 * @brief Iterated local-polynomial refinement of a frame to a manifold point
 *        and tangent estimate.
 *
 * One refinement iteration, starting from (q_l, H_l):
 *
 *   1. fit a polynomial pi : H_l -> H_l^perp over the bandwidth window,
 *   2. H_{l+1} = orthonormalized ambient image of the graph tangent
 *      [I ; D_pi(0)],
 *   3. re-fit in (q_l, H_{l+1}) and move the origin q_{l+1} = q_l + pi'(0)
 *      expressed in H_{l+1}^perp (so q_{l+1} - q_l is orthogonal to H_{l+1}).
 *
 * Step 3's re-fit is the default; a compatibility switch reuses the step-1
 * fit's value in the old frame instead (single fit per iteration), which some
 * practical variants use. A pre-step moves the origin once in the initial
 * frame before iterating. Iteration stops on origin displacement below
 * eps_stop, or after a fixed iteration budget for rate experiments.
 */
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmls/errors.hpp"
#include "mmls/point_cloud.hpp"
#include "mmls/polynomial.hpp"
#include "mmls/step1.hpp"
#include "mmls/subspace.hpp"

namespace mmls {

enum class IterMode { kUntilConvergence, kFixedKappa };

/// How the origin update obtains its polynomial value.
enum class OriginUpdate {
  kRefitInNewFrame,   // two fits per iteration
  kReuseOldFrameFit,  // single fit per iteration (compatibility variant)
};

/// Whether the base working window follows the drifting origin or stays
/// anchored at the initial query.
enum class RoiPolicy { kRecenterEachIteration, kAnchored };

struct Step2Config {
  double sigma = 0.0;
  double tau = 0.0;
  int k = 2;  // smoothness; polynomial degree is k-1
  double bandwidth_scale = 1.0;
  BandwidthMode bandwidth_mode = BandwidthMode::kRateConsistent;
  double eps_stop = 0.0;  // 0 -> 1e-6 * sigma
  int max_iters = 50;
  IterMode iter_mode = IterMode::kUntilConvergence;
  int fixed_kappa = 5;
  int mom_blocks = 1;
  OriginUpdate origin_update = OriginUpdate::kRefitInNewFrame;
  RoiPolicy roi_policy = RoiPolicy::kRecenterEachIteration;
  int max_enlargements = 4;
  double enlargement_factor = 1.5;

  void validate() const {
    if (!(sigma > 0.0) || !(sigma < tau)) {
      throw Error(ErrorCode::kInvalidArgument, "need 0 < sigma < tau");
    }
    if (k < 2) {
      throw Error(ErrorCode::kInvalidArgument,
                  "need k >= 2: degree-0 fits cannot update the tangent");
    }
    if (max_iters < 1) {
      throw Error(ErrorCode::kInvalidArgument, "need max_iters >= 1");
    }
    if (iter_mode == IterMode::kFixedKappa && fixed_kappa < 1) {
      throw Error(ErrorCode::kInvalidArgument, "need fixed_kappa >= 1");
    }
    if (mom_blocks < 1) {
      throw Error(ErrorCode::kInvalidArgument, "need mom_blocks >= 1");
    }
  }

  double effective_eps_stop() const {
    return eps_stop > 0.0 ? eps_stop : 1e-6 * sigma;
  }
};

struct IterRecord {
  VectorXd origin;
  MatrixXd tangent_basis;
  double displacement = 0.0;
  FitDiagnostics fit;
  Index roi_size = 0;
  double eps_used = 0.0;
};

struct RefineTrace {
  std::vector<IterRecord> records;
};

struct EstimateResult {
  VectorXd p_hat;
  Subspace tangent_hat;
  RefineTrace trace;
  bool converged = false;
  std::string failure;  // empty on clean termination
};

/// Bandwidth-restricted window: members of base_roi whose tangential
/// coordinates satisfy ||x_i|| < eps_n (strict).
inline std::vector<Index> roi_n(const PointCloud& cloud, const Frame& frame,
                                const std::vector<Index>& base_roi,
                                double eps_n) {
  if (!(eps_n > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "eps_n must be positive");
  }
  std::vector<Index> kept;
  kept.reserve(base_roi.size());
  for (Index i : base_roi) {
    const VectorXd x =
        frame.subspace.basis().transpose() * (cloud.point(i) - frame.origin);
    if (x.norm() < eps_n) kept.push_back(i);
  }
  if (kept.empty()) {
    throw Error(ErrorCode::kEmptyRoi, "bandwidth window contains no samples");
  }
  return kept;
}

/// A fitted local polynomial together with the normal basis it is expressed
/// in: the map x -> q + B x + W pi(x) parameterizes the estimated patch.
struct FrameFit {
  MultiPolynomial poly;
  MatrixXd normal_basis;  // D x (D-d), orthonormal, spans H^perp
  FitDiagnostics diag;
  double eps_used = 0.0;
  std::vector<Index> indices;
};

/// Fits the degree-(k-1) polynomial over the bandwidth window of the frame.
/// If the window holds fewer points than the monomial basis size, the
/// bandwidth is enlarged geometrically a bounded number of times.
inline FrameFit fit_in_frame(const PointCloud& cloud, const Frame& frame,
                             const std::vector<Index>& base_roi,
                             const Step2Config& cfg) {
  cfg.validate();
  const int d = static_cast<int>(frame.subspace.dim());
  const int degree = cfg.k - 1;
  const Index B = monomial_basis_size(d, degree);

  double eps = bandwidth(cloud.size(), cfg.k, d, cfg.bandwidth_scale,
                         cfg.bandwidth_mode);
  std::vector<Index> window;
  int attempt = 0;
  while (true) {
    try {
      window = roi_n(cloud, frame, base_roi, eps);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyRoi) throw;
      window.clear();
    }
    if (static_cast<Index>(window.size()) >= B) break;
    if (attempt >= cfg.max_enlargements) {
      throw Error(ErrorCode::kInsufficientSamples,
                  "bandwidth window holds " + std::to_string(window.size()) +
                      " samples, need " + std::to_string(B));
    }
    eps *= cfg.enlargement_factor;
    ++attempt;
  }

  const MatrixXd w = orthonormal_complement(frame.subspace);
  const Index n = static_cast<Index>(window.size());
  MatrixXd xs(n, d);
  MatrixXd ys(n, cloud.dim() - d);
  for (Index r = 0; r < n; ++r) {
    const VectorXd delta =
        cloud.point(window[static_cast<std::size_t>(r)]) - frame.origin;
    xs.row(r) = (frame.subspace.basis().transpose() * delta).transpose();
    ys.row(r) = (w.transpose() * delta).transpose();
  }

  auto [poly, diag] = fit(xs, ys, degree, cfg.mom_blocks);
  return FrameFit{std::move(poly), w, diag, eps, std::move(window)};
}

namespace detail {

inline std::vector<Index> base_window(const PointCloud& cloud,
                                      const VectorXd& center,
                                      const Step2Config& cfg) {
  auto indices =
      cloud.radius_query(center, std::sqrt(cfg.sigma * cfg.tau));
  if (indices.empty()) {
    throw Error(ErrorCode::kEmptyRoi, "no samples near the working origin");
  }
  return indices;
}

}  // namespace detail

/// Runs the iterated refinement from an initial frame. On a mid-iteration
/// estimator failure the best frame so far is returned with converged=false
/// and the failure code recorded.
inline EstimateResult refine(const PointCloud& cloud, const Frame& init,
                             const Step2Config& cfg,
                             std::optional<VectorXd> anchor = std::nullopt) {
  cfg.validate();
  const VectorXd anchor_point = anchor.value_or(init.origin);

  VectorXd q = init.origin;
  MatrixXd h = init.subspace.basis();
  RefineTrace trace;
  const double eps_stop = cfg.effective_eps_stop();

  auto result_from_current = [&](bool converged, const std::string& failure) {
    return EstimateResult{q, Subspace(h), std::move(trace), converged, failure};
  };

  auto window_for = [&](const VectorXd& center) {
    return detail::base_window(
        cloud, cfg.roi_policy == RoiPolicy::kAnchored ? anchor_point : center,
        cfg);
  };

  // Pre-step: move the origin once inside the initial frame.
  try {
    const auto base = window_for(q);
    const Frame frame(q, Subspace(h));
    const FrameFit pre = fit_in_frame(cloud, frame, base, cfg);
    const VectorXd q_next =
        q + pre.normal_basis * pre.poly.eval(VectorXd::Zero(h.cols()));
    const double moved = (q_next - q).norm();
    q = q_next;
    trace.records.push_back(IterRecord{q, h, moved, pre.diag,
                                       static_cast<Index>(pre.indices.size()),
                                       pre.eps_used});
  } catch (const Error& e) {
    if (!e.is_estimator_failure()) throw;
    return result_from_current(false, error_code_name(e.code()));
  }

  const int iterations = cfg.iter_mode == IterMode::kFixedKappa
                             ? std::min(cfg.fixed_kappa, cfg.max_iters)
                             : cfg.max_iters;
  bool converged = cfg.iter_mode == IterMode::kFixedKappa;

  for (int iter = 0; iter < iterations; ++iter) {
    try {
      const auto base = window_for(q);
      const Frame frame(q, Subspace(h));
      const FrameFit first = fit_in_frame(cloud, frame, base, cfg);

      // Tangent update: ambient image of the graph tangent at 0.
      const MatrixXd jac = first.poly.differential_at_zero();
      const MatrixXd ambient_tangent = h + first.normal_basis * jac;
      const Subspace h_next = orthonormalize(ambient_tangent);

      VectorXd q_next;
      FitDiagnostics used_diag;
      Index used_count = 0;
      double used_eps = 0.0;
      if (cfg.origin_update == OriginUpdate::kRefitInNewFrame) {
        const Frame tilted(q, h_next);
        const FrameFit second = fit_in_frame(cloud, tilted, base, cfg);
        q_next = q + second.normal_basis *
                         second.poly.eval(VectorXd::Zero(h.cols()));
        used_diag = second.diag;
        used_count = static_cast<Index>(second.indices.size());
        used_eps = second.eps_used;
      } else {
        q_next = q + first.normal_basis *
                         first.poly.eval(VectorXd::Zero(h.cols()));
        used_diag = first.diag;
        used_count = static_cast<Index>(first.indices.size());
        used_eps = first.eps_used;
      }

      const double moved = (q_next - q).norm();
      q = q_next;
      h = h_next.basis();
      trace.records.push_back(
          IterRecord{q, h, moved, used_diag, used_count, used_eps});

      if (cfg.iter_mode == IterMode::kUntilConvergence && moved < eps_stop) {
        converged = true;
        break;
      }
    } catch (const Error& e) {
      if (!e.is_estimator_failure()) throw;
      return result_from_current(false, error_code_name(e.code()));
    }
  }

  return result_from_current(converged, "");
}

/// Iteration budget that the convergence analysis prescribes:
///
///   kappa = r1*log2(n) + Cbar - log2(ln((2*r1*log2(n) + 2*Cbar) / delta)),
///   Cbar  = 1 + log2(alpha1 / (12*sqrt(d))) - log2(c0),
///
/// with r1 = (k-1)/(2k+d). The unnamed outer log is read as log2, matching
/// the derivation it comes from. Practical runs stop on displacement instead.
inline double theoretical_kappa(Index n, double delta, double alpha1, int d,
                                int k, double c0) {
  if (n < 1 || !(delta > 0.0) || !(delta < 1.0) || !(alpha1 > 0.0) || d < 1 ||
      k < 1 || !(c0 > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bad theoretical_kappa inputs");
  }
  const double r1 = (k - 1.0) / (2.0 * k + d);
  const double cbar =
      1.0 + std::log2(alpha1 / (12.0 * std::sqrt(static_cast<double>(d)))) -
      std::log2(c0);
  const double log2_n = std::log2(static_cast<double>(n));
  const double inner = (2.0 * r1 * log2_n + 2.0 * cbar) / delta;
  if (!(inner > 1.0)) {
    throw Error(ErrorCode::kInvalidDomain,
                "inner ln argument is not above 1; kappa is undefined here");
  }
  return r1 * log2_n + cbar - std::log2(std::log(inner));
}

/// Full pipeline: initial frame at r, then refinement. The step-2 window
/// anchor is the query point when the anchored ROI policy is selected.
inline EstimateResult project(const PointCloud& cloud, const VectorXd& r,
                              const Step1Config& cfg1, const Step2Config& cfg2) {
  const Step1Result initial = find_initial_frame(cloud, r, cfg1);
  return refine(cloud, initial.frame, cfg2, r);
}

}  // namespace mmls
