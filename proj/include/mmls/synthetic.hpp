/**
 * @file synthetic.hpp
 * @brief Ground-truth manifold generators: analytic projection, tangent,
 *        reach, and samplers for the uniform tubular noise model.
 *
 * Supported manifolds: circle(R) in R^2, sphere S^d(R) in R^{d+1},
 * torus(R_major, r_minor) in R^3, and poly_graph (graph of a polynomial map
 * over a box domain, numerically projected). Any of them can be embedded
 * isometrically into a larger ambient space by zero-padding followed by a
 * seeded random rotation, which exercises the D >> d code path without
 * external data.
 *
 * The default tubular sampler is rejection from an ambient bounding box and
 * is exactly uniform on {p : dist(p, M) < sigma}. A normal-fiber sampler
 * (manifold point + uniform offset in the normal ball) is available for high
 * ambient dimensions where rejection starves; it is approximate, with
 * O(sigma/tau) density bias.
 */
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "mmls/errors.hpp"
#include "mmls/polynomial.hpp"
#include "mmls/random.hpp"
#include "mmls/subspace.hpp"

namespace mmls {

enum class ManifoldKind { kCircle, kSphere, kTorus, kPolyGraph };

enum class TubularSampler { kRejection, kNormalFiber };

class ManifoldSpec {
 public:
  struct Projection {
    VectorXd foot;
    Subspace tangent;
    double distance = 0.0;
  };

  static ManifoldSpec circle(double radius) {
    if (!(radius > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "circle radius must be positive");
    }
    ManifoldSpec spec;
    spec.kind_ = ManifoldKind::kCircle;
    spec.radius_ = radius;
    spec.intrinsic_dim_ = 1;
    spec.base_dim_ = 2;
    spec.reach_ = radius;
    return spec;
  }

  static ManifoldSpec sphere(int d, double radius) {
    if (d < 1 || !(radius > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "sphere needs d >= 1, radius > 0");
    }
    ManifoldSpec spec;
    spec.kind_ = ManifoldKind::kSphere;
    spec.radius_ = radius;
    spec.intrinsic_dim_ = d;
    spec.base_dim_ = d + 1;
    spec.reach_ = radius;
    return spec;
  }

  static ManifoldSpec torus(double major, double minor) {
    if (!(major > 0.0) || !(minor > 0.0) || !(minor < major)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "torus needs 0 < minor < major");
    }
    ManifoldSpec spec;
    spec.kind_ = ManifoldKind::kTorus;
    spec.major_ = major;
    spec.minor_ = minor;
    spec.intrinsic_dim_ = 2;
    spec.base_dim_ = 3;
    spec.reach_ = std::min(minor, major - minor);
    return spec;
  }

  /// Graph of `graph` : R^d -> R^{D-d} over the box [-half, half]^d. The
  /// reach has no closed form here; `reach_lower_bound` is a configured
  /// value, validated empirically by reach_check().
  static ManifoldSpec poly_graph(MultiPolynomial graph, double domain_halfwidth,
                                 double reach_lower_bound) {
    if (!(domain_halfwidth > 0.0) || !(reach_lower_bound > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "poly_graph needs positive domain and reach bound");
    }
    ManifoldSpec spec;
    spec.kind_ = ManifoldKind::kPolyGraph;
    spec.intrinsic_dim_ = graph.intrinsic_dim();
    spec.base_dim_ = graph.intrinsic_dim() + graph.out_dim();
    spec.reach_ = reach_lower_bound;
    spec.domain_half_ = domain_halfwidth;
    spec.graph_ = std::move(graph);
    return spec;
  }

  /// Same manifold, isometrically embedded in R^{ambient_dim} by zero padding
  /// followed by a seeded random rotation.
  ManifoldSpec embedded(int ambient_dim, std::uint64_t rotation_seed) const {
    if (ambient_dim <= base_dim_) {
      throw Error(ErrorCode::kInvalidArgument,
                  "embedding dimension must exceed the native dimension");
    }
    if (rotation_.size() != 0) {
      throw Error(ErrorCode::kInvalidArgument, "already embedded");
    }
    ManifoldSpec spec = *this;
    Rng rng(split_seed(rotation_seed, 0xE3BEDULL));
    MatrixXd gauss(ambient_dim, ambient_dim);
    for (Index i = 0; i < gauss.rows(); ++i) {
      for (Index j = 0; j < gauss.cols(); ++j) gauss(i, j) = rng.normal();
    }
    const Eigen::HouseholderQR<MatrixXd> qr(gauss);
    MatrixXd q = qr.householderQ() * MatrixXd::Identity(ambient_dim, ambient_dim);
    detail::apply_sign_convention(q);
    spec.rotation_ = std::move(q);
    return spec;
  }

  ManifoldKind kind() const { return kind_; }
  double reach() const { return reach_; }
  int intrinsic_dim() const { return intrinsic_dim_; }
  int ambient_dim() const {
    return rotation_.size() == 0 ? base_dim_
                                 : static_cast<int>(rotation_.rows());
  }
  double radius() const { return radius_; }
  double major_radius() const { return major_; }
  double minor_radius() const { return minor_; }

  /// Distance from a point to the manifold.
  double dist_to_manifold(const VectorXd& point) const {
    check_dim(point);
    if (rotation_.size() == 0) return base_distance(point).first;
    const VectorXd u = rotation_.transpose() * point;
    const VectorXd base = u.head(base_dim_);
    const double rest2 = u.tail(u.size() - base_dim_).squaredNorm();
    const double base_dist = base_distance(base).first;
    return std::sqrt(base_dist * base_dist + rest2);
  }

  /// Nearest manifold point and the tangent there. Requires
  /// dist(point, M) < reach (unique-projection region).
  Projection analytic_project(const VectorXd& point) const {
    check_dim(point);
    if (rotation_.size() == 0) return base_project(point);

    const VectorXd u = rotation_.transpose() * point;
    const VectorXd base = u.head(base_dim_);
    const double rest2 = u.tail(u.size() - base_dim_).squaredNorm();
    const auto [base_dist, ok] = base_distance(base);
    const double dist = std::sqrt(base_dist * base_dist + rest2);
    if (!ok || !(dist < reach_)) {
      throw Error(ErrorCode::kOutsideReach,
                  "point is not inside the unique-projection region");
    }
    Projection base_proj = base_project_unchecked(base);
    Projection out{VectorXd(), lift_tangent(base_proj.tangent), dist};
    VectorXd padded = VectorXd::Zero(ambient_dim());
    padded.head(base_dim_) = base_proj.foot;
    out.foot = rotation_ * padded;
    return out;
  }

  /// A uniformly distributed point on the manifold itself.
  VectorXd sample_point(Rng& rng) const {
    VectorXd base = base_sample_point(rng);
    if (rotation_.size() == 0) return base;
    VectorXd padded = VectorXd::Zero(ambient_dim());
    padded.head(base_dim_) = base;
    return rotation_ * padded;
  }

  /// Half-width of a per-coordinate bounding box that contains the sigma-tube.
  double tube_box_halfwidth(double sigma) const {
    return max_point_norm() + sigma;
  }

  const std::optional<MultiPolynomial>& graph() const { return graph_; }
  double domain_halfwidth() const { return domain_half_; }

 private:
  ManifoldSpec() = default;

  void check_dim(const VectorXd& point) const {
    if (point.size() != ambient_dim()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "point dimension does not match manifold ambient dimension");
    }
  }

  double max_point_norm() const {
    switch (kind_) {
      case ManifoldKind::kCircle:
      case ManifoldKind::kSphere:
        return radius_;
      case ManifoldKind::kTorus:
        return major_ + minor_;
      case ManifoldKind::kPolyGraph: {
        // Conservative bound from a coarse domain scan.
        double best = 0.0;
        const int steps = 17;
        VectorXd x(intrinsic_dim_);
        std::vector<int> idx(static_cast<std::size_t>(intrinsic_dim_), 0);
        while (true) {
          for (int v = 0; v < intrinsic_dim_; ++v) {
            x(v) = -domain_half_ +
                   2.0 * domain_half_ * idx[static_cast<std::size_t>(v)] /
                       (steps - 1);
          }
          const VectorXd y = graph_->eval(x);
          best = std::max(best, std::sqrt(x.squaredNorm() + y.squaredNorm()));
          int v = 0;
          while (v < intrinsic_dim_ && ++idx[static_cast<std::size_t>(v)] == steps) {
            idx[static_cast<std::size_t>(v)] = 0;
            ++v;
          }
          if (v == intrinsic_dim_) break;
        }
        return 1.1 * best;
      }
    }
    return 0.0;
  }

  /// (distance, projection-well-defined) in base coordinates.
  std::pair<double, bool> base_distance(const VectorXd& p) const {
    switch (kind_) {
      case ManifoldKind::kCircle:
      case ManifoldKind::kSphere: {
        const double norm = p.norm();
        return {std::abs(norm - radius_), norm > 1e-12 * radius_};
      }
      case ManifoldKind::kTorus: {
        const double rho = p.head(2).norm();
        const double s = std::hypot(rho - major_, p(2));
        const bool ok = rho > 1e-12 * major_ && s > 1e-12 * minor_;
        return {std::abs(s - minor_), ok};
      }
      case ManifoldKind::kPolyGraph: {
        const VectorXd x = poly_graph_argmin(p);
        VectorXd on(base_dim_);
        on.head(intrinsic_dim_) = x;
        on.tail(base_dim_ - intrinsic_dim_) = graph_->eval(x);
        return {(p - on).norm(), true};
      }
    }
    return {0.0, false};
  }

  Projection base_project(const VectorXd& p) const {
    const auto [dist, ok] = base_distance(p);
    if (!ok || !(dist < reach_)) {
      throw Error(ErrorCode::kOutsideReach,
                  "point is not inside the unique-projection region");
    }
    return base_project_unchecked(p);
  }

  Projection base_project_unchecked(const VectorXd& p) const {
    switch (kind_) {
      case ManifoldKind::kCircle:
      case ManifoldKind::kSphere: {
        const double norm = p.norm();
        VectorXd foot = p * (radius_ / norm);
        Subspace tangent = sphere_tangent(foot);
        return Projection{std::move(foot), std::move(tangent),
                          std::abs(norm - radius_)};
      }
      case ManifoldKind::kTorus: {
        const double rho = p.head(2).norm();
        VectorXd center(3);
        center << major_ * p(0) / rho, major_ * p(1) / rho, 0.0;
        const VectorXd u = p - center;
        const double s = u.norm();
        VectorXd foot = center + u * (minor_ / s);
        Subspace tangent = torus_tangent(foot);
        return Projection{std::move(foot), std::move(tangent),
                          std::abs(s - minor_)};
      }
      case ManifoldKind::kPolyGraph: {
        const VectorXd x = poly_graph_argmin(p);
        VectorXd foot(base_dim_);
        foot.head(intrinsic_dim_) = x;
        foot.tail(base_dim_ - intrinsic_dim_) = graph_->eval(x);
        const double dist = (p - foot).norm();
        return Projection{std::move(foot), poly_graph_tangent(x), dist};
      }
    }
    throw Error(ErrorCode::kInvalidArgument, "unknown manifold kind");
  }

  Subspace sphere_tangent(const VectorXd& foot) const {
    // Tangent at foot is the orthogonal complement of the radial direction.
    const Index D = foot.size();
    MatrixXd radial = foot / foot.norm();
    const Eigen::HouseholderQR<MatrixXd> qr(radial);
    MatrixXd full = qr.householderQ() * MatrixXd::Identity(D, D);
    MatrixXd basis = full.rightCols(D - 1);
    detail::apply_sign_convention(basis);
    return Subspace(std::move(basis));
  }

  Subspace torus_tangent(const VectorXd& foot) const {
    const double rho = foot.head(2).norm();
    VectorXd e_theta(3), e_rho(3);
    e_theta << -foot(1) / rho, foot(0) / rho, 0.0;
    e_rho << foot(0) / rho, foot(1) / rho, 0.0;
    const double cos_phi = (rho - major_) / minor_;
    const double sin_phi = foot(2) / minor_;
    VectorXd e_phi(3);
    e_phi = -sin_phi * e_rho;
    e_phi(2) += cos_phi;
    MatrixXd basis(3, 2);
    basis.col(0) = e_theta;
    basis.col(1) = e_phi;
    detail::apply_sign_convention(basis);
    return Subspace(std::move(basis));
  }

  Subspace poly_graph_tangent(const VectorXd& x) const {
    // Tangent columns of the graph map at x: [I ; J(x)], orthonormalized.
    const int d = intrinsic_dim_;
    const int m = base_dim_ - intrinsic_dim_;
    MatrixXd jac(m, d);
    const double h = 1e-6 * std::max(1.0, domain_half_);
    for (int v = 0; v < d; ++v) {
      VectorXd hi = x, lo = x;
      hi(v) += h;
      lo(v) -= h;
      jac.col(v) = (graph_->eval(hi) - graph_->eval(lo)) / (2.0 * h);
    }
    MatrixXd cols(base_dim_, d);
    cols.topRows(d) = MatrixXd::Identity(d, d);
    cols.bottomRows(m) = jac;
    return orthonormalize(cols);
  }

  /// Domain point minimizing ||(x, P(x)) - p||, multistart Gauss-Newton with
  /// box clamping.
  VectorXd poly_graph_argmin(const VectorXd& p) const {
    const int d = intrinsic_dim_;
    const int m = base_dim_ - intrinsic_dim_;
    const VectorXd px = p.head(d);
    const VectorXd py = p.tail(m);

    auto objective = [&](const VectorXd& x) {
      return (px - x).squaredNorm() + (py - graph_->eval(x)).squaredNorm();
    };

    // Coarse grid to pick starts.
    const int steps = 9;
    VectorXd best_start = px.cwiseMax(-domain_half_).cwiseMin(domain_half_);
    double best_val = objective(best_start);
    VectorXd x(d);
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    while (true) {
      for (int v = 0; v < d; ++v) {
        x(v) = -domain_half_ +
               2.0 * domain_half_ * idx[static_cast<std::size_t>(v)] / (steps - 1);
      }
      const double val = objective(x);
      if (val < best_val) {
        best_val = val;
        best_start = x;
      }
      int v = 0;
      while (v < d && ++idx[static_cast<std::size_t>(v)] == steps) {
        idx[static_cast<std::size_t>(v)] = 0;
        ++v;
      }
      if (v == d) break;
    }

    // Gauss-Newton on the residual (x - px, P(x) - py), damped, box-clamped.
    VectorXd cur = best_start;
    const double h = 1e-6 * std::max(1.0, domain_half_);
    for (int iter = 0; iter < 60; ++iter) {
      MatrixXd jac(m, d);
      for (int v = 0; v < d; ++v) {
        VectorXd hi = cur, lo = cur;
        hi(v) += h;
        lo(v) -= h;
        jac.col(v) = (graph_->eval(hi) - graph_->eval(lo)) / (2.0 * h);
      }
      // Normal equations of the stacked Jacobian [I ; J].
      const MatrixXd lhs = MatrixXd::Identity(d, d) + jac.transpose() * jac;
      const VectorXd rhs =
          (px - cur) + jac.transpose() * (py - graph_->eval(cur));
      const VectorXd step = lhs.ldlt().solve(rhs);
      double t = 1.0;
      const double cur_val = objective(cur);
      VectorXd next = cur;
      for (int back = 0; back < 20; ++back) {
        next = (cur + t * step).cwiseMax(-domain_half_).cwiseMin(domain_half_);
        if (objective(next) <= cur_val) break;
        t *= 0.5;
      }
      const double moved = (next - cur).norm();
      cur = next;
      if (moved < 1e-13 * std::max(1.0, domain_half_)) break;
    }
    return cur;
  }

  VectorXd base_sample_point(Rng& rng) const {
    switch (kind_) {
      case ManifoldKind::kCircle: {
        const double theta = rng.uniform(0.0, 2.0 * M_PI);
        VectorXd p(2);
        p << radius_ * std::cos(theta), radius_ * std::sin(theta);
        return p;
      }
      case ManifoldKind::kSphere: {
        VectorXd g(base_dim_);
        double norm = 0.0;
        do {
          for (Index i = 0; i < g.size(); ++i) g(i) = rng.normal();
          norm = g.norm();
        } while (norm < 1e-12);
        return g * (radius_ / norm);
      }
      case ManifoldKind::kTorus: {
        const double theta = rng.uniform(0.0, 2.0 * M_PI);
        // Area density over phi is (R + r cos phi); rejection against it.
        double phi = 0.0;
        while (true) {
          phi = rng.uniform(0.0, 2.0 * M_PI);
          const double accept =
              (major_ + minor_ * std::cos(phi)) / (major_ + minor_);
          if (rng.uniform() < accept) break;
        }
        VectorXd p(3);
        const double ring = major_ + minor_ * std::cos(phi);
        p << ring * std::cos(theta), ring * std::sin(theta),
            minor_ * std::sin(phi);
        return p;
      }
      case ManifoldKind::kPolyGraph: {
        // Surface-measure rejection with density sqrt(det(I + J^T J)).
        const int d = intrinsic_dim_;
        const double bound = poly_graph_density_bound();
        while (true) {
          VectorXd x(d);
          for (int v = 0; v < d; ++v) {
            x(v) = rng.uniform(-domain_half_, domain_half_);
          }
          if (rng.uniform() * bound <= poly_graph_density(x)) {
            VectorXd p(base_dim_);
            p.head(d) = x;
            p.tail(base_dim_ - d) = graph_->eval(x);
            return p;
          }
        }
      }
    }
    throw Error(ErrorCode::kInvalidArgument, "unknown manifold kind");
  }

  double poly_graph_density(const VectorXd& x) const {
    const int d = intrinsic_dim_;
    const int m = base_dim_ - intrinsic_dim_;
    MatrixXd jac(m, d);
    const double h = 1e-6 * std::max(1.0, domain_half_);
    for (int v = 0; v < d; ++v) {
      VectorXd hi = x, lo = x;
      hi(v) += h;
      lo(v) -= h;
      jac.col(v) = (graph_->eval(hi) - graph_->eval(lo)) / (2.0 * h);
    }
    return std::sqrt(
        (MatrixXd::Identity(d, d) + jac.transpose() * jac).determinant());
  }

  double poly_graph_density_bound() const {
    if (density_bound_ > 0.0) return density_bound_;
    double best = 1.0;
    const int steps = 17;
    const int d = intrinsic_dim_;
    VectorXd x(d);
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    while (true) {
      for (int v = 0; v < d; ++v) {
        x(v) = -domain_half_ +
               2.0 * domain_half_ * idx[static_cast<std::size_t>(v)] / (steps - 1);
      }
      best = std::max(best, poly_graph_density(x));
      int v = 0;
      while (v < d && ++idx[static_cast<std::size_t>(v)] == steps) {
        idx[static_cast<std::size_t>(v)] = 0;
        ++v;
      }
      if (v == d) break;
    }
    density_bound_ = 1.25 * best;
    return density_bound_;
  }

  Subspace lift_tangent(const Subspace& base_tangent) const {
    MatrixXd lifted = MatrixXd::Zero(ambient_dim(), base_tangent.dim());
    lifted.topRows(base_dim_) = base_tangent.basis();
    return Subspace(rotation_ * lifted);
  }

  ManifoldKind kind_ = ManifoldKind::kCircle;
  double radius_ = 0.0;
  double major_ = 0.0;
  double minor_ = 0.0;
  double reach_ = 0.0;
  int intrinsic_dim_ = 0;
  int base_dim_ = 0;
  double domain_half_ = 0.0;
  std::optional<MultiPolynomial> graph_;
  MatrixXd rotation_;  // empty when not embedded
  mutable double density_bound_ = 0.0;
};

/// One generated dataset: points in the tube plus their exact feet on M.
struct NoisySample {
  MatrixXd points;  // n x D
  MatrixXd feet;    // n x D
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Draws n samples from the tubular neighborhood {dist(p, M) < sigma}.
///
/// kRejection draws uniformly from a bounding box and accepts on the exact
/// distance test: exactly Unif(M_sigma). kNormalFiber places uniform offsets
/// in the normal ball around uniform manifold points (approximate; use when
/// rejection is hopeless, i.e. large ambient dimension).
inline NoisySample sample_tubular(const ManifoldSpec& spec, Index n,
                                  double sigma, std::uint64_t seed,
                                  TubularSampler sampler = TubularSampler::kRejection) {
  if (n < 1) {
    throw Error(ErrorCode::kInvalidArgument, "sample count must be >= 1");
  }
  if (!(sigma > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sigma must be positive");
  }
  if (!(sigma < spec.reach())) {
    throw Error(ErrorCode::kSigmaExceedsReach,
                "sigma must be strictly below the reach");
  }
  const int D = spec.ambient_dim();
  NoisySample sample;
  sample.points.resize(n, D);
  sample.feet.resize(n, D);
  sample.sigma = sigma;
  sample.seed = seed;
  Rng rng(split_seed(seed, 0x7B5EULL));

  if (sampler == TubularSampler::kRejection) {
    const double half = spec.tube_box_halfwidth(sigma);
    std::uint64_t draws = 0;
    Index accepted = 0;
    VectorXd candidate(D);
    while (accepted < n) {
      for (Index c = 0; c < D; ++c) candidate(c) = rng.uniform(-half, half);
      ++draws;
      if (spec.dist_to_manifold(candidate) < sigma) {
        sample.points.row(accepted) = candidate.transpose();
        ++accepted;
      }
      if (draws >= 1000000 &&
          static_cast<double>(accepted) < 1e-6 * static_cast<double>(draws)) {
        throw Error(ErrorCode::kBoundingBoxFailure,
                    "rejection acceptance rate below 1e-6; use the "
                    "normal-fiber sampler for high ambient dimensions");
      }
    }
  } else {
    const int codim = D - spec.intrinsic_dim();
    for (Index i = 0; i < n; ++i) {
      const VectorXd on = spec.sample_point(rng);
      const auto proj = spec.analytic_project(on);
      const MatrixXd normal_basis = orthonormal_complement(proj.tangent);
      VectorXd direction(codim);
      double norm = 0.0;
      do {
        for (Index c = 0; c < codim; ++c) direction(c) = rng.normal();
        norm = direction.norm();
      } while (norm < 1e-12);
      const double radius =
          sigma * std::pow(rng.uniform(), 1.0 / static_cast<double>(codim));
      sample.points.row(i) =
          (on + normal_basis * (direction * (radius / norm))).transpose();
    }
  }

  for (Index i = 0; i < n; ++i) {
    sample.feet.row(i) =
        spec.analytic_project(sample.points.row(i).transpose()).foot.transpose();
  }
  return sample;
}

/// Monte-Carlo validation of the reach value against the bounding-ball
/// inequality: manifold points at tangential offset x_T from p must satisfy
/// ||normal component|| <= tau - sqrt(tau^2 - ||x_T||^2).
struct ReachCheckReport {
  bool passed = false;
  double worst_margin = 0.0;
  int trials = 0;
  long tested_pairs = 0;
};

inline ReachCheckReport reach_check(const ManifoldSpec& spec, int trials,
                                    std::uint64_t seed) {
  Rng rng(split_seed(seed, 0x5EAC4ULL));
  const double tau = spec.reach();
  ReachCheckReport report;
  report.trials = trials;
  report.worst_margin = std::numeric_limits<double>::infinity();
  const int probes_per_trial = 128;
  for (int t = 0; t < trials; ++t) {
    const VectorXd p = spec.sample_point(rng);
    const auto proj = spec.analytic_project(p);
    const MatrixXd& tangent = proj.tangent.basis();
    for (int s = 0; s < probes_per_trial; ++s) {
      const VectorXd m = spec.sample_point(rng);
      const VectorXd delta = m - p;
      const VectorXd x_t = tangent * (tangent.transpose() * delta);
      const VectorXd y = delta - x_t;
      const double xt_norm = x_t.norm();
      const double y_norm = y.norm();
      if (xt_norm > tau || y_norm > tau / 2.0) continue;
      const double bound =
          tau - std::sqrt(std::max(0.0, tau * tau - xt_norm * xt_norm));
      report.worst_margin = std::min(report.worst_margin, bound - y_norm);
      ++report.tested_pairs;
    }
  }
  if (report.tested_pairs == 0) report.worst_margin = 0.0;
  report.passed = report.worst_margin >= -1e-9;
  return report;
}

}  // namespace mmls
