/**
 * @file experiment.hpp
 * @brief Monte-Carlo experiment runners: convergence-rate slopes over sample
 *        size, per-iteration tangent-angle contraction, and the config-file
 *        surface behind the `rate` CLI subcommand.
 *
 * Point error is measured as dist(p_hat, M) through the generator's analytic
 * projection; tangent error as the maximal principal angle against the
 * analytic tangent at the foot of p_hat. Aggregates use medians, matching the
 * high-probability character of what is being tested. Trials are independent
 * with per-trial derived seeds and may run on a thread pool; aggregation is
 * ordered by trial id, so reports are deterministic.
 */
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mmls/errors.hpp"
#include "mmls/io.hpp"
#include "mmls/parallel.hpp"
#include "mmls/point_cloud.hpp"
#include "mmls/step1.hpp"
#include "mmls/step2.hpp"
#include "mmls/synthetic.hpp"

namespace mmls {

enum class Metric { kPointError, kTangentAngle, kStep1Angle, kContractionRatio };

struct ExperimentSpec {
  ManifoldSpec manifold = ManifoldSpec::circle(1.0);
  double sigma = 0.0;
  std::vector<Index> sample_sizes;
  int trials_per_n = 1;
  int queries_per_trial = 1;
  std::uint64_t seed = 0;
  Step1Config step1;
  Step2Config step2;
  std::set<Metric> metrics = {Metric::kPointError, Metric::kTangentAngle};
  TubularSampler sampler = TubularSampler::kRejection;
  /// For contraction runs: tilt (radians) applied to an analytic initial
  /// frame. Zero uses the step-1 frame instead.
  double init_tilt = 0.0;

  void validate() const {
    if (sample_sizes.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "sample_sizes is empty");
    }
    for (std::size_t i = 1; i < sample_sizes.size(); ++i) {
      if (sample_sizes[i] <= sample_sizes[i - 1]) {
        throw Error(ErrorCode::kInvalidArgument,
                    "sample_sizes must be strictly increasing");
      }
    }
    if (trials_per_n < 1 || queries_per_trial < 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  "trials_per_n and queries_per_trial must be >= 1");
    }
    if (!(sigma > 0.0) || !(sigma < manifold.reach())) {
      throw Error(ErrorCode::kInvalidArgument, "need 0 < sigma < reach");
    }
    step1.validate();
    step2.validate();
  }
};

struct TrialRecord {
  Index n = 0;
  int trial = 0;
  int query = 0;
  double point_error = 0.0;
  double tangent_angle = 0.0;
  double step1_angle = 0.0;
  bool failed = false;
  std::string failure;
};

struct QuantileRow {
  Index n = 0;
  int count = 0;
  int failures = 0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
};

struct RateReport {
  std::vector<QuantileRow> point_error;
  std::vector<QuantileRow> tangent_angle;
  std::vector<QuantileRow> step1_angle;
  double point_slope = 0.0, point_intercept = 0.0;
  double tangent_slope = 0.0, tangent_intercept = 0.0;
  double step1_slope = 0.0, step1_intercept = 0.0;
  double r0_theoretical = 0.0;  // k/(2k+d)
  double r1_theoretical = 0.0;  // (k-1)/(2k+d)
  std::vector<TrialRecord> raw;
};

/// Median with midpoint averaging on even counts; quantiles by linear
/// interpolation of the order statistics.
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  if (values.size() == 1) return values[0];
  const double position = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(position);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double weight = position - static_cast<double>(lo);
  return values[lo] * (1.0 - weight) + values[hi] * weight;
}

inline double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return (values.size() % 2 == 1) ? values[mid]
                                  : 0.5 * (values[mid - 1] + values[mid]);
}

/// Least-squares slope/intercept of log(y) against log(x); exact on power
/// laws. Non-positive y values are rejected.
inline std::pair<double, double> fit_loglog_slope(
    const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "slope fit needs two matched samples or more");
  }
  const std::size_t n = xs.size();
  double mean_x = 0.0, mean_y = 0.0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
      throw Error(ErrorCode::kInvalidDomain,
                  "log-log fit needs positive values");
    }
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
    mean_x += lx[i];
    mean_y += ly[i];
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mean_x) * (lx[i] - mean_x);
    sxy += (lx[i] - mean_x) * (ly[i] - mean_y);
  }
  const double slope = sxy / sxx;
  return {slope, mean_y - slope * mean_x};
}

namespace detail {

inline QuantileRow summarize(Index n, const std::vector<double>& values,
                             int failures) {
  QuantileRow row;
  row.n = n;
  row.count = static_cast<int>(values.size());
  row.failures = failures;
  row.q25 = quantile(values, 0.25);
  row.median = median(values);
  row.q75 = quantile(values, 0.75);
  return row;
}

inline void fit_metric_slope(const std::vector<QuantileRow>& rows,
                             double* slope, double* intercept) {
  std::vector<double> ns, meds;
  for (const auto& row : rows) {
    if (row.count > 0 && row.median > 0.0) {
      ns.push_back(static_cast<double>(row.n));
      meds.push_back(row.median);
    }
  }
  if (ns.size() >= 2) {
    auto [s, b] = fit_loglog_slope(ns, meds);
    *slope = s;
    *intercept = b;
  }
}

}  // namespace detail

/// Assembles a report from raw per-trial records; exposed separately so exact
/// synthetic error feeds can drive the slope machinery directly.
inline RateReport build_rate_report(const std::vector<Index>& sample_sizes,
                                    int k, int d,
                                    std::vector<TrialRecord> raw) {
  RateReport report;
  report.r0_theoretical = static_cast<double>(k) / (2.0 * k + d);
  report.r1_theoretical = static_cast<double>(k - 1) / (2.0 * k + d);
  for (Index n : sample_sizes) {
    std::vector<double> pe, ta, sa;
    int failures = 0;
    for (const auto& rec : raw) {
      if (rec.n != n) continue;
      if (rec.failed) {
        ++failures;
        continue;
      }
      pe.push_back(rec.point_error);
      ta.push_back(rec.tangent_angle);
      sa.push_back(rec.step1_angle);
    }
    report.point_error.push_back(detail::summarize(n, pe, failures));
    report.tangent_angle.push_back(detail::summarize(n, ta, failures));
    report.step1_angle.push_back(detail::summarize(n, sa, failures));
  }
  detail::fit_metric_slope(report.point_error, &report.point_slope,
                           &report.point_intercept);
  detail::fit_metric_slope(report.tangent_angle, &report.tangent_slope,
                           &report.tangent_intercept);
  detail::fit_metric_slope(report.step1_angle, &report.step1_slope,
                           &report.step1_intercept);
  report.raw = std::move(raw);
  return report;
}

/// Samples clouds of each requested size, projects fresh on-manifold query
/// points, and fits log-log slopes on the per-size medians. Trial failures
/// are recorded, not fatal.
inline RateReport run_convergence_experiment(const ExperimentSpec& spec) {
  spec.validate();
  struct Task {
    Index n;
    int trial;
    std::size_t first_record;
  };
  std::vector<Task> tasks;
  std::size_t total_records = 0;
  for (Index n : spec.sample_sizes) {
    for (int t = 0; t < spec.trials_per_n; ++t) {
      tasks.push_back(Task{n, t, total_records});
      total_records += static_cast<std::size_t>(spec.queries_per_trial);
    }
  }
  std::vector<TrialRecord> records(total_records);

  parallel_for(static_cast<std::int64_t>(tasks.size()), [&](std::int64_t ti) {
    const Task& task = tasks[static_cast<std::size_t>(ti)];
    const std::uint64_t trial_seed =
        split_seed(spec.seed, static_cast<std::uint64_t>(task.n) * 1000003 +
                                  static_cast<std::uint64_t>(task.trial));
    Rng rng(split_seed(trial_seed, 0x9E11ULL));

    PointCloud cloud = [&] {
      const NoisySample sample = sample_tubular(spec.manifold, task.n,
                                                spec.sigma, trial_seed,
                                                spec.sampler);
      return PointCloud::build(sample.points);
    }();

    for (int qi = 0; qi < spec.queries_per_trial; ++qi) {
      TrialRecord rec;
      rec.n = task.n;
      rec.trial = task.trial;
      rec.query = qi;
      const VectorXd query = spec.manifold.sample_point(rng);
      try {
        const Step1Result s1 = find_initial_frame(cloud, query, spec.step1);
        if (spec.metrics.count(Metric::kStep1Angle)) {
          const auto foot1 = spec.manifold.analytic_project(s1.frame.origin);
          rec.step1_angle = max_angle(s1.frame.subspace, foot1.tangent);
        }
        const EstimateResult est = refine(cloud, s1.frame, spec.step2, query);
        if (!est.failure.empty()) {
          rec.failed = true;
          rec.failure = est.failure;
        } else {
          const auto foot = spec.manifold.analytic_project(est.p_hat);
          rec.point_error = foot.distance;
          rec.tangent_angle = max_angle(est.tangent_hat, foot.tangent);
        }
      } catch (const Error& e) {
        if (!e.is_estimator_failure()) throw;
        rec.failed = true;
        rec.failure = error_code_name(e.code());
      }
      records[task.first_record + static_cast<std::size_t>(qi)] = rec;
    }
  });

  return build_rate_report(spec.sample_sizes, spec.step2.k,
                           spec.manifold.intrinsic_dim(), std::move(records));
}

/// Angle between an estimated tangent and the analytic tangent at the foot of
/// the current origin; NaN when the origin leaves the unique-projection tube.
inline double tilt_angle(const ManifoldSpec& manifold, const VectorXd& origin,
                         const Subspace& h) {
  try {
    const auto foot = manifold.analytic_project(origin);
    return max_angle(h, foot.tangent);
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

struct ContractionRow {
  int iteration = 0;
  double median_ratio = 0.0;
  int count = 0;
  bool masked = false;
};

struct ContractionReport {
  std::vector<ContractionRow> rows;
  /// Median terminal tangent angle per sample size, in sample_sizes order.
  std::vector<double> terminal_angle_median;
};

/// Collects per-iteration tangent-angle traces from the refinement and
/// reports the median ratio angle_{l+1}/angle_l per iteration, masking
/// iterations once the angle falls below twice the trial's terminal angle
/// (the noise floor of that run).
inline ContractionReport run_contraction_experiment(const ExperimentSpec& spec) {
  spec.validate();
  struct TrialTrace {
    std::vector<double> angles;
  };

  ContractionReport report;
  std::vector<std::vector<TrialTrace>> per_n(spec.sample_sizes.size());

  for (std::size_t ni = 0; ni < spec.sample_sizes.size(); ++ni) {
    const Index n = spec.sample_sizes[ni];
    std::vector<TrialTrace> traces(static_cast<std::size_t>(spec.trials_per_n));
    parallel_for(spec.trials_per_n, [&](std::int64_t t) {
      const std::uint64_t trial_seed = split_seed(
          spec.seed, 0xC0117ULL + static_cast<std::uint64_t>(n) * 131 +
                         static_cast<std::uint64_t>(t));
      Rng rng(split_seed(trial_seed, 0xA11CEULL));
      const NoisySample sample =
          sample_tubular(spec.manifold, n, spec.sigma, trial_seed, spec.sampler);
      const PointCloud cloud = PointCloud::build(sample.points);
      const VectorXd query = spec.manifold.sample_point(rng);

      Frame init = [&]() -> Frame {
        if (spec.init_tilt > 0.0) {
          // Analytic frame at the query, tilted by rotating one tangent
          // direction toward a normal direction.
          const auto proj = spec.manifold.analytic_project(query);
          MatrixXd tilted = proj.tangent.basis();
          const MatrixXd normals = orthonormal_complement(proj.tangent);
          const Index tc = static_cast<Index>(
              rng.index(static_cast<std::uint64_t>(tilted.cols())));
          const Index nc = static_cast<Index>(
              rng.index(static_cast<std::uint64_t>(normals.cols())));
          tilted.col(tc) = std::cos(spec.init_tilt) * tilted.col(tc) +
                           std::sin(spec.init_tilt) * normals.col(nc);
          return Frame(proj.foot, Subspace(tilted));
        }
        return find_initial_frame(cloud, query, spec.step1).frame;
      }();

      const EstimateResult est = refine(cloud, init, spec.step2, query);
      TrialTrace trace;
      trace.angles.push_back(
          tilt_angle(spec.manifold, init.origin, init.subspace));
      for (const auto& rec : est.trace.records) {
        const double angle =
            tilt_angle(spec.manifold, rec.origin, Subspace(rec.tangent_basis));
        if (std::isnan(angle)) break;
        trace.angles.push_back(angle);
      }
      traces[static_cast<std::size_t>(t)] = std::move(trace);
    });
    per_n[ni] = std::move(traces);
  }

  // Terminal angles per n.
  for (std::size_t ni = 0; ni < per_n.size(); ++ni) {
    std::vector<double> terminals;
    for (const auto& trace : per_n[ni]) {
      if (!trace.angles.empty()) terminals.push_back(trace.angles.back());
    }
    report.terminal_angle_median.push_back(median(terminals));
  }

  // Ratio table from the largest sample size (the most resolved traces).
  const auto& traces = per_n.back();
  std::size_t longest = 0;
  for (const auto& trace : traces) longest = std::max(longest, trace.angles.size());
  for (std::size_t l = 0; l + 1 < longest; ++l) {
    std::vector<double> ratios;
    for (const auto& trace : traces) {
      if (l + 1 >= trace.angles.size()) continue;
      const double floor_angle = 2.0 * trace.angles.back();
      const double numerator = trace.angles[l + 1];
      const double denominator = trace.angles[l];
      // Mask once the next angle is at the trial's noise floor.
      if (numerator <= floor_angle || denominator <= 0.0) continue;
      ratios.push_back(numerator / denominator);
    }
    ContractionRow row;
    row.iteration = static_cast<int>(l);
    row.count = static_cast<int>(ratios.size());
    row.masked = ratios.size() <
                 std::max<std::size_t>(5, traces.size() / 10);
    row.median_ratio = row.masked ? 0.0 : median(ratios);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace mmls
