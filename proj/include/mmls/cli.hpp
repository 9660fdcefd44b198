/**
 * @file cli.hpp
 * @brief Command-line surface: synth, project, denoise, geodesic, rate.
 *
 * Exit codes: 0 success, 1 usage error, 2 data error (files, parsing,
 * malformed inputs), 3 estimator failure. All subcommands are deterministic
 * given explicit seeds; outputs use stable key order and fixed float
 * formatting so repeated runs are byte-identical.
 */
#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmls/experiment.hpp"
#include "mmls/geodesic.hpp"
#include "mmls/io.hpp"
#include "mmls/parallel.hpp"
#include "mmls/step1.hpp"
#include "mmls/step2.hpp"
#include "mmls/synthetic.hpp"

namespace mmls::cli {

namespace detail {

struct ManifoldOptions {
  std::string kind = "circle";
  double radius = 10.0;
  int sphere_dim = 2;
  double major = 2.0;
  double minor = 0.5;
  int embed_dim = 0;  // 0 -> native ambient dimension
  std::uint64_t embed_seed = 1;
  // poly_graph parameters
  int graph_dim = 1;
  int graph_codim = 1;
  int graph_degree = 2;
  std::vector<double> graph_coeffs;
  double graph_halfwidth = 1.0;
  double graph_reach = 0.25;

  ManifoldSpec build() const {
    ManifoldSpec spec = [&] {
      if (kind == "circle") return ManifoldSpec::circle(radius);
      if (kind == "sphere") return ManifoldSpec::sphere(sphere_dim, radius);
      if (kind == "torus") return ManifoldSpec::torus(major, minor);
      if (kind == "poly_graph") {
        const Index B = monomial_basis_size(graph_dim, graph_degree);
        if (static_cast<Index>(graph_coeffs.size()) !=
            B * static_cast<Index>(graph_codim)) {
          throw Error(ErrorCode::kInvalidArgument,
                      "poly_graph needs " + std::to_string(B * graph_codim) +
                          " coefficients (row-major out_dim x basis)");
        }
        MatrixXd coeffs(graph_codim, B);
        for (int r = 0; r < graph_codim; ++r) {
          for (Index c = 0; c < B; ++c) {
            coeffs(r, c) =
                graph_coeffs[static_cast<std::size_t>(r) * B + c];
          }
        }
        return ManifoldSpec::poly_graph(
            MultiPolynomial(graph_dim, graph_codim, graph_degree, coeffs),
            graph_halfwidth, graph_reach);
      }
      throw Error(ErrorCode::kInvalidArgument, "unknown manifold '" + kind + "'");
    }();
    if (embed_dim > 0) spec = spec.embedded(embed_dim, embed_seed);
    return spec;
  }

  void attach(CLI::App* cmd, const std::string& prefix = "") {
    cmd->add_option("--" + prefix + "manifold", kind,
                    "circle|sphere|torus|poly_graph");
    cmd->add_option("--" + prefix + "radius", radius, "circle/sphere radius");
    cmd->add_option("--" + prefix + "sphere-dim", sphere_dim,
                    "intrinsic dimension of the sphere");
    cmd->add_option("--" + prefix + "major", major, "torus major radius");
    cmd->add_option("--" + prefix + "minor", minor, "torus minor radius");
    cmd->add_option("--" + prefix + "embed-dim", embed_dim,
                    "embed into this ambient dimension (seeded rotation)");
    cmd->add_option("--" + prefix + "embed-seed", embed_seed,
                    "seed of the embedding rotation");
    cmd->add_option("--" + prefix + "graph-dim", graph_dim,
                    "poly_graph domain dimension");
    cmd->add_option("--" + prefix + "graph-codim", graph_codim,
                    "poly_graph codomain dimension");
    cmd->add_option("--" + prefix + "graph-degree", graph_degree,
                    "poly_graph polynomial degree");
    cmd->add_option("--" + prefix + "graph-coeffs", graph_coeffs,
                    "poly_graph coefficients, row-major");
    cmd->add_option("--" + prefix + "graph-halfwidth", graph_halfwidth,
                    "poly_graph domain half-width");
    cmd->add_option("--" + prefix + "graph-reach", graph_reach,
                    "poly_graph configured reach lower bound");
  }
};

struct EstimatorOptions {
  double sigma = 0.5;
  double tau = 10.0;
  int d = 1;
  int k = 2;
  double bandwidth_scale = 6.0;
  std::string bandwidth_mode = "rate_consistent";
  double eps_stop1 = 0.0;
  double eps_stop2 = 0.0;
  int max_iters1 = 100;
  int max_iters2 = 50;
  std::string iter_mode = "until_convergence";
  int kappa = 5;
  int mom_blocks = 1;
  std::string roi_policy = "recenter";
  std::string origin_update = "refit";
  std::string weighting = "indicator";

  void attach(CLI::App* cmd) {
    cmd->add_option("--sigma", sigma, "noise radius");
    cmd->add_option("--tau", tau, "reach estimate");
    cmd->add_option("--d", d, "intrinsic dimension");
    cmd->add_option("--k", k, "smoothness (polynomial degree k-1)");
    cmd->add_option("--bandwidth-scale", bandwidth_scale,
                    "bandwidth constant c");
    cmd->add_option("--bandwidth-mode", bandwidth_mode,
                    "rate_consistent|paper_literal");
    cmd->add_option("--eps-stop1", eps_stop1, "step-1 stop threshold");
    cmd->add_option("--eps-stop2", eps_stop2, "step-2 stop threshold");
    cmd->add_option("--max-iters1", max_iters1, "step-1 iteration cap");
    cmd->add_option("--max-iters2", max_iters2, "step-2 iteration cap");
    cmd->add_option("--iter-mode", iter_mode,
                    "until_convergence|fixed_kappa");
    cmd->add_option("--kappa", kappa, "iterations in fixed_kappa mode");
    cmd->add_option("--mom-blocks", mom_blocks,
                    "median-of-means blocks (1 = plain least squares)");
    cmd->add_option("--roi-policy", roi_policy, "recenter|anchored");
    cmd->add_option("--origin-update", origin_update, "refit|reuse");
    cmd->add_option("--pca-weighting", weighting, "indicator|gaussian");
  }

  Step1Config step1() const {
    Step1Config cfg;
    cfg.sigma = sigma;
    cfg.tau = tau;
    cfg.d = d;
    cfg.eps_stop = eps_stop1;
    cfg.max_iters = max_iters1;
    cfg.weighting = weighting == "gaussian" ? PcaWeighting::kGaussian
                                            : PcaWeighting::kIndicator;
    return cfg;
  }

  Step2Config step2() const {
    Step2Config cfg;
    cfg.sigma = sigma;
    cfg.tau = tau;
    cfg.k = k;
    cfg.bandwidth_scale = bandwidth_scale;
    cfg.bandwidth_mode = bandwidth_mode == "paper_literal"
                             ? BandwidthMode::kPaperLiteral
                             : BandwidthMode::kRateConsistent;
    cfg.eps_stop = eps_stop2;
    cfg.max_iters = max_iters2;
    cfg.iter_mode = iter_mode == "fixed_kappa" ? IterMode::kFixedKappa
                                               : IterMode::kUntilConvergence;
    cfg.fixed_kappa = kappa;
    cfg.mom_blocks = mom_blocks;
    cfg.roi_policy = roi_policy == "anchored" ? RoiPolicy::kAnchored
                                              : RoiPolicy::kRecenterEachIteration;
    cfg.origin_update = origin_update == "reuse"
                            ? OriginUpdate::kReuseOldFrameFit
                            : OriginUpdate::kRefitInNewFrame;
    return cfg;
  }
};

inline VectorXd parse_vector(const std::string& text) {
  std::vector<double> values;
  const char* cursor = text.c_str();
  while (true) {
    char* end = nullptr;
    const double v = std::strtod(cursor, &end);
    if (end == cursor) {
      throw Error(ErrorCode::kParseError, "bad vector literal '" + text + "'");
    }
    values.push_back(v);
    cursor = end;
    if (*cursor == ',') {
      ++cursor;
      continue;
    }
    if (*cursor == '\0') break;
    throw Error(ErrorCode::kParseError, "bad vector literal '" + text + "'");
  }
  VectorXd out(static_cast<Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    out(static_cast<Index>(i)) = values[i];
  }
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << text;
}

/// Flat key=value config with '#' comments.
inline std::map<std::string, std::string> parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParseError,
                  "config line " + std::to_string(line_no) + ": expected key=value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

inline ExperimentSpec spec_from_config(
    const std::map<std::string, std::string>& kv) {
  auto get = [&](const std::string& key,
                 const std::string& fallback) -> std::string {
    const auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
  };

  ManifoldOptions manifold;
  manifold.kind = get("manifold", "circle");
  manifold.radius = std::stod(get("radius", "10"));
  manifold.sphere_dim = std::stoi(get("sphere_dim", "2"));
  manifold.major = std::stod(get("major", "2"));
  manifold.minor = std::stod(get("minor", "0.5"));
  manifold.embed_dim = std::stoi(get("embed_dim", "0"));
  manifold.embed_seed =
      static_cast<std::uint64_t>(std::stoull(get("embed_seed", "1")));

  ExperimentSpec spec;
  spec.manifold = manifold.build();
  spec.sigma = std::stod(get("sigma", "0.5"));
  for (const auto& item : split_list(get("sample_sizes", "1024,4096"))) {
    spec.sample_sizes.push_back(static_cast<Index>(std::stoll(item)));
  }
  spec.trials_per_n = std::stoi(get("trials_per_n", "10"));
  spec.queries_per_trial = std::stoi(get("queries_per_trial", "1"));
  spec.seed = static_cast<std::uint64_t>(std::stoull(get("seed", "1")));
  spec.init_tilt = std::stod(get("init_tilt", "0"));
  spec.sampler = get("sampler", "rejection") == "normal_fiber"
                     ? TubularSampler::kNormalFiber
                     : TubularSampler::kRejection;

  EstimatorOptions est;
  est.sigma = spec.sigma;
  est.tau = spec.manifold.reach();
  est.d = spec.manifold.intrinsic_dim();
  est.k = std::stoi(get("k", "2"));
  est.bandwidth_scale = std::stod(get("bandwidth_scale", "6"));
  est.bandwidth_mode = get("bandwidth_mode", "rate_consistent");
  est.max_iters1 = std::stoi(get("max_iters1", "100"));
  est.max_iters2 = std::stoi(get("max_iters2", "50"));
  est.iter_mode = get("iter_mode", "until_convergence");
  est.kappa = std::stoi(get("kappa", "5"));
  est.mom_blocks = std::stoi(get("mom_blocks", "1"));
  est.roi_policy = get("roi_policy", "recenter");
  est.origin_update = get("origin_update", "refit");
  spec.step1 = est.step1();
  spec.step2 = est.step2();

  spec.metrics.clear();
  for (const auto& metric :
       split_list(get("metrics", "point_error,tangent_angle"))) {
    if (metric == "point_error") spec.metrics.insert(Metric::kPointError);
    else if (metric == "tangent_angle") spec.metrics.insert(Metric::kTangentAngle);
    else if (metric == "step1_angle") spec.metrics.insert(Metric::kStep1Angle);
    else if (metric == "contraction_ratio")
      spec.metrics.insert(Metric::kContractionRatio);
    else
      throw Error(ErrorCode::kParseError, "unknown metric '" + metric + "'");
  }
  return spec;
}

inline std::string rows_to_csv(const std::vector<QuantileRow>& rows,
                               const std::string& metric) {
  std::ostringstream out;
  out << "metric,n,count,failures,q25,median,q75\n";
  for (const auto& row : rows) {
    out << metric << ',' << row.n << ',' << row.count << ',' << row.failures
        << ',' << mmls::detail::format_double(row.q25) << ','
        << mmls::detail::format_double(row.median) << ','
        << mmls::detail::format_double(row.q75) << '\n';
  }
  return out.str();
}

inline ordered_json rows_to_json(const std::vector<QuantileRow>& rows) {
  ordered_json arr = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json j;
    j["n"] = row.n;
    j["count"] = row.count;
    j["failures"] = row.failures;
    j["q25"] = row.q25;
    j["median"] = row.median;
    j["q75"] = row.q75;
    arr.push_back(j);
  }
  return arr;
}

}  // namespace detail

/// Runs the CLI; argv follows main() conventions (argv[0] is the program).
inline int run(int argc, const char* const* argv) {
  CLI::App app{"Manifold estimation from noisy point samples"};
  app.require_subcommand(1);

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "generate a noisy sample of a manifold");
  detail::ManifoldOptions synth_manifold;
  synth_manifold.attach(synth);
  Index synth_n = 1000;
  double synth_sigma = 0.5;
  std::uint64_t synth_seed = 1;
  std::string synth_out, synth_feet, synth_format = "auto",
                         synth_sampler = "rejection";
  synth->add_option("--n", synth_n, "sample count")->required();
  synth->add_option("--sigma", synth_sigma, "noise radius")->required();
  synth->add_option("--seed", synth_seed, "sampling seed");
  synth->add_option("--out", synth_out, "output cloud path")->required();
  synth->add_option("--feet", synth_feet, "optional sidecar of true feet");
  synth->add_option("--format", synth_format, "csv|raw|auto (by extension)");
  synth->add_option("--sampler", synth_sampler, "rejection|normal_fiber");

  // ---- project ----
  auto* project_cmd =
      app.add_subcommand("project", "project query points onto the estimate");
  std::string project_cloud;
  std::vector<std::string> project_queries;
  std::string project_queries_file, project_out, project_format = "auto";
  bool dump_poly = false;
  detail::EstimatorOptions project_est;
  project_cmd->add_option("--cloud", project_cloud, "input cloud")->required();
  project_cmd->add_option("--query", project_queries,
                          "query point 'x1,x2,...' (repeatable)");
  project_cmd->add_option("--queries-file", project_queries_file,
                          "CSV of query points");
  project_cmd->add_option("--out", project_out, "write JSON here (default stdout)");
  project_cmd->add_option("--format", project_format, "csv|raw|auto");
  project_cmd->add_flag("--dump-poly", dump_poly,
                        "include the final local polynomial in the output");
  project_est.attach(project_cmd);
  detail::ManifoldOptions project_truth;
  bool project_has_truth = false;
  project_cmd->add_flag("--with-truth", project_has_truth,
                        "evaluate errors against a ground-truth manifold");
  project_truth.attach(project_cmd, "truth-");

  // ---- denoise ----
  auto* denoise = app.add_subcommand("denoise", "project every sample onto the estimate");
  std::string denoise_cloud, denoise_out, denoise_format = "auto";
  detail::EstimatorOptions denoise_est;
  denoise->add_option("--cloud", denoise_cloud, "input cloud")->required();
  denoise->add_option("--out", denoise_out, "output cloud")->required();
  denoise->add_option("--format", denoise_format, "csv|raw|auto");
  denoise_est.attach(denoise);

  // ---- geodesic ----
  auto* geo = app.add_subcommand("geodesic", "trace an approximate geodesic walk");
  std::string geo_cloud, geo_start, geo_dir, geo_out, geo_frames_dir,
      geo_format = "auto";
  double geo_step = 1.0;
  int geo_steps = 30;
  bool geo_warm = false;
  detail::EstimatorOptions geo_est;
  geo->add_option("--cloud", geo_cloud, "input cloud")->required();
  geo->add_option("--start", geo_start, "start point 'x1,x2,...'")->required();
  geo->add_option("--dir", geo_dir, "initial direction 'v1,v2,...'")->required();
  geo->add_option("--step", geo_step, "ambient step length");
  geo->add_option("--steps", geo_steps, "number of steps");
  geo->add_option("--out", geo_out, "trajectory CSV")->required();
  geo->add_option("--frames-dir", geo_frames_dir,
                  "emit one per-step frame CSV into this directory");
  geo->add_flag("--warm-start", geo_warm, "reuse the previous tangent as init");
  geo->add_option("--format", geo_format, "csv|raw|auto");
  geo_est.attach(geo);

  // ---- rate ----
  auto* rate = app.add_subcommand("rate", "run a convergence-rate experiment");
  std::string rate_config, rate_prefix;
  rate->add_option("--config", rate_config, "key=value experiment config")
      ->required();
  rate->add_option("--out-prefix", rate_prefix,
                   "override the config's out_prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  auto resolve_format = [](const std::string& name, const std::string& path) {
    if (name == "csv") return CloudFormat::kCsv;
    if (name == "raw") return CloudFormat::kRawF64;
    return format_from_path(path);
  };

  try {
    if (synth->parsed()) {
      const ManifoldSpec manifold = synth_manifold.build();
      const NoisySample sample = sample_tubular(
          manifold, synth_n, synth_sigma, synth_seed,
          synth_sampler == "normal_fiber" ? TubularSampler::kNormalFiber
                                          : TubularSampler::kRejection);
      save_matrix(synth_out, sample.points, resolve_format(synth_format, synth_out));
      if (!synth_feet.empty()) {
        save_matrix(synth_feet, sample.feet,
                    resolve_format(synth_format, synth_feet));
      }
      return 0;
    }

    if (project_cmd->parsed()) {
      const PointCloud cloud = load_cloud(
          project_cloud, resolve_format(project_format, project_cloud));
      std::vector<VectorXd> queries;
      for (const auto& text : project_queries) {
        queries.push_back(detail::parse_vector(text));
      }
      if (!project_queries_file.empty()) {
        const MatrixXd qm = load_matrix(project_queries_file, CloudFormat::kCsv);
        for (Index i = 0; i < qm.rows(); ++i) {
          queries.push_back(qm.row(i).transpose());
        }
      }
      if (queries.empty()) {
        std::cerr << "project: no queries given\n";
        return 1;
      }
      std::optional<ManifoldSpec> truth;
      if (project_has_truth) truth = project_truth.build();

      const Step1Config cfg1 = project_est.step1();
      const Step2Config cfg2 = project_est.step2();
      ordered_json results = ordered_json::array();
      int estimator_failures = 0;
      for (const auto& query : queries) {
        ordered_json record;
        record["query"] = std::vector<double>(query.data(),
                                              query.data() + query.size());
        try {
          const EstimateResult est = project(cloud, query, cfg1, cfg2);
          record["result"] = to_json(est);
          if (!est.failure.empty()) ++estimator_failures;
          if (truth) {
            const auto foot = truth->analytic_project(est.p_hat);
            record["truth"] = ordered_json{
                {"point_error", foot.distance},
                {"tangent_angle", max_angle(est.tangent_hat, foot.tangent)}};
            ordered_json iter_angles = ordered_json::array();
            for (const auto& rec : est.trace.records) {
              iter_angles.push_back(
                  tilt_angle(*truth, rec.origin, Subspace(rec.tangent_basis)));
            }
            record["truth"]["iteration_angles"] = iter_angles;
          }
          if (dump_poly) {
            const auto base = cloud.radius_query(
                est.p_hat, std::sqrt(cfg2.sigma * cfg2.tau));
            if (!base.empty()) {
              const Frame frame(est.p_hat, est.tangent_hat);
              const FrameFit final_fit = fit_in_frame(cloud, frame, base, cfg2);
              record["final_poly"] = to_json(final_fit.poly);
            }
          }
        } catch (const Error& e) {
          if (!e.is_estimator_failure()) throw;
          record["error"] = std::string(error_code_name(e.code()));
          ++estimator_failures;
        }
        results.push_back(record);
      }
      const std::string text = results.dump(2) + "\n";
      if (project_out.empty()) {
        std::cout << text;
      } else {
        detail::write_text(project_out, text);
      }
      return estimator_failures == static_cast<int>(queries.size()) &&
                     estimator_failures > 0
                 ? 3
                 : 0;
    }

    if (denoise->parsed()) {
      const CloudFormat fmt = resolve_format(denoise_format, denoise_cloud);
      const PointCloud cloud = load_cloud(denoise_cloud, fmt);
      const Step1Config cfg1 = denoise_est.step1();
      const Step2Config cfg2 = denoise_est.step2();
      MatrixXd denoised = cloud.points();
      std::vector<int> failed(static_cast<std::size_t>(cloud.size()), 0);
      parallel_for(cloud.size(), [&](std::int64_t i) {
        try {
          const EstimateResult est =
              project(cloud, cloud.point(i), cfg1, cfg2);
          if (est.failure.empty()) {
            denoised.row(i) = est.p_hat.transpose();
          } else {
            failed[static_cast<std::size_t>(i)] = 1;
          }
        } catch (const Error& e) {
          if (!e.is_estimator_failure()) throw;
          failed[static_cast<std::size_t>(i)] = 1;
        }
      });
      long failures = 0;
      for (int f : failed) failures += f;
      save_matrix(denoise_out, denoised,
                  resolve_format(denoise_format, denoise_out));
      if (failures > 0) {
        std::cerr << "denoise: " << failures << "/" << cloud.size()
                  << " points kept as-is after estimator failures\n";
      }
      return failures == cloud.size() ? 3 : 0;
    }

    if (geo->parsed()) {
      const PointCloud cloud =
          load_cloud(geo_cloud, resolve_format(geo_format, geo_cloud));
      WalkConfig cfg;
      cfg.step = geo_step;
      cfg.n_steps = geo_steps;
      cfg.step1 = geo_est.step1();
      cfg.step2 = geo_est.step2();
      cfg.warm_start = geo_warm;
      const Trajectory trajectory =
          geodesic_walk(cloud, detail::parse_vector(geo_start),
                        detail::parse_vector(geo_dir), cfg);
      save_trajectory_csv(geo_out, trajectory);
      if (!geo_frames_dir.empty()) {
        for (Index i = 0; i < trajectory.length(); ++i) {
          std::ostringstream name;
          name << geo_frames_dir << "/step_" << i << ".csv";
          std::ostringstream body;
          body << "kind";
          for (Index j = 0; j < cloud.dim(); ++j) body << ",c" << j;
          body << "\npoint";
          for (Index j = 0; j < cloud.dim(); ++j) {
            body << ',' << mmls::detail::format_double(trajectory.points(i, j));
          }
          body << "\ndirection";
          for (Index j = 0; j < cloud.dim(); ++j) {
            body << ','
                 << mmls::detail::format_double(trajectory.directions(i, j));
          }
          body << '\n';
          detail::write_text(name.str(), body.str());
        }
      }
      if (trajectory.truncated) {
        std::cerr << "geodesic: truncated at step " << trajectory.failed_step
                  << ": " << trajectory.failure << "\n";
      }
      return 0;
    }

    if (rate->parsed()) {
      std::map<std::string, std::string> kv;
      try {
        kv = detail::parse_config(rate_config);
      } catch (const Error& e) {
        // A missing or malformed config is a usage problem for this command.
        std::cerr << "rate: " << e.what() << "\n"
                  << "usage: rate --config <key=value file>\n";
        return 1;
      }
      const ExperimentSpec spec = detail::spec_from_config(kv);
      std::string prefix = rate_prefix;
      if (prefix.empty()) {
        const auto it = kv.find("out_prefix");
        prefix = it == kv.end() ? "rate_out" : it->second;
      }

      const bool wants_rates = spec.metrics.count(Metric::kPointError) ||
                               spec.metrics.count(Metric::kTangentAngle) ||
                               spec.metrics.count(Metric::kStep1Angle);
      ordered_json report_json;
      report_json["config"] = ordered_json::object();
      for (const auto& [key, value] : kv) report_json["config"][key] = value;

      if (wants_rates) {
        const RateReport report = run_convergence_experiment(spec);
        report_json["r0_theoretical"] = report.r0_theoretical;
        report_json["r1_theoretical"] = report.r1_theoretical;
        report_json["point_error"] = detail::rows_to_json(report.point_error);
        report_json["tangent_angle"] =
            detail::rows_to_json(report.tangent_angle);
        if (spec.metrics.count(Metric::kStep1Angle)) {
          report_json["step1_angle"] = detail::rows_to_json(report.step1_angle);
          report_json["step1_slope"] = report.step1_slope;
        }
        report_json["point_slope"] = report.point_slope;
        report_json["tangent_slope"] = report.tangent_slope;

        std::ostringstream table;
        table << detail::rows_to_csv(report.point_error, "point_error");
        std::string tangent_csv =
            detail::rows_to_csv(report.tangent_angle, "tangent_angle");
        table << tangent_csv.substr(tangent_csv.find('\n') + 1);
        detail::write_text(prefix + "_table.csv", table.str());

        std::ostringstream trials;
        trials << "n,trial,query,point_error,tangent_angle,step1_angle,failed,"
                  "failure\n";
        for (const auto& rec : report.raw) {
          trials << rec.n << ',' << rec.trial << ',' << rec.query << ','
                 << mmls::detail::format_double(rec.point_error) << ','
                 << mmls::detail::format_double(rec.tangent_angle) << ','
                 << mmls::detail::format_double(rec.step1_angle) << ','
                 << (rec.failed ? 1 : 0) << ',' << rec.failure << '\n';
        }
        detail::write_text(prefix + "_trials.csv", trials.str());
      }

      if (spec.metrics.count(Metric::kContractionRatio)) {
        const ContractionReport contraction = run_contraction_experiment(spec);
        ordered_json rows = ordered_json::array();
        std::ostringstream csv;
        csv << "iteration,median_ratio,count,masked\n";
        for (const auto& row : contraction.rows) {
          ordered_json j;
          j["iteration"] = row.iteration;
          j["median_ratio"] = row.median_ratio;
          j["count"] = row.count;
          j["masked"] = row.masked;
          rows.push_back(j);
          csv << row.iteration << ','
              << mmls::detail::format_double(row.median_ratio) << ','
              << row.count << ',' << (row.masked ? 1 : 0) << '\n';
        }
        report_json["contraction"] = rows;
        report_json["terminal_angle_median"] =
            contraction.terminal_angle_median;
        detail::write_text(prefix + "_contraction.csv", csv.str());
      }

      detail::write_text(prefix + "_report.json", report_json.dump(2) + "\n");
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << argv[0] << ": " << e.what() << "\n";
    return e.is_estimator_failure() ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << argv[0] << ": " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace mmls::cli
