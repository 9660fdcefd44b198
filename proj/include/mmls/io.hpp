/**
 * @file io.hpp
 * @brief Point-cloud file formats, trajectory CSV, and JSON serialization.
 *
 * CSV clouds: one point per line, comma-separated decimal values.
 * raw_f64 clouds: little-endian header of two uint64 (n, D) followed by
 * n*D float64 values row-major; round-trips bit-exactly.
 */
#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmls/errors.hpp"
#include "mmls/geodesic.hpp"
#include "mmls/point_cloud.hpp"
#include "mmls/polynomial.hpp"
#include "mmls/step2.hpp"

namespace mmls {

using ordered_json = nlohmann::ordered_json;

enum class CloudFormat { kCsv, kRawF64 };

/// Picks the format from the file extension: ".f64"/".raw" binary, else CSV.
inline CloudFormat format_from_path(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot != std::string::npos) {
    const std::string ext = path.substr(dot);
    if (ext == ".f64" || ext == ".raw") return CloudFormat::kRawF64;
  }
  return CloudFormat::kCsv;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline MatrixXd load_matrix(const std::string& path, CloudFormat format) {
  if (format == CloudFormat::kCsv) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    long line_no = 0;
    Index width = -1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::vector<double> row;
      const char* cursor = line.c_str();
      while (true) {
        char* end = nullptr;
        const double value = std::strtod(cursor, &end);
        if (end == cursor) {
          throw Error(ErrorCode::kParseError,
                      "line " + std::to_string(line_no) + ": bad number near '" +
                          std::string(cursor).substr(0, 16) + "'");
        }
        row.push_back(value);
        cursor = end;
        while (*cursor == ' ' || *cursor == '\t') ++cursor;
        if (*cursor == ',') {
          ++cursor;
          continue;
        }
        if (*cursor == '\0' || *cursor == '\r') break;
        throw Error(ErrorCode::kParseError,
                    "line " + std::to_string(line_no) +
                        ": unexpected character '" + *cursor + "'");
      }
      if (width < 0) {
        width = static_cast<Index>(row.size());
      } else if (static_cast<Index>(row.size()) != width) {
        throw Error(ErrorCode::kInconsistentWidth,
                    "line " + std::to_string(line_no) + " has " +
                        std::to_string(row.size()) + " values, expected " +
                        std::to_string(width));
      }
      rows.push_back(std::move(row));
    }
    if (rows.empty()) {
      throw Error(ErrorCode::kEmptyInput, path + " holds no points");
    }
    MatrixXd points(static_cast<Index>(rows.size()), width);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (Index j = 0; j < width; ++j) {
        points(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
      }
    }
    return points;
  }

  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::uint64_t header[2];
  if (!in.read(reinterpret_cast<char*>(header), sizeof(header))) {
    throw Error(ErrorCode::kParseError, path + ": truncated raw_f64 header");
  }
  const std::uint64_t n = header[0];
  const std::uint64_t dim = header[1];
  if (n == 0 || dim == 0) {
    throw Error(ErrorCode::kEmptyInput, path + " declares an empty cloud");
  }
  MatrixXd points(static_cast<Index>(n), static_cast<Index>(dim));
  std::vector<double> buffer(dim);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (!in.read(reinterpret_cast<char*>(buffer.data()),
                 static_cast<std::streamsize>(dim * sizeof(double)))) {
      throw Error(ErrorCode::kParseError,
                  path + ": truncated raw_f64 payload at row " +
                      std::to_string(i));
    }
    for (std::uint64_t j = 0; j < dim; ++j) {
      points(static_cast<Index>(i), static_cast<Index>(j)) =
          buffer[static_cast<std::size_t>(j)];
    }
  }
  return points;
}

inline PointCloud load_cloud(const std::string& path, CloudFormat format) {
  return PointCloud::build(load_matrix(path, format));
}

inline void save_matrix(const std::string& path, const MatrixXd& points,
                        CloudFormat format) {
  if (format == CloudFormat::kCsv) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
    for (Index i = 0; i < points.rows(); ++i) {
      for (Index j = 0; j < points.cols(); ++j) {
        if (j) out << ',';
        out << detail::format_double(points(i, j));
      }
      out << '\n';
    }
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  const std::uint64_t header[2] = {static_cast<std::uint64_t>(points.rows()),
                                   static_cast<std::uint64_t>(points.cols())};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  std::vector<double> buffer(static_cast<std::size_t>(points.cols()));
  for (Index i = 0; i < points.rows(); ++i) {
    for (Index j = 0; j < points.cols(); ++j) {
      buffer[static_cast<std::size_t>(j)] = points(i, j);
    }
    out.write(reinterpret_cast<const char*>(buffer.data()),
              static_cast<std::streamsize>(buffer.size() * sizeof(double)));
  }
}

/// Step index, point coordinates, direction coordinates; one row per step.
inline void save_trajectory_csv(const std::string& path,
                                const Trajectory& trajectory) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << "step";
  for (Index j = 0; j < trajectory.points.cols(); ++j) out << ",x" << j;
  for (Index j = 0; j < trajectory.directions.cols(); ++j) out << ",v" << j;
  out << '\n';
  for (Index i = 0; i < trajectory.length(); ++i) {
    out << i;
    for (Index j = 0; j < trajectory.points.cols(); ++j) {
      out << ',' << detail::format_double(trajectory.points(i, j));
    }
    for (Index j = 0; j < trajectory.directions.cols(); ++j) {
      out << ',' << detail::format_double(trajectory.directions(i, j));
    }
    out << '\n';
  }
}

inline ordered_json to_json(const MultiPolynomial& poly) {
  ordered_json j;
  j["intrinsic_dim"] = poly.intrinsic_dim();
  j["out_dim"] = poly.out_dim();
  j["degree"] = poly.degree();
  std::vector<double> coeffs;
  coeffs.reserve(static_cast<std::size_t>(poly.coeffs().size()));
  for (Index r = 0; r < poly.coeffs().rows(); ++r) {
    for (Index c = 0; c < poly.coeffs().cols(); ++c) {
      coeffs.push_back(poly.coeffs()(r, c));
    }
  }
  j["coeffs_row_major"] = coeffs;
  return j;
}

inline ordered_json to_json(const EstimateResult& result) {
  ordered_json j;
  j["p_hat"] = std::vector<double>(result.p_hat.data(),
                                   result.p_hat.data() + result.p_hat.size());
  std::vector<std::vector<double>> basis;
  const MatrixXd& b = result.tangent_hat.basis();
  for (Index c = 0; c < b.cols(); ++c) {
    basis.emplace_back(b.col(c).data(), b.col(c).data() + b.rows());
  }
  j["tangent_basis_columns"] = basis;
  j["converged"] = result.converged;
  j["iterations"] = result.trace.records.size();
  if (!result.failure.empty()) j["failure"] = result.failure;
  std::vector<double> displacements;
  std::vector<std::int64_t> roi_sizes;
  for (const auto& rec : result.trace.records) {
    displacements.push_back(rec.displacement);
    roi_sizes.push_back(static_cast<std::int64_t>(rec.roi_size));
  }
  j["displacements"] = displacements;
  j["window_sizes"] = roi_sizes;
  return j;
}

}  // namespace mmls
