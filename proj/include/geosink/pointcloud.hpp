#pragma once

#include <Eigen/Core>
#include <string>

#include "geosink/errors.hpp"

namespace geosink {

// A set of n observations in R^d, one per row.
struct PointCloud {
  Eigen::MatrixXd points;

  PointCloud() = default;
  explicit PointCloud(Eigen::MatrixXd pts) : points(std::move(pts)) { validate(); }

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }

  void validate() const {
    require(points.rows() >= 1 && points.cols() >= 1, errc::dimension_mismatch,
            "point cloud must be non-empty");
    require(points.allFinite(), errc::dimension_mismatch, "point cloud has non-finite entries");
  }
};

// Comma-delimited, one point per row. A single leading header line is
// skipped when its first token does not parse as a number.
PointCloud load_point_csv(const std::string& path);

void save_point_csv(const PointCloud& cloud, const std::string& path);

// Integer label per row, from a one-column CSV (same header rule).
std::vector<int> load_label_csv(const std::string& path);

// One weight per vertex, single column.
Eigen::VectorXd load_weight_csv(const std::string& path);

}  // namespace geosink
