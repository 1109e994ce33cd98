#include "geosink/pointcloud.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace geosink {

namespace {

bool parse_double(const std::string& token, double& out) {
  const char* begin = token.c_str();
  char* end = nullptr;
  errno = 0;
  out = std::strtod(begin, &end);
  if (end == begin || errno == ERANGE) return false;
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  return *end == '\0';
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      tokens.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  tokens.push_back(cur);
  return tokens;
}

std::vector<std::vector<double>> load_csv_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open '" + path + "'");

  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto tokens = split_csv_line(line);
    std::vector<double> row;
    row.reserve(tokens.size());
    bool ok = true;
    for (const auto& tok : tokens) {
      double x;
      if (!parse_double(tok, x)) {
        ok = false;
        break;
      }
      row.push_back(x);
    }
    if (!ok) {
      // A single non-numeric leading line is a header; anything later is bad data.
      if (first) {
        first = false;
        continue;
      }
      fail(errc::io_error, "non-numeric value at " + path + ":" + std::to_string(lineno));
    }
    first = false;
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(errc::io_error, "no data rows in '" + path + "'");
  return rows;
}

}  // namespace

PointCloud load_point_csv(const std::string& path) {
  const auto rows = load_csv_rows(path);
  const std::size_t d = rows.front().size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == d, errc::dimension_mismatch,
            "ragged CSV row " + std::to_string(i + 1) + " in '" + path + "'");
  }
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return PointCloud(std::move(pts));
}

void save_point_csv(const PointCloud& cloud, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(errc::io_error, "cannot write '" + path + "'");
  out.precision(17);
  for (Eigen::Index i = 0; i < cloud.points.rows(); ++i) {
    for (Eigen::Index j = 0; j < cloud.points.cols(); ++j) {
      if (j) out << ',';
      out << cloud.points(i, j);
    }
    out << '\n';
  }
  if (!out) fail(errc::io_error, "write failed for '" + path + "'");
}

std::vector<int> load_label_csv(const std::string& path) {
  const auto rows = load_csv_rows(path);
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (const auto& row : rows) {
    require(row.size() == 1, errc::dimension_mismatch, "label CSV must have one column");
    labels.push_back(static_cast<int>(row[0]));
  }
  return labels;
}

Eigen::VectorXd load_weight_csv(const std::string& path) {
  const auto rows = load_csv_rows(path);
  Eigen::VectorXd w(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == 1, errc::dimension_mismatch, "weight CSV must have one column");
    w(static_cast<Eigen::Index>(i)) = rows[i][0];
  }
  return w;
}

}  // namespace geosink
