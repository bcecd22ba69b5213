#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sgcp {

using Point = Eigen::VectorXd;
/// One point per row.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned observation window. Bounds are closed.
class Domain {
public:
  explicit Domain(std::vector<std::pair<double, double>> bounds);

  int dim() const { return static_cast<int>(bounds_.size()); }
  double lower(int i) const { return bounds_[static_cast<std::size_t>(i)].first; }
  double upper(int i) const { return bounds_[static_cast<std::size_t>(i)].second; }
  double side(int i) const { return upper(i) - lower(i); }
  const std::vector<std::pair<double, double>> &bounds() const { return bounds_; }

  double volume() const;
  bool contains(const Eigen::Ref<const Eigen::VectorXd> &x) const;

private:
  std::vector<std::pair<double, double>> bounds_;
};

double domain_volume(const Domain &domain);

/// Unmarked events observed inside a Domain.
class PointPattern {
public:
  PointPattern(PointMatrix points, const Domain &domain);
  /// Empty pattern in `dim` dimensions.
  explicit PointPattern(int dim) : points_(0, dim) {}

  int size() const { return static_cast<int>(points_.rows()); }
  int dim() const { return static_cast<int>(points_.cols()); }
  bool empty() const { return points_.rows() == 0; }
  const PointMatrix &points() const { return points_; }
  auto point(int i) const { return points_.row(i); }

private:
  PointMatrix points_;
};

PointPattern load_point_pattern(const std::filesystem::path &path, const Domain &domain);

/// Writes one event per row with 17 significant digits, so that loading
/// the file reproduces the coordinates exactly.
void save_point_pattern(const std::filesystem::path &path, const PointPattern &pattern);

} // namespace sgcp
