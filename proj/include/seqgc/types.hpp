#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace seqgc {

/// A matched feature pair between a reference and a current image, in pixels.
struct Correspondence {
  Eigen::Vector2d ref_point = Eigen::Vector2d::Zero();
  Eigen::Vector2d cur_point = Eigen::Vector2d::Zero();
  std::optional<int> prior_label;
  std::size_t id = 0;
};

/// A 3-D landmark in map units.
struct MapPoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::optional<int> prior_label;
  std::size_t id = 0;
};

/// Planar homography mapping reference pixels to current pixels.
///
/// The matrix is stored normalized: bottom-right entry 1 when it is
/// non-negligible, unit Frobenius norm otherwise. Construction fails for
/// singular matrices, so every instance is invertible.
class Homography {
 public:
  static std::optional<Homography> from_matrix(const Eigen::Matrix3d& m);
  static Homography identity();

  const Eigen::Matrix3d& matrix() const { return matrix_; }
  const Eigen::Matrix3d& inverse() const { return inverse_; }

 private:
  Homography(const Eigen::Matrix3d& m, const Eigen::Matrix3d& inv)
      : matrix_(m), inverse_(inv) {}

  Eigen::Matrix3d matrix_;
  Eigen::Matrix3d inverse_;
};

/// Plane n·v + d = 0 with unit normal.
struct Plane {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = 0.0;

  /// Normalizes n and picks the representative with d >= 0 (or, when d == 0,
  /// the one whose first nonzero normal component is positive).
  static Plane canonical(const Eigen::Vector3d& normal, double offset);

  double signed_distance(const Eigen::Vector3d& v) const {
    return (normal.dot(v) + offset) / normal.norm();
  }
};

/// Minimal plane parameterization: azimuth, elevation and offset.
struct SphericalPlane {
  double azimuth = 0.0;    // (-pi, pi]
  double elevation = 0.0;  // [-pi/2, pi/2]
  double offset = 0.0;
};

SphericalPlane plane_to_spherical(const Plane& plane);
Plane spherical_to_plane(const SphericalPlane& s);

/// Unit normal (cos e cos a, cos e sin a, sin e).
Eigen::Vector3d spherical_normal(double azimuth, double elevation);

enum class Label : std::uint8_t { outlier = 0, inlier = 1 };

struct Labeling {
  std::vector<Label> assignment;
  std::size_t model_id = 0;

  std::size_t inlier_count() const;
};

/// Per-point instance ids from an external segmenter.
class SegmentationPrior {
 public:
  SegmentationPrior() = default;

  /// Validates that ids are dense in [0, K); K is inferred.
  static SegmentationPrior from_labels(std::vector<std::optional<int>> labels);

  std::size_t size() const { return labels_.size(); }
  int instance_count() const { return instance_count_; }
  const std::optional<int>& label(std::size_t i) const { return labels_[i]; }
  const std::vector<std::optional<int>>& labels() const { return labels_; }

 private:
  std::vector<std::optional<int>> labels_;
  int instance_count_ = 0;
};

/// Collects the per-point prior labels of a point set.
SegmentationPrior prior_from_points(const std::vector<MapPoint>& points);
SegmentationPrior prior_from_points(const std::vector<Correspondence>& matches);

}  // namespace seqgc
