#include "seqgc/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include <Eigen/LU>

namespace seqgc {

std::optional<Homography> Homography::from_matrix(const Eigen::Matrix3d& m) {
  if (!m.allFinite()) return std::nullopt;
  const double frob = m.norm();
  if (frob == 0.0) return std::nullopt;

  Eigen::Matrix3d normalized;
  if (std::abs(m(2, 2)) > 1e-12 * frob) {
    normalized = m / m(2, 2);
  } else {
    normalized = m / frob;
  }
  if (std::abs(normalized.determinant()) <= 1e-12) return std::nullopt;

  Eigen::Matrix3d inv = normalized.inverse();
  if (!inv.allFinite()) return std::nullopt;
  return Homography(normalized, inv);
}

Homography Homography::identity() {
  return Homography(Eigen::Matrix3d::Identity(), Eigen::Matrix3d::Identity());
}

Plane Plane::canonical(const Eigen::Vector3d& normal, double offset) {
  const double len = normal.norm();
  if (!(len > 0.0) || !std::isfinite(len)) {
    throw std::domain_error("plane normal must be finite and nonzero");
  }
  Eigen::Vector3d n = normal / len;
  double d = offset / len;

  bool flip = d < 0.0;
  if (d == 0.0) {
    for (int i = 0; i < 3; ++i) {
      if (n[i] != 0.0) {
        flip = n[i] < 0.0;
        break;
      }
    }
  }
  if (flip) {
    n = -n;
    d = -d;
  }
  // Avoid a signed zero offset leaking into serialized output.
  if (d == 0.0) d = 0.0;
  return Plane{n, d};
}

Eigen::Vector3d spherical_normal(double azimuth, double elevation) {
  const double ce = std::cos(elevation);
  return {ce * std::cos(azimuth), ce * std::sin(azimuth), std::sin(elevation)};
}

SphericalPlane plane_to_spherical(const Plane& plane) {
  const Eigen::Vector3d& n = plane.normal;
  if (std::abs(n.z()) > 1.0 + 1e-9) {
    throw std::domain_error("plane normal z component exceeds unit length");
  }
  const double nz = std::clamp(n.z(), -1.0, 1.0);
  // atan2(0, 0) == 0 fixes the azimuth at the poles.
  const double azimuth = (n.x() == 0.0 && n.y() == 0.0) ? 0.0 : std::atan2(n.y(), n.x());
  return {azimuth, std::asin(nz), plane.offset};
}

Plane spherical_to_plane(const SphericalPlane& s) {
  return Plane{spherical_normal(s.azimuth, s.elevation), s.offset};
}

std::size_t Labeling::inlier_count() const {
  return static_cast<std::size_t>(
      std::count(assignment.begin(), assignment.end(), Label::inlier));
}

SegmentationPrior SegmentationPrior::from_labels(std::vector<std::optional<int>> labels) {
  std::set<int> distinct;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) continue;
    if (*labels[i] < 0) {
      throw std::invalid_argument("negative instance id at point " + std::to_string(i));
    }
    distinct.insert(*labels[i]);
  }
  const int k = static_cast<int>(distinct.size());
  if (!distinct.empty() && *distinct.rbegin() >= k) {
    throw std::invalid_argument("instance ids must be dense in [0, K); found id " +
                                std::to_string(*distinct.rbegin()) + " with K=" +
                                std::to_string(k));
  }
  SegmentationPrior prior;
  prior.labels_ = std::move(labels);
  prior.instance_count_ = k;
  return prior;
}

SegmentationPrior prior_from_points(const std::vector<MapPoint>& points) {
  std::vector<std::optional<int>> labels;
  labels.reserve(points.size());
  for (const auto& p : points) labels.push_back(p.prior_label);
  return SegmentationPrior::from_labels(std::move(labels));
}

SegmentationPrior prior_from_points(const std::vector<Correspondence>& matches) {
  std::vector<std::optional<int>> labels;
  labels.reserve(matches.size());
  for (const auto& c : matches) labels.push_back(c.prior_label);
  return SegmentationPrior::from_labels(std::move(labels));
}

}  // namespace seqgc
