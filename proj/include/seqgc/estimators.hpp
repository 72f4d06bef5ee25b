#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "seqgc/types.hpp"

namespace seqgc {

inline constexpr std::size_t kHomographySampleSize = 4;
inline constexpr std::size_t kPlaneSampleSize = 3;

/// Symmetric transfer error in pixels: sqrt(|cur - H ref|^2 + |ref - H^-1 cur|^2).
/// Infinite when either transfer lands on the line at infinity.
double ste(const Homography& h, const Correspondence& c);

/// |n.v + d| / |n|.
double point_plane_distance(const Plane& plane, const MapPoint& v);
double point_plane_distance(const Plane& plane, const Eigen::Vector3d& v);

/// Normalized DLT on exactly four correspondences. nullopt when three of the
/// reference or of the current points are (nearly) colinear, or the solution
/// is singular.
std::optional<Homography> fit_homography_minimal(std::span<const Correspondence> sample);

/// Normalized DLT over all inliers. nullopt on a degenerate set, in which case
/// callers keep their previous model.
std::optional<Homography> fit_homography_lsq(std::span<const Correspondence> inliers);

/// Plane through three points; nullopt when they are colinear.
std::optional<Plane> fit_plane_minimal(std::span<const Eigen::Vector3d> sample);
std::optional<Plane> fit_plane_minimal(std::span<const MapPoint> sample);

/// Total least squares plane; nullopt when fewer than three points or the
/// points are colinear.
std::optional<Plane> fit_plane_lsq(std::span<const Eigen::Vector3d> inliers);
std::optional<Plane> fit_plane_lsq(std::span<const MapPoint> inliers);

/// Mean distance of the points closer than `threshold`. +inf when fewer than
/// `min_support` points qualify (and always when none do).
double model_residual(std::span<const double> distances, double threshold,
                      std::size_t min_support = 1);
double model_residual(const Plane& plane, std::span<const MapPoint> points, double threshold,
                      std::size_t min_support = 1);
double model_residual(const Homography& h, std::span<const Correspondence> points,
                      double threshold, std::size_t min_support = 1);

}  // namespace seqgc
