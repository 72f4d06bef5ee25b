#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <ostream>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "seqgc/config.hpp"
#include "seqgc/types.hpp"

namespace seqgc {

/// World-to-camera rigid motion: x_cam = rotation * x_world + translation.
struct Pose {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d transform(const Eigen::Vector3d& x) const { return rotation * x + translation; }
};

/// exp(xi) * pose, xi = (rho, omega) in the tangent space of rigid motions.
Pose retract(const Pose& pose, const Eigen::Matrix<double, 6, 1>& xi);

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
};

struct Observation {
  std::size_t camera = 0;
  std::size_t point = 0;
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
};

struct Association {
  std::size_t point = 0;
  std::size_t plane = 0;
};

struct Bundle {
  std::vector<Pose> cameras;
  Intrinsics intrinsics;
  std::vector<Eigen::Vector3d> points;
  std::vector<Plane> planes;
  std::vector<Observation> observations;
  std::vector<Association> associations;
};

/// Throws std::invalid_argument on dangling observation/association indices.
void check_consistency(const Bundle& b);

struct ReprojectionTerm {
  Eigen::Vector2d residual;                 // observed - projected
  Eigen::Matrix<double, 2, 6> d_pose;       // w.r.t. the left tangent perturbation
  Eigen::Matrix<double, 2, 3> d_point;
  bool valid = true;                        // false behind the camera
};

ReprojectionTerm reprojection_term(const Pose& pose, const Intrinsics& k,
                                   const Eigen::Vector3d& point, const Eigen::Vector2d& observed);

struct PlaneTerm {
  double residual = 0.0;                    // signed distance n(az, el).v + d
  Eigen::RowVector3d d_plane;               // w.r.t. (azimuth, elevation, offset)
  Eigen::RowVector3d d_point;
};

PlaneTerm plane_term(const SphericalPlane& plane, const Eigen::Vector3d& point);

struct RefineOptions {
  int max_iterations = 50;
  std::size_t fixed_cameras = 1;  // leading cameras held fixed for the gauge
  bool fix_structure = false;     // optimize cameras only
  double reprojection_huber = 2.0;
  double plane_huber = 0.02;
  double plane_weight = 1.0;
};

RefineOptions refine_options_from(const FitConfig& cfg);

struct RefineReport {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::vector<double> cost_history;  // cost after every accepted step, starting with the initial
  int iterations = 0;
  bool converged = false;
  double rms_reprojection = 0.0;     // sqrt(mean |r|^2) over observations, px
  double rms_point_plane = 0.0;      // over associations, map units
};

/// Robust total cost (Huber on squared norms) of the current state.
double bundle_cost(const Bundle& b, const RefineOptions& options);

/// Levenberg-Marquardt over cameras (tangent space), points and planes
/// (azimuth, elevation, offset). Cost never increases between accepted steps.
Bundle joint_refine(const Bundle& b, const RefineOptions& options, RefineReport* report = nullptr);

/// Structure first with all cameras fixed, then everything jointly.
Bundle decoupled_refine(const Bundle& b, const RefineOptions& options,
                        RefineReport* report = nullptr);

double rms_reprojection(const Bundle& b);
double rms_point_plane(const Bundle& b);

/// Plain-text sections, each introduced by `NAME count`:
/// CAMERAS (qw qx qy qz tx ty tz), INTRINSICS (fx fy cx cy), POINTS (x y z),
/// PLANES (nx ny nz d), OBSERVATIONS (camera point u v),
/// ASSOCIATIONS (point plane).
void write_bundle(std::ostream& out, const Bundle& b);
Bundle read_bundle(std::istream& in);
Bundle load_bundle(const std::filesystem::path& path);
void save_bundle(const std::filesystem::path& path, const Bundle& b);

}  // namespace seqgc
