#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <vector>

#include <Eigen/Core>

#include "seqgc/bundle.hpp"
#include "seqgc/neighbors.hpp"
#include "seqgc/types.hpp"

namespace seqgc {

/// A bounded rectangular patch on a plane.
struct PatchSpec {
  Plane plane;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  // projected onto the plane
  double half_u = 0.5;
  double half_v = 0.5;
  Eigen::Vector3d u_axis = Eigen::Vector3d::Zero();  // in-plane; derived from the normal when zero
};

struct SceneSpec {
  std::vector<PatchSpec> patches;
  std::size_t points_per_plane = 200;
  double outlier_fraction = 0.0;    // of all generated points
  double noise_sigma = 0.0;         // isotropic, map units
  double leak_fraction = 0.0;       // boundary points relabeled to the next instance
  double unlabeled_fraction = 0.0;  // of all points, labels dropped
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument for fractions outside [0, 1], negative noise,
/// or a spec without planes.
void validate(const SceneSpec& spec);

/// `key = value` lines; `plane = nx ny nz d cx cy cz half_u half_v` may repeat.
SceneSpec parse_scene_spec(std::istream& in);

struct GroundTruth {
  std::vector<Plane> planes;
  std::vector<int> point_plane;              // per point, -1 for outliers
  std::vector<std::size_t> boundary_counts;  // per instance, candidates for leaking
  std::vector<std::size_t> leaked;           // indices carrying a wrong instance label
  std::vector<std::size_t> unlabeled;        // indices whose label was dropped
};

struct Scene {
  std::vector<MapPoint> points;  // id == index
  SegmentationPrior prior;
  GroundTruth truth;
};

/// Samples the patches, adds noise and uniform-box outliers, then labels each
/// point with its instance and corrupts the labels: for every instance i the
/// floor(leak * n_i) planar points nearest the next instance's patch center
/// take that instance's label; outliers take the label of the nearest patch.
Scene synth_scene(const SceneSpec& spec);

/// Two square patches meeting along a shared edge at `dihedral_deg`.
SceneSpec two_plane_spec(std::uint64_t seed, double leak, double noise, double outliers,
                         std::size_t points_per_plane = 250, double dihedral_deg = 90.0);

struct MatchScene {
  std::vector<Correspondence> matches;  // id == index
  SegmentationPrior prior;
  std::vector<Homography> homographies;  // ground truth per instance
  std::vector<int> match_plane;          // -1 for outliers
  ImageSize image;
};

/// Views the scene's patches (expressed in the first camera's frame) from two
/// pinhole cameras; outliers are random pixel pairs. Points leaving either
/// image are dropped before labels are corrupted.
MatchScene synth_matches(const SceneSpec& spec, const Intrinsics& k, const Pose& second,
                         ImageSize image, double pixel_noise);

struct BundleScene {
  Bundle truth;      // noiseless state, observations exact
  Bundle perturbed;  // noisy observations, perturbed initialization
};

/// Four cameras looking at a floor and a wall, 60 points per plane, every
/// point observed by every camera. Observations get `pixel_noise` px per
/// axis. Cameras after the first are rotated by `rotation_deg` about a random
/// axis and their translation moved by `translation_fraction` of its norm;
/// points move by `point_sigma` per axis and planes tilt by `rotation_deg`.
BundleScene synth_bundle(std::uint64_t seed, double pixel_noise = 0.5, double rotation_deg = 1.0,
                         double translation_fraction = 0.01, double point_sigma = 0.02);

}  // namespace seqgc
