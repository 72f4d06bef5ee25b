#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "seqgc/types.hpp"

namespace seqgc {

/// Tunables for fitting and map refinement. Defaults are the published values
/// for indoor sequences at map scale 1.
struct FitConfig {
  // Spatial-coherence weights of the Potts term.
  double lambda_homography = 0.975;
  double lambda_plane = 0.6;

  // Homography inlier threshold on the symmetric transfer error (px) and
  // the mean-residual acceptance threshold for homographies.
  double ste_threshold = 2.0;
  double ste_residual_threshold = 1.5;

  double confidence = 0.99;
  int grid_cells_per_axis = 8;

  int max_outer_iterations = 50;
  int max_inner_iterations = 10000;
  int min_inner_iterations = 50;

  // Plane thresholds in map units.
  double distance_threshold = 0.02;    // point-to-plane inlier distance
  double residual_threshold = 0.01;    // mean inlier residual of an accepted plane
  double normal_parallel_threshold = 0.8;
  double offset_threshold = 0.2;       // 10 x distance_threshold
  double neighbor_radius = 0.04;       // 2 x distance_threshold

  int min_plane_support = 20;
  double pairwise_weight = 1.0;

  bool local_optimization = true;

  int merge_rounds = 50;
  double merge_sample_fraction = 0.6;
  // Use the unreduced |d_i/|d_i| - d_j/|d_j|| offset test when merging.
  bool literal_offset_test = false;
};

/// Throws std::invalid_argument when a field is out of range.
void validate(const FitConfig& cfg);

/// Multiplies every length-valued plane threshold by `scale`.
FitConfig scale_thresholds(const FitConfig& cfg, double scale);

/// Monocular mode: thresholds are expressed for a unit-scale map and the
/// local map scale is the median depth of the current keyframe.
FitConfig scale_thresholds_mono(const FitConfig& cfg, double median_depth);

/// RGB-D mode: local map scale is the mean landmark distance from the origin.
FitConfig scale_thresholds_rgbd(const FitConfig& cfg, const std::vector<MapPoint>& points);

/// Flat `key = value` text, `#` comments. Missing keys keep their defaults;
/// unknown keys throw. If distance_threshold is given but offset_threshold or
/// neighbor_radius are not, those follow as 10x and 2x of it.
FitConfig parse_config(std::istream& in);
FitConfig load_config(const std::filesystem::path& path);

/// Serializes every field in parse_config's format.
std::string format_config(const FitConfig& cfg);

/// Generic key-value reader shared with the scene description format.
/// Returns entries in file order; repeated keys are kept.
std::vector<std::pair<std::string, std::string>> read_key_values(std::istream& in);

}  // namespace seqgc
