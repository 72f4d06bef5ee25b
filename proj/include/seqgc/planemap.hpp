#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "seqgc/config.hpp"
#include "seqgc/types.hpp"

namespace seqgc {

/// A plane kept in the map together with the points associated to it.
/// `point_ids` index the map's point array and are kept sorted.
struct PlaneLandmark {
  Plane plane;
  std::vector<std::size_t> point_ids;
  std::size_t quality = 0;  // support count
  bool alive = true;
  bool weak = false;
};

/// Dissociates points farther than `threshold` from their plane. Returns the
/// removed point ids, ascending.
std::vector<std::size_t> cull_nonplanar(std::vector<PlaneLandmark>& map,
                                        std::span<const MapPoint> points, double threshold);

/// Parallel-normal and offset-proximity tests on canonical planes.
bool should_merge(const Plane& a, const Plane& b, double normal_threshold, double offset_threshold,
                  bool literal_offset_test = false);

/// Re-estimates a plane for the union of both landmarks' points: `merge_rounds`
/// least-squares fits on random `merge_sample_fraction` subsets, best by
/// inlier count, then a refit on that hypothesis' inliers. Points farther than
/// the distance threshold from the result are dropped. nullopt (merge
/// aborted) when the union is degenerate or the merged plane's mean residual
/// exceeds the residual threshold.
std::optional<PlaneLandmark> merge_planes(const PlaneLandmark& a, const PlaneLandmark& b,
                                          std::span<const MapPoint> points, const FitConfig& cfg,
                                          std::uint64_t seed);

/// Pairwise merge pass over live landmarks; absorbed landmarks are marked dead.
/// Returns the number of merges performed.
std::size_t merge_sweep(std::vector<PlaneLandmark>& map, std::span<const MapPoint> points,
                        const FitConfig& cfg, std::uint64_t seed);

/// Associates every unassigned point within `threshold` of the plane. Claimed
/// ids are erased from `unassigned`. Returns how many were claimed.
std::size_t expand_plane(PlaneLandmark& landmark, std::vector<std::size_t>& unassigned,
                         std::span<const MapPoint> points, double threshold);

/// Moves v along the normal by its signed distance, onto the plane.
MapPoint project_onto_plane(const Plane& plane, const MapPoint& v);

/// Ids of points that belong to no live landmark, ascending.
std::vector<std::size_t> unassigned_points(const std::vector<PlaneLandmark>& map,
                                           std::size_t point_count);

}  // namespace seqgc
