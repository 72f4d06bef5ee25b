#include "seqgc/planemap.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "seqgc/estimators.hpp"
#include "seqgc/sampler.hpp"
#include "seqgc/seqfit.hpp"

namespace seqgc {
namespace {

std::vector<MapPoint> gather(std::span<const std::size_t> ids, std::span<const MapPoint> points) {
  std::vector<MapPoint> out;
  out.reserve(ids.size());
  for (const auto id : ids) {
    if (id >= points.size()) throw std::out_of_range("landmark references a missing point");
    out.push_back(points[id]);
  }
  return out;
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

std::vector<std::size_t> cull_nonplanar(std::vector<PlaneLandmark>& map,
                                        std::span<const MapPoint> points, double threshold) {
  std::vector<std::size_t> removed;
  for (auto& lm : map) {
    if (!lm.alive) continue;
    std::vector<std::size_t> kept;
    kept.reserve(lm.point_ids.size());
    for (const auto id : lm.point_ids) {
      if (id >= points.size()) throw std::out_of_range("landmark references a missing point");
      if (point_plane_distance(lm.plane, points[id]) > threshold) {
        removed.push_back(id);
      } else {
        kept.push_back(id);
      }
    }
    lm.point_ids = std::move(kept);
    lm.quality = lm.point_ids.size();
  }
  std::sort(removed.begin(), removed.end());
  return removed;
}

bool should_merge(const Plane& a, const Plane& b, double normal_threshold, double offset_threshold,
                  bool literal_offset_test) {
  const double cos_angle = a.normal.dot(b.normal) / (a.normal.norm() * b.normal.norm());
  if (!(std::abs(cos_angle) > normal_threshold)) return false;
  if (literal_offset_test) {
    // |d_a/|d_a| - d_b/|d_b||: only compares the offsets' signs.
    return std::abs(sign(a.offset) - sign(b.offset)) < offset_threshold;
  }
  const double gap = std::abs(a.offset - sign(cos_angle) * b.offset);
  return gap < offset_threshold;
}

std::optional<PlaneLandmark> merge_planes(const PlaneLandmark& a, const PlaneLandmark& b,
                                          std::span<const MapPoint> points, const FitConfig& cfg,
                                          std::uint64_t seed) {
  std::vector<std::size_t> ids = a.point_ids;
  ids.insert(ids.end(), b.point_ids.begin(), b.point_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const std::vector<MapPoint> union_points = gather(ids, points);
  if (union_points.size() < kPlaneSampleSize) return std::nullopt;

  const auto subset_size = std::max<std::size_t>(
      kPlaneSampleSize,
      static_cast<std::size_t>(std::ceil(cfg.merge_sample_fraction * static_cast<double>(ids.size()))));

  std::mt19937_64 rng(seed);
  std::optional<Plane> best;
  std::size_t best_support = 0;
  double best_residual = std::numeric_limits<double>::infinity();
  for (int round = 0; round < cfg.merge_rounds; ++round) {
    std::vector<MapPoint> subset;
    subset.reserve(subset_size);
    for (const auto k : sample_without_replacement(union_points.size(), subset_size, rng)) {
      subset.push_back(union_points[k]);
    }
    const auto hypothesis = fit_plane_lsq(std::span<const MapPoint>(subset));
    if (!hypothesis) continue;
    std::size_t support = 0;
    for (const auto& p : union_points) {
      if (point_plane_distance(*hypothesis, p) < cfg.distance_threshold) ++support;
    }
    const double residual = model_residual(*hypothesis, union_points, cfg.distance_threshold);
    if (!best || support > best_support || (support == best_support && residual < best_residual)) {
      best = hypothesis;
      best_support = support;
      best_residual = residual;
    }
  }
  if (!best) return std::nullopt;

  std::vector<MapPoint> inliers;
  for (const auto& p : union_points) {
    if (point_plane_distance(*best, p) < cfg.distance_threshold) inliers.push_back(p);
  }
  const auto refined = fit_plane_lsq(std::span<const MapPoint>(inliers));
  const Plane plane = refined ? *refined : *best;

  PlaneLandmark merged;
  merged.plane = plane;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (point_plane_distance(plane, union_points[k]) <= cfg.distance_threshold) {
      merged.point_ids.push_back(ids[k]);
    }
  }
  merged.quality = merged.point_ids.size();
  merged.weak = merged.quality < static_cast<std::size_t>(cfg.min_plane_support);
  const double residual = model_residual(plane, gather(merged.point_ids, points),
                                         cfg.distance_threshold);
  if (!(residual <= cfg.residual_threshold)) return std::nullopt;
  return merged;
}

std::size_t merge_sweep(std::vector<PlaneLandmark>& map, std::span<const MapPoint> points,
                        const FitConfig& cfg, std::uint64_t seed) {
  std::size_t merges = 0;
  std::size_t attempt = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < map.size() && !changed; ++i) {
      if (!map[i].alive) continue;
      for (std::size_t j = i + 1; j < map.size(); ++j) {
        if (!map[j].alive) continue;
        if (!should_merge(map[i].plane, map[j].plane, cfg.normal_parallel_threshold,
                          cfg.offset_threshold, cfg.literal_offset_test)) {
          continue;
        }
        auto merged = merge_planes(map[i], map[j], points, cfg, derive_seed(seed, attempt++));
        if (!merged) continue;
        map[i] = std::move(*merged);
        map[j].alive = false;
        ++merges;
        changed = true;
        break;
      }
    }
  }
  return merges;
}

std::size_t expand_plane(PlaneLandmark& landmark, std::vector<std::size_t>& unassigned,
                         std::span<const MapPoint> points, double threshold) {
  if (!landmark.alive) throw std::invalid_argument("cannot expand a dead plane");
  std::vector<std::size_t> still_free;
  std::size_t claimed = 0;
  for (const auto id : unassigned) {
    if (id >= points.size()) throw std::out_of_range("unassigned id references a missing point");
    if (point_plane_distance(landmark.plane, points[id]) <= threshold) {
      landmark.point_ids.push_back(id);
      ++claimed;
    } else {
      still_free.push_back(id);
    }
  }
  std::sort(landmark.point_ids.begin(), landmark.point_ids.end());
  landmark.quality = landmark.point_ids.size();
  unassigned = std::move(still_free);
  return claimed;
}

MapPoint project_onto_plane(const Plane& plane, const MapPoint& v) {
  const double norm = plane.normal.norm();
  const double signed_dist = (plane.normal.dot(v.position) + plane.offset) / norm;
  MapPoint out = v;
  out.position = v.position - signed_dist * plane.normal / norm;
  return out;
}

std::vector<std::size_t> unassigned_points(const std::vector<PlaneLandmark>& map,
                                           std::size_t point_count) {
  std::vector<char> used(point_count, 0);
  for (const auto& lm : map) {
    if (!lm.alive) continue;
    for (const auto id : lm.point_ids) {
      if (id < point_count) used[id] = 1;
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < point_count; ++i) {
    if (!used[i]) out.push_back(i);
  }
  return out;
}

}  // namespace seqgc
