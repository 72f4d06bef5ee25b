#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqgc/config.hpp"
#include "seqgc/planemap.hpp"
#include "seqgc/seqfit.hpp"
#include "seqgc/types.hpp"

namespace seqgc {

enum class PipelineMode { gc, seq_ransac, per_mask_lsq };

const char* to_string(PipelineMode mode);
/// "gc", "seq" (or "seq-ransac"), "lsq" (or "per-mask-lsq"); nullopt otherwise.
std::optional<PipelineMode> parse_mode(const std::string& name);

struct StageTiming {
  std::string stage;
  double ms = 0.0;
};

struct PlaneModel {
  Plane plane;
  std::vector<std::size_t> point_ids;  // indices into the input points, ascending
};

struct PipelineResult {
  std::vector<PlaneModel> models;
  std::vector<PlaneFit> fits;  // per proposal, processing order (empty for lsq)
  std::size_t culled = 0;
  std::size_t merges = 0;
  std::size_t expanded = 0;
  std::size_t dropped_weak = 0;
  std::vector<std::string> notes;
  std::vector<StageTiming> timings;
};

/// gc: propose, fit sequentially, cull, merge, expand, re-estimate and drop
/// weak planes. seq_ransac: the same with no pairwise term and no local
/// optimization. per_mask_lsq: one least-squares plane per instance.
/// `prior` labels the points by position.
PipelineResult run_pipeline(std::span<const MapPoint> points, const SegmentationPrior& prior,
                            const FitConfig& cfg, PipelineMode mode, std::uint64_t seed);

struct ModelEval {
  std::size_t model = 0;
  std::optional<std::size_t> truth;  // matched ground-truth plane
  double angle_deg = 0.0;
  double offset_error = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct EvalReport {
  std::vector<ModelEval> models;
  std::vector<std::size_t> missed_truth;  // ground-truth planes without an estimate
  std::size_t false_positives = 0;
  double mean_angle_deg = 0.0;            // over matched models
  double misclassification_rate = 0.0;
  std::vector<StageTiming> timings;
};

/// Angle in degrees between the planes' normal lines, in [0, 90].
double normal_angle_deg(const Plane& a, const Plane& b);

/// Greedy one-to-one matching of estimates to truth planes by smallest
/// normal angle; unmatched estimates are false positives. `truth_labels`
/// holds the true plane per point, -1 for outliers. A point's predicted
/// plane is the truth plane matched by the first model that owns it.
EvalReport evaluate(std::span<const PlaneModel> models, std::span<const Plane> truth_planes,
                    std::span<const int> truth_labels);

}  // namespace seqgc
