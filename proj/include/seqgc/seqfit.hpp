#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqgc/config.hpp"
#include "seqgc/neighbors.hpp"
#include "seqgc/types.hpp"

namespace seqgc {

enum class ModelFamily { homography, plane };

std::size_t minimal_sample_size(ModelFamily family);

enum class FitStatus { accepted, rejected_weak, rejected_residual, degenerate };

const char* to_string(FitStatus status);

/// Points of one segmentation instance. `point_ids` index the caller's point
/// array (positions, not the points' own `id` fields).
struct ModelProposal {
  ModelFamily family = ModelFamily::plane;
  std::vector<std::size_t> point_ids;
  std::size_t id = 0;
  /// Set when the proposal is too small to fit.
  std::optional<std::string> skip_reason;
};

std::vector<ModelProposal> propose_models(const SegmentationPrior& prior, ModelFamily family);

struct BestUpdate {
  std::size_t iteration = 0;  // global sample counter when the update happened
  std::size_t support = 0;
  double residual = 0.0;
};

/// What happened inside one fit: every so-far-the-best replacement and, for
/// each local optimization, the sequence of improving supports it recorded.
struct FitTrace {
  std::vector<BestUpdate> best_updates;
  std::vector<std::vector<std::size_t>> lo_supports;
  std::size_t degenerate_samples = 0;
};

template <class Model>
struct FitResult {
  std::size_t proposal_id = 0;
  std::optional<Model> model;
  std::vector<std::size_t> point_ids;  // V_p, same order as labeling
  Labeling labeling;
  std::size_t support = 0;
  double residual = 0.0;
  std::size_t iterations = 0;
  std::size_t lo_invocations = 0;
  FitStatus status = FitStatus::degenerate;
  std::string note;
  FitTrace trace;

  std::vector<std::size_t> inlier_ids() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < point_ids.size(); ++i) {
      if (labeling.assignment[i] == Label::inlier) out.push_back(point_ids[i]);
    }
    return out;
  }
};

using PlaneFit = FitResult<Plane>;
using HomographyFit = FitResult<Homography>;

/// Seed used for proposal `proposal_id` when fitting sequentially from `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::size_t proposal_id);

/// Sequential Graph-Cut RANSAC on one proposal. `graph` is the neighborhood
/// graph over the proposal's points in `point_ids` order.
PlaneFit fit_one(const ModelProposal& proposal, std::span<const MapPoint> points,
                 const NeighborGraph& graph, const FitConfig& cfg, std::uint64_t seed);

/// Homography variant; `cells` are the grid cells of the proposal's points
/// (same order as `point_ids`) used by the localized sampler.
HomographyFit fit_one(const ModelProposal& proposal, std::span<const Correspondence> points,
                      const NeighborGraph& graph, std::span<const GridCell> cells,
                      const FitConfig& cfg, std::uint64_t seed);

/// Fits proposals largest first; accepted models' inliers are removed from
/// the proposals that follow. Results are in processing order.
std::vector<PlaneFit> fit_sequential(const std::vector<ModelProposal>& proposals,
                                     std::span<const MapPoint> points, const FitConfig& cfg,
                                     std::uint64_t seed);
std::vector<HomographyFit> fit_sequential(const std::vector<ModelProposal>& proposals,
                                          std::span<const Correspondence> points,
                                          ImageSize image, const FitConfig& cfg,
                                          std::uint64_t seed);

/// Plain RANSAC with the 0-1 inlier count, then a least-squares refit.
/// Throws std::invalid_argument when there are fewer points than a minimal sample.
PlaneFit baseline_ransac(std::span<const MapPoint> points, const FitConfig& cfg,
                         std::uint64_t seed);
HomographyFit baseline_ransac(std::span<const Correspondence> points, const FitConfig& cfg,
                              std::uint64_t seed);

/// Sequential RANSAC: baseline_ransac per proposal with the same ordering,
/// seeding and inlier removal as fit_sequential.
std::vector<PlaneFit> sequential_ransac(const std::vector<ModelProposal>& proposals,
                                        std::span<const MapPoint> points, const FitConfig& cfg,
                                        std::uint64_t seed);

}  // namespace seqgc
