#include "seqgc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "seqgc/estimators.hpp"

namespace seqgc {
namespace {

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& out) : out_(out) {}
  void lap(const char* stage) {
    const auto now = std::chrono::steady_clock::now();
    out_.push_back({stage, std::chrono::duration<double, std::milli>(now - last_).count()});
    last_ = now;
  }

 private:
  std::vector<StageTiming>& out_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

std::vector<MapPoint> gather(std::span<const std::size_t> ids, std::span<const MapPoint> points) {
  std::vector<MapPoint> out;
  out.reserve(ids.size());
  for (const auto id : ids) out.push_back(points[id]);
  return out;
}

std::vector<PlaneModel> live_models(const std::vector<PlaneLandmark>& map) {
  std::vector<PlaneModel> out;
  for (const auto& lm : map) {
    if (lm.alive) out.push_back({lm.plane, lm.point_ids});
  }
  return out;
}

PipelineResult per_mask_lsq(std::span<const MapPoint> points, const SegmentationPrior& prior) {
  PipelineResult result;
  StageClock clock(result.timings);
  for (const auto& proposal : propose_models(prior, ModelFamily::plane)) {
    const auto members = gather(proposal.point_ids, points);
    const auto plane = fit_plane_lsq(std::span<const MapPoint>(members));
    if (!plane) {
      result.notes.push_back("instance " + std::to_string(proposal.id) + ": degenerate");
      continue;
    }
    result.models.push_back({*plane, proposal.point_ids});
  }
  clock.lap("fit");
  return result;
}

}  // namespace

const char* to_string(PipelineMode mode) {
  switch (mode) {
    case PipelineMode::gc: return "gc";
    case PipelineMode::seq_ransac: return "seq";
    case PipelineMode::per_mask_lsq: return "lsq";
  }
  return "?";
}

std::optional<PipelineMode> parse_mode(const std::string& name) {
  if (name == "gc") return PipelineMode::gc;
  if (name == "seq" || name == "seq-ransac") return PipelineMode::seq_ransac;
  if (name == "lsq" || name == "per-mask-lsq") return PipelineMode::per_mask_lsq;
  return std::nullopt;
}

PipelineResult run_pipeline(std::span<const MapPoint> points, const SegmentationPrior& prior,
                            const FitConfig& cfg, PipelineMode mode, std::uint64_t seed) {
  validate(cfg);
  if (prior.size() != points.size()) {
    throw std::invalid_argument("prior has " + std::to_string(prior.size()) + " labels for " +
                                std::to_string(points.size()) + " points");
  }
  if (mode == PipelineMode::per_mask_lsq) {
    auto result = per_mask_lsq(points, prior);
    if (prior.instance_count() == 0) result.notes.push_back("no proposals");
    return result;
  }

  FitConfig run_cfg = cfg;
  if (mode == PipelineMode::seq_ransac) {
    run_cfg.lambda_plane = 0.0;
    run_cfg.local_optimization = false;
  }

  PipelineResult result;
  StageClock clock(result.timings);
  const auto proposals = propose_models(prior, ModelFamily::plane);
  if (proposals.empty()) {
    result.notes.push_back("no proposals");
    return result;
  }
  clock.lap("propose");

  result.fits = fit_sequential(proposals, points, run_cfg, seed);
  clock.lap("fit");

  std::vector<PlaneLandmark> map;
  for (const auto& fit : result.fits) {
    if (fit.status != FitStatus::accepted && fit.status != FitStatus::rejected_weak) {
      result.notes.push_back("proposal " + std::to_string(fit.proposal_id) + ": " +
                             to_string(fit.status) + (fit.note.empty() ? "" : " (" + fit.note + ")"));
      continue;
    }
    PlaneLandmark lm;
    lm.plane = *fit.model;
    lm.point_ids = fit.inlier_ids();
    std::sort(lm.point_ids.begin(), lm.point_ids.end());
    lm.quality = lm.point_ids.size();
    lm.weak = fit.status == FitStatus::rejected_weak;
    map.push_back(std::move(lm));
  }

  result.culled = cull_nonplanar(map, points, run_cfg.distance_threshold).size();
  clock.lap("cull");
  result.merges = merge_sweep(map, points, run_cfg, derive_seed(seed, proposals.size()));
  clock.lap("merge");

  // Larger planes claim free points first.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map[i].alive) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return map[a].quality > map[b].quality; });
  auto free_ids = unassigned_points(map, points.size());
  for (const auto i : order) {
    result.expanded += expand_plane(map[i], free_ids, points, run_cfg.distance_threshold);
  }
  clock.lap("expand");

  for (auto& lm : map) {
    if (!lm.alive) continue;
    const auto members = gather(lm.point_ids, points);
    if (const auto refit = fit_plane_lsq(std::span<const MapPoint>(members))) lm.plane = *refit;
  }
  result.culled += cull_nonplanar(map, points, run_cfg.distance_threshold).size();
  for (auto& lm : map) {
    lm.weak = lm.quality < static_cast<std::size_t>(run_cfg.min_plane_support);
    if (lm.alive && lm.weak) {
      lm.alive = false;
      ++result.dropped_weak;
    }
  }
  clock.lap("reestimate");

  result.models = live_models(map);
  return result;
}

double normal_angle_deg(const Plane& a, const Plane& b) {
  const double c = std::abs(a.normal.dot(b.normal)) / (a.normal.norm() * b.normal.norm());
  return std::acos(std::clamp(c, 0.0, 1.0)) * 180.0 / std::numbers::pi;
}

EvalReport evaluate(std::span<const PlaneModel> models, std::span<const Plane> truth_planes,
                    std::span<const int> truth_labels) {
  EvalReport report;
  const std::size_t n = truth_labels.size();
  for (const int t : truth_labels) {
    if (t < -1 || t >= static_cast<int>(truth_planes.size())) {
      throw std::invalid_argument("truth label out of range");
    }
  }

  struct Pair {
    double angle;
    std::size_t model, truth;
  };
  std::vector<Pair> pairs;
  for (std::size_t m = 0; m < models.size(); ++m) {
    for (std::size_t t = 0; t < truth_planes.size(); ++t) {
      pairs.push_back({normal_angle_deg(models[m].plane, truth_planes[t]), m, t});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& a, const Pair& b) { return a.angle < b.angle; });
  std::vector<std::optional<std::size_t>> match(models.size());
  std::vector<char> truth_used(truth_planes.size(), 0);
  for (const auto& p : pairs) {
    if (match[p.model] || truth_used[p.truth]) continue;
    match[p.model] = p.truth;
    truth_used[p.truth] = 1;
  }

  std::vector<std::size_t> truth_size(truth_planes.size(), 0);
  for (const int t : truth_labels) {
    if (t >= 0) ++truth_size[static_cast<std::size_t>(t)];
  }

  // -1 outlier, -2 owned by an unmatched model.
  std::vector<int> predicted(n, -1);
  std::vector<char> owned(n, 0);
  double angle_sum = 0.0;
  std::size_t matched = 0;
  for (std::size_t m = 0; m < models.size(); ++m) {
    ModelEval e;
    e.model = m;
    e.truth = match[m];
    std::size_t true_pos = 0;
    for (const auto id : models[m].point_ids) {
      if (id >= n) throw std::invalid_argument("model references point " + std::to_string(id) +
                                               " beyond the ground truth");
      if (match[m] && truth_labels[id] == static_cast<int>(*match[m])) ++true_pos;
      if (!owned[id]) {
        owned[id] = 1;
        predicted[id] = match[m] ? static_cast<int>(*match[m]) : -2;
      }
    }
    if (match[m]) {
      const Plane& t = truth_planes[*match[m]];
      const Plane& est = models[m].plane;
      e.angle_deg = normal_angle_deg(est, t);
      const double en = est.normal.norm(), tn = t.normal.norm();
      const double s = est.normal.dot(t.normal) >= 0.0 ? 1.0 : -1.0;
      e.offset_error = std::abs(est.offset / en - s * t.offset / tn);
      const auto est_size = models[m].point_ids.size();
      e.precision = est_size ? static_cast<double>(true_pos) / static_cast<double>(est_size) : 0.0;
      const auto gt_size = truth_size[*match[m]];
      e.recall = gt_size ? static_cast<double>(true_pos) / static_cast<double>(gt_size) : 0.0;
      angle_sum += e.angle_deg;
      ++matched;
    } else {
      ++report.false_positives;
    }
    report.models.push_back(e);
  }
  for (std::size_t t = 0; t < truth_planes.size(); ++t) {
    if (!truth_used[t]) report.missed_truth.push_back(t);
  }
  report.mean_angle_deg = matched ? angle_sum / static_cast<double>(matched) : 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (predicted[i] != truth_labels[i]) ++wrong;
  }
  report.misclassification_rate = n ? static_cast<double>(wrong) / static_cast<double>(n) : 0.0;
  return report;
}

}  // namespace seqgc
