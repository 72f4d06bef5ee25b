#include "seqgc/seqfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "seqgc/estimators.hpp"
#include "seqgc/mincut.hpp"
#include "seqgc/sampler.hpp"

namespace seqgc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Proposal-local view of the plane fitting problem.
struct PlaneProblem {
  using Model = Plane;
  static constexpr std::size_t kSampleSize = kPlaneSampleSize;

  std::vector<MapPoint> points;
  double threshold = 0.0;
  double residual_threshold = 0.0;
  double lambda = 0.0;
  std::size_t weak_support = 0;

  std::size_t size() const { return points.size(); }

  std::optional<Plane> fit_minimal(std::span<const std::size_t> ids) const {
    const std::array<MapPoint, 3> s = {points[ids[0]], points[ids[1]], points[ids[2]]};
    return fit_plane_minimal(std::span<const MapPoint>(s));
  }
  std::optional<Plane> fit_lsq(std::span<const std::size_t> ids) const {
    std::vector<MapPoint> s;
    s.reserve(ids.size());
    for (const auto i : ids) s.push_back(points[i]);
    return fit_plane_lsq(std::span<const MapPoint>(s));
  }
  void residuals(const Plane& model, std::vector<double>& out) const {
    out.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = point_plane_distance(model, points[i]);
  }
};

struct HomographyProblem {
  using Model = Homography;
  static constexpr std::size_t kSampleSize = kHomographySampleSize;

  std::vector<Correspondence> points;
  double threshold = 0.0;
  double residual_threshold = 0.0;
  double lambda = 0.0;
  std::size_t weak_support = 0;

  std::size_t size() const { return points.size(); }

  std::optional<Homography> fit_minimal(std::span<const std::size_t> ids) const {
    const std::array<Correspondence, 4> s = {points[ids[0]], points[ids[1]], points[ids[2]],
                                             points[ids[3]]};
    return fit_homography_minimal(std::span<const Correspondence>(s));
  }
  std::optional<Homography> fit_lsq(std::span<const std::size_t> ids) const {
    std::vector<Correspondence> s;
    s.reserve(ids.size());
    for (const auto i : ids) s.push_back(points[i]);
    return fit_homography_lsq(std::span<const Correspondence>(s));
  }
  void residuals(const Homography& model, std::vector<double>& out) const {
    out.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = ste(model, points[i]);
  }
};

template <class Model>
struct Scored {
  Model model;
  std::size_t support = 0;
  double residual = kInf;
};

// Larger support wins; equal support falls back to the lower mean residual.
template <class Model>
bool better(const Scored<Model>& candidate, const std::optional<Scored<Model>>& best) {
  if (!std::isfinite(candidate.residual)) return false;
  if (!best) return true;
  if (candidate.support != best->support) return candidate.support > best->support;
  return candidate.residual < best->residual;
}

std::size_t adaptive_iterations(std::size_t support, std::size_t total, std::size_t m,
                                const FitConfig& cfg) {
  const auto lo = static_cast<std::size_t>(cfg.min_inner_iterations);
  const auto hi = static_cast<std::size_t>(cfg.max_inner_iterations);
  if (total == 0) return hi;
  const double ratio = static_cast<double>(support) / static_cast<double>(total);
  const double p_good = std::pow(ratio, static_cast<double>(m));
  if (p_good >= 1.0) return lo;
  if (p_good <= 0.0) return hi;
  const double n = std::log(1.0 - cfg.confidence) / std::log1p(-p_good);
  if (!std::isfinite(n) || n >= static_cast<double>(hi)) return hi;
  return std::clamp(static_cast<std::size_t>(std::ceil(n)), lo, hi);
}

template <class Problem, class Sampler>
FitResult<typename Problem::Model> run_fit(const Problem& problem, const NeighborGraph& graph,
                                           const FitConfig& cfg, bool local_optimization,
                                           Sampler& sampler) {
  using Model = typename Problem::Model;
  constexpr std::size_t m = Problem::kSampleSize;
  const std::size_t n = problem.size();

  FitResult<Model> result;
  std::vector<double> residuals;

  auto score = [&](const Model& model) {
    problem.residuals(model, residuals);
    Scored<Model> s{model};
    s.support = static_cast<std::size_t>(std::count_if(
        residuals.begin(), residuals.end(), [&](double r) { return r < problem.threshold; }));
    s.residual = model_residual(residuals, problem.threshold, m);
    return s;
  };

  auto local_optimize = [&](const Scored<Model>& start) {
    ++result.lo_invocations;
    Scored<Model> best_lo = start;
    std::vector<std::size_t> supports = {start.support};
    bool changed = true;
    while (changed) {
      changed = false;
      problem.residuals(best_lo.model, residuals);
      const ProblemGraph g = build_problem_graph(residuals, problem.threshold, graph, problem.lambda);
      const CutResult cut = min_cut(g);

      std::vector<std::size_t> inliers;
      for (std::size_t i = 0; i < n; ++i) {
        if (cut.labeling[i] == Label::inlier) inliers.push_back(i);
      }
      if (inliers.size() < m) break;
      std::vector<std::size_t> subset;
      if (inliers.size() <= 7 * m) {
        subset = inliers;
      } else {
        for (const auto k : sample_without_replacement(inliers.size(), 7 * m, sampler.engine())) {
          subset.push_back(inliers[k]);
        }
        std::sort(subset.begin(), subset.end());
      }
      const auto refit = problem.fit_lsq(subset);
      if (!refit) break;
      Scored<Model> candidate = score(*refit);
      if (candidate.support > best_lo.support) {
        best_lo = std::move(candidate);
        supports.push_back(best_lo.support);
        changed = true;
      }
    }
    result.trace.lo_supports.push_back(std::move(supports));
    return best_lo;
  };

  std::optional<Scored<Model>> best;
  std::size_t inner_cap = static_cast<std::size_t>(cfg.max_inner_iterations);

  for (int outer = 0; outer < cfg.max_outer_iterations; ++outer) {
    bool best_needs_lo = false;
    for (std::size_t k = 0; k < inner_cap; ++k) {
      ++result.iterations;
      const MinimalSample sample = sampler.sample(m);
      const auto model = problem.fit_minimal(sample.ids);
      if (!model) {
        ++result.trace.degenerate_samples;
        continue;
      }
      Scored<Model> candidate = score(*model);
      if (!better(candidate, best)) continue;

      best = std::move(candidate);
      inner_cap = adaptive_iterations(best->support, n, m, cfg);
      best_needs_lo = local_optimization;
      // Burn-in: skip local optimization during the first tenth of the budget.
      if (local_optimization && k >= inner_cap / 10) {
        best = local_optimize(*best);
        best_needs_lo = false;
      }
      result.trace.best_updates.push_back({result.iterations, best->support, best->residual});
    }
    if (!best) continue;
    if (best_needs_lo) best = local_optimize(*best);

    // Least-squares polish on the best model's inliers.
    problem.residuals(best->model, residuals);
    std::vector<std::size_t> inliers;
    for (std::size_t i = 0; i < n; ++i) {
      if (residuals[i] < problem.threshold) inliers.push_back(i);
    }
    if (const auto polished = problem.fit_lsq(inliers)) {
      best = score(*polished);
      inner_cap = adaptive_iterations(best->support, n, m, cfg);
    }
    if (best->residual < problem.residual_threshold) break;
  }

  result.labeling.assignment.assign(n, Label::outlier);
  if (!best) {
    result.status = FitStatus::degenerate;
    result.residual = kInf;
    result.note = "no non-degenerate minimal sample found";
    return result;
  }

  problem.residuals(best->model, residuals);
  for (std::size_t i = 0; i < n; ++i) {
    if (residuals[i] < problem.threshold) result.labeling.assignment[i] = Label::inlier;
  }
  result.model = best->model;
  result.support = best->support;
  result.residual = best->residual;
  if (!(best->residual <= problem.residual_threshold)) {
    result.status = FitStatus::rejected_residual;
  } else if (best->support < problem.weak_support) {
    result.status = FitStatus::rejected_weak;
  } else {
    result.status = FitStatus::accepted;
  }
  return result;
}

PlaneProblem make_plane_problem(const ModelProposal& proposal, std::span<const MapPoint> points,
                                const FitConfig& cfg) {
  PlaneProblem p;
  p.points.reserve(proposal.point_ids.size());
  for (const auto id : proposal.point_ids) {
    if (id >= points.size()) throw std::out_of_range("proposal references a missing point");
    p.points.push_back(points[id]);
  }
  p.threshold = cfg.distance_threshold;
  p.residual_threshold = cfg.residual_threshold;
  p.lambda = cfg.lambda_plane;
  p.weak_support = static_cast<std::size_t>(cfg.min_plane_support);
  return p;
}

HomographyProblem make_homography_problem(const ModelProposal& proposal,
                                          std::span<const Correspondence> points,
                                          const FitConfig& cfg) {
  HomographyProblem p;
  p.points.reserve(proposal.point_ids.size());
  for (const auto id : proposal.point_ids) {
    if (id >= points.size()) throw std::out_of_range("proposal references a missing point");
    p.points.push_back(points[id]);
  }
  p.threshold = cfg.ste_threshold;
  p.residual_threshold = cfg.ste_residual_threshold;
  p.lambda = cfg.lambda_homography;
  return p;
}

template <class Model>
FitResult<Model> skipped(const ModelProposal& proposal, std::string note) {
  FitResult<Model> r;
  r.proposal_id = proposal.id;
  r.point_ids = proposal.point_ids;
  r.labeling.model_id = proposal.id;
  r.labeling.assignment.assign(proposal.point_ids.size(), Label::outlier);
  r.residual = kInf;
  r.status = FitStatus::degenerate;
  r.note = std::move(note);
  return r;
}

template <class Model>
void attach_proposal(FitResult<Model>& r, const ModelProposal& proposal) {
  r.proposal_id = proposal.id;
  r.point_ids = proposal.point_ids;
  r.labeling.model_id = proposal.id;
}

// Largest first; ties keep proposal order.
std::vector<std::size_t> processing_order(const std::vector<ModelProposal>& proposals) {
  std::vector<std::size_t> order(proposals.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return proposals[a].point_ids.size() > proposals[b].point_ids.size();
  });
  return order;
}

// Drives any per-proposal fitter with sequential inlier removal.
template <class Model, class FitFn>
std::vector<FitResult<Model>> sequential(const std::vector<ModelProposal>& proposals,
                                         std::size_t point_count, std::uint64_t seed,
                                         FitFn&& fit) {
  std::vector<FitResult<Model>> results;
  std::vector<char> claimed(point_count, 0);
  for (const std::size_t index : processing_order(proposals)) {
    const ModelProposal& original = proposals[index];
    ModelProposal remaining = original;
    remaining.point_ids.clear();
    for (const auto id : original.point_ids) {
      if (id >= point_count) throw std::out_of_range("proposal references a missing point");
      if (!claimed[id]) remaining.point_ids.push_back(id);
    }
    const std::size_t m = minimal_sample_size(original.family);
    if (original.skip_reason) {
      results.push_back(skipped<Model>(remaining, *original.skip_reason));
      continue;
    }
    if (remaining.point_ids.size() < m) {
      results.push_back(skipped<Model>(remaining, "fewer unclaimed points than a minimal sample"));
      continue;
    }
    FitResult<Model> r = fit(remaining, derive_seed(seed, original.id));
    if (r.status == FitStatus::accepted) {
      for (const auto id : r.inlier_ids()) claimed[id] = 1;
    }
    results.push_back(std::move(r));
  }
  return results;
}

std::vector<MapPoint> gather(const ModelProposal& proposal, std::span<const MapPoint> points) {
  std::vector<MapPoint> out;
  out.reserve(proposal.point_ids.size());
  for (const auto id : proposal.point_ids) out.push_back(points[id]);
  return out;
}

std::vector<Correspondence> gather(const ModelProposal& proposal,
                                   std::span<const Correspondence> points) {
  std::vector<Correspondence> out;
  out.reserve(proposal.point_ids.size());
  for (const auto id : proposal.point_ids) out.push_back(points[id]);
  return out;
}

ModelProposal whole_set(ModelFamily family, std::size_t n) {
  ModelProposal p;
  p.family = family;
  p.point_ids.resize(n);
  std::iota(p.point_ids.begin(), p.point_ids.end(), std::size_t{0});
  return p;
}

}  // namespace

std::size_t minimal_sample_size(ModelFamily family) {
  return family == ModelFamily::plane ? kPlaneSampleSize : kHomographySampleSize;
}

const char* to_string(FitStatus status) {
  switch (status) {
    case FitStatus::accepted: return "accepted";
    case FitStatus::rejected_weak: return "rejected-weak";
    case FitStatus::rejected_residual: return "rejected-residual";
    case FitStatus::degenerate: return "degenerate";
  }
  return "unknown";
}

std::vector<ModelProposal> propose_models(const SegmentationPrior& prior, ModelFamily family) {
  std::vector<ModelProposal> proposals(static_cast<std::size_t>(prior.instance_count()));
  for (std::size_t k = 0; k < proposals.size(); ++k) {
    proposals[k].family = family;
    proposals[k].id = k;
  }
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (const auto& label = prior.label(i)) {
      proposals[static_cast<std::size_t>(*label)].point_ids.push_back(i);
    }
  }
  const std::size_t m = minimal_sample_size(family);
  for (auto& p : proposals) {
    if (p.point_ids.size() < m) {
      p.skip_reason = "proposal has " + std::to_string(p.point_ids.size()) +
                      " points, fewer than the minimal sample size " + std::to_string(m);
    }
  }
  return proposals;
}

std::uint64_t derive_seed(std::uint64_t seed, std::size_t proposal_id) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(proposal_id) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

PlaneFit fit_one(const ModelProposal& proposal, std::span<const MapPoint> points,
                 const NeighborGraph& graph, const FitConfig& cfg, std::uint64_t seed) {
  if (proposal.point_ids.size() < kPlaneSampleSize) {
    return skipped<Plane>(proposal, "fewer points than a minimal sample");
  }
  if (graph.node_count() != proposal.point_ids.size()) {
    throw std::invalid_argument("neighbor graph does not match the proposal's points");
  }
  const PlaneProblem problem = make_plane_problem(proposal, points, cfg);
  UniformSampler sampler(problem.size(), seed);
  PlaneFit r = run_fit(problem, graph, cfg, cfg.local_optimization, sampler);
  attach_proposal(r, proposal);
  return r;
}

HomographyFit fit_one(const ModelProposal& proposal, std::span<const Correspondence> points,
                      const NeighborGraph& graph, std::span<const GridCell> cells,
                      const FitConfig& cfg, std::uint64_t seed) {
  if (proposal.point_ids.size() < kHomographySampleSize) {
    return skipped<Homography>(proposal, "fewer points than a minimal sample");
  }
  if (graph.node_count() != proposal.point_ids.size() || cells.size() != proposal.point_ids.size()) {
    throw std::invalid_argument("neighbor graph or cells do not match the proposal's points");
  }
  const HomographyProblem problem = make_homography_problem(proposal, points, cfg);
  LocalizedSampler sampler(std::vector<GridCell>(cells.begin(), cells.end()), seed);
  HomographyFit r = run_fit(problem, graph, cfg, cfg.local_optimization, sampler);
  attach_proposal(r, proposal);
  return r;
}

std::vector<PlaneFit> fit_sequential(const std::vector<ModelProposal>& proposals,
                                     std::span<const MapPoint> points, const FitConfig& cfg,
                                     std::uint64_t seed) {
  return sequential<Plane>(proposals, points.size(), seed,
                           [&](const ModelProposal& p, std::uint64_t s) {
                             const auto local = gather(p, points);
                             const NeighborGraph g =
                                 radius_graph(local, cfg.neighbor_radius, cfg.pairwise_weight);
                             return fit_one(p, points, g, cfg, s);
                           });
}

std::vector<HomographyFit> fit_sequential(const std::vector<ModelProposal>& proposals,
                                          std::span<const Correspondence> points,
                                          ImageSize image, const FitConfig& cfg,
                                          std::uint64_t seed) {
  return sequential<Homography>(
      proposals, points.size(), seed, [&](const ModelProposal& p, std::uint64_t s) {
        const auto local = gather(p, points);
        const NeighborGraph g =
            grid_graph(local, image, cfg.grid_cells_per_axis, cfg.pairwise_weight);
        const auto cells = grid_cells(local, image, cfg.grid_cells_per_axis);
        return fit_one(p, points, g, cells, cfg, s);
      });
}

PlaneFit baseline_ransac(std::span<const MapPoint> points, const FitConfig& cfg,
                         std::uint64_t seed) {
  if (points.size() < kPlaneSampleSize) {
    throw std::invalid_argument("baseline RANSAC needs at least 3 points");
  }
  const ModelProposal all = whole_set(ModelFamily::plane, points.size());
  const PlaneProblem problem = make_plane_problem(all, points, cfg);
  const NeighborGraph none(points.size(), {}, GraphKind::radius, cfg.neighbor_radius);
  UniformSampler sampler(problem.size(), seed);
  PlaneFit r = run_fit(problem, none, cfg, false, sampler);
  attach_proposal(r, all);
  return r;
}

HomographyFit baseline_ransac(std::span<const Correspondence> points, const FitConfig& cfg,
                              std::uint64_t seed) {
  if (points.size() < kHomographySampleSize) {
    throw std::invalid_argument("baseline RANSAC needs at least 4 correspondences");
  }
  const ModelProposal all = whole_set(ModelFamily::homography, points.size());
  const HomographyProblem problem = make_homography_problem(all, points, cfg);
  const NeighborGraph none(points.size(), {}, GraphKind::grid, cfg.grid_cells_per_axis);
  UniformSampler sampler(problem.size(), seed);
  HomographyFit r = run_fit(problem, none, cfg, false, sampler);
  attach_proposal(r, all);
  return r;
}

std::vector<PlaneFit> sequential_ransac(const std::vector<ModelProposal>& proposals,
                                        std::span<const MapPoint> points, const FitConfig& cfg,
                                        std::uint64_t seed) {
  return sequential<Plane>(proposals, points.size(), seed,
                           [&](const ModelProposal& p, std::uint64_t s) {
                             const auto local = gather(p, points);
                             PlaneFit r = baseline_ransac(local, cfg, s);
                             attach_proposal(r, p);
                             return r;
                           });
}

}  // namespace seqgc
