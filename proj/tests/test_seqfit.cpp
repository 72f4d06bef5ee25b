#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "seqgc/estimators.hpp"
#include "seqgc/neighbors.hpp"
#include "seqgc/pipeline.hpp"
#include "seqgc/scene.hpp"
#include "seqgc/seqfit.hpp"

using namespace seqgc;

namespace {

ModelProposal all_points(std::size_t n, ModelFamily family = ModelFamily::plane) {
  ModelProposal p;
  p.family = family;
  p.point_ids.resize(n);
  std::iota(p.point_ids.begin(), p.point_ids.end(), std::size_t{0});
  return p;
}

std::vector<MapPoint> gather(const ModelProposal& p, std::span<const MapPoint> pts) {
  std::vector<MapPoint> out;
  for (const auto id : p.point_ids) out.push_back(pts[id]);
  return out;
}

PlaneFit fit_proposal(const ModelProposal& p, std::span<const MapPoint> pts, const FitConfig& cfg,
                      std::uint64_t seed) {
  const auto local = gather(p, pts);
  return fit_one(p, pts, radius_graph(local, cfg.neighbor_radius), cfg, seed);
}

SceneSpec single_plane(std::size_t n, double noise, double outliers, std::uint64_t seed) {
  PatchSpec patch;
  patch.plane = Plane::canonical(Eigen::Vector3d(0.1, 0.2, 1.0).normalized(), 2.0);
  patch.center = {0.2, 0.1, -2.0};
  SceneSpec spec;
  spec.patches = {patch};
  spec.points_per_plane = n;
  spec.noise_sigma = noise;
  spec.outlier_fraction = outliers;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("proposals follow the mask") {
  const auto prior = SegmentationPrior::from_labels({0, 0, 1, 0, 1, 0, 1, 0, 1, 0});
  const auto props = propose_models(prior, ModelFamily::plane);
  REQUIRE(props.size() == 2);
  CHECK(props[0].point_ids.size() == 6);
  CHECK(props[1].point_ids.size() == 4);
  CHECK(props[1].point_ids == std::vector<std::size_t>{2, 4, 6, 8});
  CHECK_FALSE(props[0].skip_reason);

  const auto none = SegmentationPrior::from_labels({std::nullopt, std::nullopt});
  CHECK(propose_models(none, ModelFamily::plane).empty());

  const auto small = SegmentationPrior::from_labels({0, 0, 1, 1, 1});
  const auto sp = propose_models(small, ModelFamily::plane);
  CHECK(sp[0].skip_reason.has_value());
  CHECK_FALSE(sp[1].skip_reason.has_value());
  std::vector<MapPoint> pts(5);
  for (std::size_t i = 0; i < 5; ++i) pts[i].position = {double(i), double(i * i), 1.0};
  const auto fits = fit_sequential(sp, pts, FitConfig{}, 1);
  REQUIRE(fits.size() == 2);
  CHECK(fits[1].proposal_id == 0);
  CHECK(fits[1].status == FitStatus::degenerate);
}

TEST_CASE("noiseless plane is recovered exactly") {
  const Scene scene = synth_scene(single_plane(50, 0.0, 0.0, 4));
  const auto fit = fit_proposal(all_points(50), scene.points, FitConfig{}, 9);
  CHECK(fit.status == FitStatus::accepted);
  CHECK(fit.support == 50);
  CHECK(fit.residual < 1e-12);
  REQUIRE(fit.model);
  CHECK(normal_angle_deg(*fit.model, scene.truth.planes[0]) < 1e-6);
  CHECK(fit.labeling.assignment.size() == 50);
}

TEST_CASE("leaked points from a second plane are rejected") {
  const Scene scene = synth_scene(two_plane_spec(21, 0.3, 0.005, 0.0));
  const auto props = propose_models(scene.prior, ModelFamily::plane);
  const ModelProposal& a = props[0];
  const auto fit = fit_proposal(a, scene.points, FitConfig{}, 5);
  CHECK(fit.status == FitStatus::accepted);
  REQUIRE(fit.model);
  CHECK(normal_angle_deg(*fit.model, scene.truth.planes[0]) < 2.0);

  std::size_t leaked_far = 0;
  for (std::size_t k = 0; k < a.point_ids.size(); ++k) {
    const auto id = a.point_ids[k];
    if (scene.truth.point_plane[id] == 0) continue;
    if (point_plane_distance(scene.truth.planes[0], scene.points[id]) <= 0.05) continue;
    ++leaked_far;
    CHECK(fit.labeling.assignment[k] == Label::outlier);
  }
  CHECK(leaked_far > 40);
}

TEST_CASE("without the pairwise term and local optimization the fit is plain RANSAC") {
  FitConfig cfg;
  cfg.lambda_plane = 0.0;
  cfg.local_optimization = false;
  const Scene scene = synth_scene(single_plane(120, 0.01, 0.3, 8));
  const auto p = all_points(scene.points.size());
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto a = fit_proposal(p, scene.points, cfg, seed);
    const auto b = baseline_ransac(scene.points, cfg, seed);
    REQUIRE(a.model);
    REQUIRE(b.model);
    CHECK(a.model->normal == b.model->normal);
    CHECK(a.model->offset == b.model->offset);
    CHECK(a.labeling.assignment == b.labeling.assignment);
    CHECK(a.support == b.support);
    CHECK(a.iterations == b.iterations);
    CHECK(a.lo_invocations == 0);
  }
}

TEST_CASE("sequential fitting: disjoint proposals fit independently") {
  const Scene scene = synth_scene(two_plane_spec(3, 0.0, 0.005, 0.0));
  const auto props = propose_models(scene.prior, ModelFamily::plane);
  const FitConfig cfg;
  const auto fits = fit_sequential(props, scene.points, cfg, 77);
  REQUIRE(fits.size() == 2);
  for (const auto& f : fits) {
    const auto single = fit_proposal(props[f.proposal_id], scene.points, cfg, derive_seed(77, f.proposal_id));
    REQUIRE(single.model);
    REQUIRE(f.model);
    CHECK(single.model->normal == f.model->normal);
    CHECK(single.labeling.assignment == f.labeling.assignment);
  }
  CHECK(fit_sequential({}, scene.points, cfg, 1).empty());
}

TEST_CASE("sequential fitting: contested points go to the larger model") {
  const Scene scene = synth_scene(two_plane_spec(12, 0.0, 0.002, 0.0, 150));
  std::vector<ModelProposal> props(2);
  std::vector<std::size_t> shared;
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    const int t = scene.truth.point_plane[i];
    props[static_cast<std::size_t>(t)].point_ids.push_back(i);
    // Plane-1 points near the shared edge also appear in proposal 0.
    if (t == 1 && point_plane_distance(scene.truth.planes[0], scene.points[i]) < 0.015) {
      props[0].point_ids.push_back(i);
      shared.push_back(i);
    }
  }
  props[1].id = 1;
  REQUIRE(!shared.empty());
  const auto fits = fit_sequential(props, scene.points, FitConfig{}, 2);
  REQUIRE(fits.size() == 2);
  CHECK(fits[0].proposal_id == 0);
  std::set<std::size_t> first;
  for (const auto id : fits[0].inlier_ids()) first.insert(id);
  for (const auto id : fits[1].inlier_ids()) CHECK(first.count(id) == 0);
  for (const auto id : shared) {
    if (first.count(id)) {
      const auto& ids = fits[1].point_ids;
      CHECK(std::find(ids.begin(), ids.end(), id) == ids.end());
    }
  }
}

TEST_CASE("baseline RANSAC") {
  const Scene exact = synth_scene(single_plane(80, 0.0, 0.0, 1));
  const auto all = baseline_ransac(exact.points, FitConfig{}, 3);
  CHECK(all.support == 80);
  CHECK(all.status == FitStatus::accepted);

  const Scene dirty = synth_scene(single_plane(200, 0.004, 0.5, 2));
  const auto robust = baseline_ransac(dirty.points, FitConfig{}, 3);
  REQUIRE(robust.model);
  CHECK(normal_angle_deg(*robust.model, dirty.truth.planes[0]) < 2.0);

  const std::vector<MapPoint> two(2);
  CHECK_THROWS_AS(baseline_ransac(two, FitConfig{}, 1), std::invalid_argument);
}

TEST_CASE("fit invariants hold across seeds") {
  const FitConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scene scene = synth_scene(two_plane_spec(seed, 0.3, 0.01, 0.1, 150));
    const auto props = propose_models(scene.prior, ModelFamily::plane);
    const auto fit = fit_proposal(props[seed % 2], scene.points, cfg, seed);
    for (const auto& lo : fit.trace.lo_supports) {
      for (std::size_t k = 1; k < lo.size(); ++k) CHECK(lo[k] > lo[k - 1]);
    }
    const auto& ups = fit.trace.best_updates;
    for (std::size_t k = 1; k < ups.size(); ++k) {
      const bool more = ups[k].support > ups[k - 1].support;
      const bool tighter = ups[k].support == ups[k - 1].support && ups[k].residual < ups[k - 1].residual;
      CHECK((more || tighter));
    }
    CHECK(fit.labeling.assignment.size() == props[seed % 2].point_ids.size());
    if (fit.status == FitStatus::accepted) {
      CHECK(fit.residual <= cfg.residual_threshold);
      CHECK(fit.support >= kPlaneSampleSize);
      // Support and residual are reproducible from the model alone.
      std::vector<double> d;
      for (const auto id : fit.point_ids) d.push_back(point_plane_distance(*fit.model, scene.points[id]));
      std::size_t support = 0;
      for (std::size_t k = 0; k < d.size(); ++k) {
        const bool in = d[k] < cfg.distance_threshold;
        support += in;
        CHECK((fit.labeling.assignment[k] == Label::inlier) == in);
      }
      CHECK(support == fit.support);
      CHECK(model_residual(d, cfg.distance_threshold, kPlaneSampleSize) == fit.residual);
    }
    const auto again = fit_proposal(props[seed % 2], scene.points, cfg, seed);
    CHECK(again.labeling.assignment == fit.labeling.assignment);
    CHECK(again.status == fit.status);
    CHECK(again.residual == fit.residual);
  }
}

TEST_CASE("homography fitting on a two-plane view") {
  PatchSpec floor;
  floor.plane = Plane::canonical({0, -1, 0}, 1.0);  // y = 1
  floor.center = {0, 1, 4};
  floor.half_u = 1.5;
  floor.half_v = 1.5;
  PatchSpec wall;
  wall.plane = Plane::canonical({0, 0, 1}, -6.0);  // z = 6
  wall.center = {0, -0.8, 6};
  wall.half_u = 2.0;
  wall.half_v = 1.5;
  SceneSpec spec;
  spec.patches = {floor, wall};
  spec.points_per_plane = 150;
  spec.outlier_fraction = 0.1;
  spec.leak_fraction = 0.2;
  spec.seed = 5;
  Pose second;
  second.rotation = Eigen::AngleAxisd(0.05, Eigen::Vector3d::UnitY());
  second.translation = {-0.3, 0.02, 0.05};
  const Intrinsics k{500, 500, 320, 240};
  const MatchScene scene = synth_matches(spec, k, second, {640, 480}, 0.3);

  const auto props = propose_models(scene.prior, ModelFamily::homography);
  const auto fits = fit_sequential(props, scene.matches, scene.image, FitConfig{}, 4);
  REQUIRE(fits.size() == 2);
  for (const auto& f : fits) {
    CHECK(f.status == FitStatus::accepted);
    REQUIRE(f.model);
    // Compare against the ground truth on the true inliers of that plane.
    const int plane = static_cast<int>(f.proposal_id);
    double worst = 0.0;
    for (std::size_t i = 0; i < scene.matches.size(); ++i) {
      if (scene.match_plane[i] != plane) continue;
      Correspondence clean = scene.matches[i];
      worst = std::max(worst, ste(*f.model, clean));
    }
    CHECK(worst < 4.0);
  }
}
