#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "seqgc/estimators.hpp"
#include "seqgc/pipeline.hpp"
#include "seqgc/planemap.hpp"
#include "seqgc/scene.hpp"

using namespace seqgc;

namespace {

std::vector<MapPoint> plane_points(const Plane& plane, std::size_t count, double noise, std::uint64_t seed,
                                   Eigen::Vector2d lo = {-1, -1}, Eigen::Vector2d hi = {1, 1}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ua(lo.x(), hi.x()), ub(lo.y(), hi.y());
  std::normal_distribution<double> g(0.0, noise > 0 ? noise : 1.0);
  const Eigen::Vector3d n = plane.normal;
  const Eigen::Vector3d e1 = n.unitOrthogonal();
  const Eigen::Vector3d e2 = n.cross(e1);
  std::vector<MapPoint> out;
  for (std::size_t i = 0; i < count; ++i) {
    const double a = ua(rng), b = ub(rng);
    const double c = noise > 0 ? g(rng) : 0.0;
    out.push_back({-plane.offset * n + a * e1 + b * e2 + c * n, {}, i});
  }
  return out;
}

PlaneLandmark landmark(const Plane& p, std::vector<std::size_t> ids) {
  PlaneLandmark lm;
  lm.plane = p;
  lm.point_ids = std::move(ids);
  lm.quality = lm.point_ids.size();
  return lm;
}

std::vector<std::size_t> iota_ids(std::size_t b, std::size_t e) {
  std::vector<std::size_t> v;
  for (std::size_t i = b; i < e; ++i) v.push_back(i);
  return v;
}

}  // namespace

TEST_CASE("culling") {
  const Plane z0 = Plane::canonical({0, 0, 1}, 0);
  std::vector<MapPoint> pts{{{0, 0, 0.01}, {}, 0}, {{1, 0, 0.04}, {}, 1}, {{0, 1, -0.019}, {}, 2}};
  std::vector<PlaneLandmark> map{landmark(z0, {0, 2})};
  CHECK(cull_nonplanar(map, pts, 0.02).empty());
  map[0].point_ids = {0, 1, 2};
  CHECK(cull_nonplanar(map, pts, 0.02) == std::vector<std::size_t>{1});
  CHECK(map[0].point_ids == std::vector<std::size_t>{0, 2});
  CHECK(map[0].quality == 2);

  // Against a direct scan of the distance formula.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  std::vector<MapPoint> many;
  for (std::size_t i = 0; i < 500; ++i) many.push_back({{u(rng), u(rng), u(rng)}, {}, i});
  std::vector<PlaneLandmark> m2{landmark(z0, iota_ids(0, 250)), landmark(Plane::canonical({1, 0, 0}, 0), iota_ids(250, 500))};
  std::vector<std::size_t> expect;
  for (std::size_t i = 0; i < 500; ++i) {
    const Plane& p = i < 250 ? m2[0].plane : m2[1].plane;
    if (point_plane_distance(p, many[i]) > 0.02) expect.push_back(i);
  }
  CHECK(cull_nonplanar(m2, many, 0.02) == expect);
}

TEST_CASE("merge test") {
  const Plane a = Plane::canonical(Eigen::Vector3d(0.3, 0.1, 0.9).normalized(), 0.7);
  CHECK(should_merge(a, a, 0.8, 0.2));
  CHECK_FALSE(should_merge(Plane::canonical({1, 0, 0}, 0), Plane::canonical({0, 1, 0}, 0), 0.8, 0.2));
  CHECK_FALSE(should_merge(Plane::canonical({0, 0, 1}, 0), Plane::canonical({0, 0, 1}, -0.5), 0.8, 0.2));
  CHECK(should_merge(Plane::canonical({0, 0, 1}, 0.05), Plane::canonical({0, 0.1, 1}, 0.1), 0.8, 0.2));
  // The literal form only compares offset signs.
  CHECK(should_merge(Plane::canonical({0, 0, 1}, 0.1), Plane::canonical({0, 0, 1}, 5.0), 0.8, 0.2, true));

  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const Plane p = Plane::canonical({g(rng), g(rng), g(rng)}, 0.3 * g(rng));
    const Plane q = Plane::canonical({g(rng), g(rng), g(rng)}, 0.3 * g(rng));
    CHECK(should_merge(p, q, 0.5, 0.3) == should_merge(q, p, 0.5, 0.3));
  }
}

TEST_CASE("merging two halves of one exact plane") {
  const Plane truth = Plane::canonical(Eigen::Vector3d(0.2, -0.3, 1).normalized(), 1.5);
  auto left = plane_points(truth, 60, 0, 1, {-1, -1}, {0, 1});
  auto right = plane_points(truth, 60, 0, 2, {0, -1}, {1, 1});
  std::vector<MapPoint> pts = left;
  for (auto p : right) {
    p.id = pts.size();
    pts.push_back(p);
  }
  const auto fa = fit_plane_lsq(std::span<const MapPoint>(left));
  const auto fb = fit_plane_lsq(std::span<const MapPoint>(right));
  REQUIRE(fa);
  REQUIRE(fb);
  const auto merged = merge_planes(landmark(*fa, iota_ids(0, 60)), landmark(*fb, iota_ids(60, 120)), pts,
                                   FitConfig{}, 4);
  REQUIRE(merged);
  CHECK((merged->plane.normal - truth.normal).norm() < 1e-9);
  CHECK(std::abs(merged->plane.offset - truth.offset) < 1e-9);
  CHECK(merged->point_ids.size() == 120);
}

TEST_CASE("merging noisy patches of one plane") {
  const Plane truth = Plane::canonical(Eigen::Vector3d(0, 0.2, 1).normalized(), 2.0);
  auto a = plane_points(truth, 80, 0.004, 11, {-1, -1}, {0, 1});
  auto b = plane_points(truth, 80, 0.004, 12, {0.1, -1}, {1, 1});
  std::vector<MapPoint> pts = a;
  for (auto p : b) {
    p.id = pts.size();
    pts.push_back(p);
  }
  const auto fa = fit_plane_lsq(std::span<const MapPoint>(a));
  const auto fb = fit_plane_lsq(std::span<const MapPoint>(b));
  REQUIRE(fa);
  REQUIRE(fb);
  const auto merged = merge_planes(landmark(*fa, iota_ids(0, 80)), landmark(*fb, iota_ids(80, 160)), pts,
                                   FitConfig{}, 8);
  REQUIRE(merged);
  const double worst_input = std::max(normal_angle_deg(*fa, truth), normal_angle_deg(*fb, truth));
  CHECK(normal_angle_deg(merged->plane, truth) <= worst_input + 0.5);
  CHECK(merged->point_ids.size() >= 150);
}

TEST_CASE("merging a colinear union aborts") {
  std::vector<MapPoint> line;
  for (std::size_t i = 0; i < 10; ++i) line.push_back({{double(i), double(i), 0}, {}, i});
  const Plane z0 = Plane::canonical({0, 0, 1}, 0);
  CHECK_FALSE(merge_planes(landmark(z0, iota_ids(0, 5)), landmark(z0, iota_ids(5, 10)), line, FitConfig{}, 1));
}

TEST_CASE("merge sweep marks the absorbed plane dead") {
  const Plane truth = Plane::canonical({0, 0, 1}, 1.0);
  auto pts = plane_points(truth, 100, 0.0, 5);
  std::vector<PlaneLandmark> map{landmark(truth, iota_ids(0, 50)), landmark(truth, iota_ids(50, 100))};
  CHECK(merge_sweep(map, pts, FitConfig{}, 3) == 1);
  CHECK(map[0].alive);
  CHECK_FALSE(map[1].alive);
  CHECK(map[0].point_ids.size() == 100);
}

TEST_CASE("expansion") {
  const Plane z0 = Plane::canonical({0, 0, 1}, 0);
  std::vector<MapPoint> pts{{{0, 0, 0.5}, {}, 0}, {{1, 0, 0.01}, {}, 1}, {{0, 1, -0.02}, {}, 2},
                            {{3, 3, 0.3}, {}, 3}};
  PlaneLandmark lm = landmark(z0, {});
  std::vector<std::size_t> free_ids{0, 3};
  CHECK(expand_plane(lm, free_ids, pts, 0.02) == 0);
  free_ids = {0, 1, 2, 3};
  CHECK(expand_plane(lm, free_ids, pts, 0.02) == 2);
  CHECK(lm.point_ids == std::vector<std::size_t>{1, 2});
  CHECK(free_ids == std::vector<std::size_t>{0, 3});
  lm.alive = false;
  CHECK_THROWS_AS(expand_plane(lm, free_ids, pts, 0.02), std::invalid_argument);
}

TEST_CASE("cull then expand is stable on a second pass") {
  const Scene scene = synth_scene(two_plane_spec(9, 0.0, 0.01, 0.1));
  std::vector<PlaneLandmark> map;
  for (std::size_t k = 0; k < 2; ++k) {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < scene.points.size(); ++i) {
      if (scene.points[i].prior_label == static_cast<int>(k)) ids.push_back(i);
    }
    map.push_back(landmark(scene.truth.planes[k], ids));
  }
  auto pass = [&] {
    cull_nonplanar(map, scene.points, 0.02);
    auto free_ids = unassigned_points(map, scene.points.size());
    for (auto& lm : map) expand_plane(lm, free_ids, scene.points, 0.02);
  };
  pass();
  const auto once = map;
  pass();
  for (std::size_t k = 0; k < map.size(); ++k) CHECK(map[k].point_ids == once[k].point_ids);
}

TEST_CASE("projection") {
  const Plane z0 = Plane::canonical({0, 0, 1}, 0);
  CHECK(project_onto_plane(z0, {{1, 1, 3}, {}, 0}).position == Eigen::Vector3d(1, 1, 0));
  CHECK(project_onto_plane(z0, {{2, 5, 0}, {}, 0}).position == Eigen::Vector3d(2, 5, 0));
  CHECK(project_onto_plane(z0, {{0, 0, -2}, {}, 0}).position == Eigen::Vector3d(0, 0, 0));

  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Plane p = Plane::canonical({g(rng), g(rng), g(rng)}, g(rng));
    const MapPoint v{{3 * g(rng), 3 * g(rng), 3 * g(rng)}, {}, 0};
    const MapPoint once = project_onto_plane(p, v);
    CHECK(std::abs(p.normal.dot(once.position) + p.offset) < 1e-9);
    CHECK((project_onto_plane(p, once).position - once.position).norm() < 1e-9);
  }
}
