#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "seqgc/io.hpp"
#include "seqgc/pipeline.hpp"
#include "seqgc/report.hpp"
#include "seqgc/scene.hpp"

using namespace seqgc;

TEST_CASE("point csv round trip") {
  const Scene scene = synth_scene(two_plane_spec(1, 0.3, 0.01, 0.1, 40));
  std::stringstream io;
  write_points_csv(io, scene.points);
  const auto back = read_points_csv(io);
  REQUIRE(back.size() == scene.points.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].id == scene.points[i].id);
    CHECK(back[i].position == scene.points[i].position);
    CHECK(back[i].prior_label == scene.points[i].prior_label);
  }
}

TEST_CASE("match csv and mask round trip") {
  std::vector<Correspondence> m(3);
  for (std::size_t i = 0; i < 3; ++i) {
    m[i].id = 10 + i;
    m[i].ref_point = {0.1 * i, 1.0 / 3.0};
    m[i].cur_point = {2.5, -double(i)};
    if (i != 1) m[i].prior_label = int(i);
  }
  std::stringstream io;
  write_matches_csv(io, m);
  const auto back = read_matches_csv(io);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].id == m[i].id);
    CHECK(back[i].ref_point == m[i].ref_point);
    CHECK(back[i].cur_point == m[i].cur_point);
    CHECK(back[i].prior_label == m[i].prior_label);
  }

  std::vector<MapPoint> pts{{{0, 0, 0}, 1, 4}, {{1, 0, 0}, std::nullopt, 7}};
  std::stringstream mask;
  write_mask_csv(mask, pts);
  auto fresh = pts;
  for (auto& p : fresh) p.prior_label = 5;
  apply_mask(fresh, read_mask_csv(mask));
  CHECK(fresh[0].prior_label == 1);
  CHECK_FALSE(fresh[1].prior_label);
}

TEST_CASE("malformed csv names the line") {
  std::istringstream in("id,x,y,z\n0,1,2,3\n1,1,abc,3\n");
  try {
    (void)read_points_csv(in);
    FAIL("expected an exception");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::istringstream short_row("0,1,2\n");
  CHECK_THROWS_AS(read_points_csv(short_row), DataError);
  std::istringstream bad_label("0,1,2,3,x\n");
  CHECK_THROWS_AS(read_points_csv(bad_label), DataError);
}

TEST_CASE("ply with three vertices") {
  std::istringstream in(
      "ply\nformat ascii 1.0\ncomment test\nelement vertex 3\nproperty float x\n"
      "property float y\nproperty float z\nproperty uchar red\nelement face 0\n"
      "property list uchar int vertex_indices\nend_header\n0 0 0 255\n1 0 0 0\n0 1 0.5 3\n");
  const auto pts = read_points_ply(in);
  REQUIRE(pts.size() == 3);
  CHECK(pts[2].position == Eigen::Vector3d(0, 1, 0.5));
  CHECK(pts[2].id == 2);

  std::stringstream io;
  write_points_ply(io, pts);
  CHECK(read_points_ply(io).size() == 3);

  std::istringstream binary("ply\nformat binary_little_endian 1.0\nend_header\n");
  CHECK_THROWS_AS(read_points_ply(binary), DataError);
}

TEST_CASE("format resolution") {
  CHECK(point_format("", "a/b/points.PLY") == PointFormat::ply);
  CHECK(point_format("csv", "x.ply") == PointFormat::csv);
  CHECK_THROWS_AS(point_format("", "points.xyz"), UsageError);
  CHECK_THROWS_AS(point_format("obj"), UsageError);
}

TEST_CASE("mask errors and label compaction") {
  std::vector<MapPoint> pts{{{0, 0, 0}, {}, 0}, {{1, 0, 0}, {}, 1}};
  CHECK_THROWS_AS(apply_mask(pts, {{5, 1}}), DataError);
  CHECK_THROWS_AS(apply_mask(pts, {{0, 1}, {0, 2}}), DataError);
  pts[0].prior_label = 7;
  pts[1].prior_label = 3;
  compact_labels(pts);
  CHECK(pts[0].prior_label == 1);
  CHECK(pts[1].prior_label == 0);
}

TEST_CASE("scene: one clean plane satisfies its equation") {
  PatchSpec patch;
  patch.plane = Plane::canonical(Eigen::Vector3d(1, 2, 3).normalized(), 0.7);
  SceneSpec spec;
  spec.patches = {patch};
  spec.points_per_plane = 100;
  const Scene scene = synth_scene(spec);
  for (const auto& p : scene.points) {
    CHECK(std::abs(patch.plane.signed_distance(p.position)) < 1e-12);
  }
  CHECK(scene.prior.instance_count() == 1);
}

TEST_CASE("scene: leak count matches the generator ledger") {
  const Scene scene = synth_scene(two_plane_spec(3, 0.3, 0.01, 0.1));
  REQUIRE(scene.truth.boundary_counts.size() == 2);
  std::size_t expected = 0;
  for (const auto n : scene.truth.boundary_counts) {
    expected += static_cast<std::size_t>(std::floor(0.3 * static_cast<double>(n)));
  }
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    const int t = scene.truth.point_plane[i];
    if (t >= 0 && scene.points[i].prior_label != t) ++wrong;
  }
  CHECK(wrong == expected);
  CHECK(scene.truth.leaked.size() == expected);
  CHECK(expected == 150);
}

TEST_CASE("scene: same seed, same bytes; bad specs fail") {
  const auto spec = two_plane_spec(4, 0.2, 0.01, 0.1);
  std::ostringstream a, b;
  write_points_csv(a, synth_scene(spec).points);
  write_points_csv(b, synth_scene(spec).points);
  CHECK(a.str() == b.str());

  SceneSpec none;
  CHECK_THROWS_AS(synth_scene(none), std::invalid_argument);
  auto bad = spec;
  bad.leak_fraction = 1.5;
  CHECK_THROWS_AS(synth_scene(bad), std::invalid_argument);
  bad = spec;
  bad.noise_sigma = -1;
  CHECK_THROWS_AS(synth_scene(bad), std::invalid_argument);

  std::istringstream text("seed = 3\nplane = 0 0 1 -1 0 0 1 0.5 0.5\nunlabeled_fraction = 0.1\n");
  const auto parsed = parse_scene_spec(text);
  CHECK(parsed.seed == 3);
  REQUIRE(parsed.patches.size() == 1);
  CHECK(parsed.unlabeled_fraction == 0.1);
  const Scene s = synth_scene(parsed);
  CHECK(s.truth.unlabeled.size() == 20);
}

TEST_CASE("pipeline: clean scene recovered by every mode") {
  const Scene scene = synth_scene(two_plane_spec(2, 0.0, 0.0, 0.0));
  for (const auto mode : {PipelineMode::gc, PipelineMode::seq_ransac, PipelineMode::per_mask_lsq}) {
    const auto result = run_pipeline(scene.points, scene.prior, FitConfig{}, mode, 1);
    REQUIRE(result.models.size() == 2);
    const auto report = evaluate(result.models, scene.truth.planes, scene.truth.point_plane);
    for (const auto& m : report.models) {
      REQUIRE(m.truth);
      CHECK(m.angle_deg < 0.5);
    }
    CHECK(report.false_positives == 0);
  }
}

TEST_CASE("pipeline: empty prior yields no models") {
  const Scene scene = synth_scene(two_plane_spec(2, 0.0, 0.0, 0.0, 20));
  const auto prior = SegmentationPrior::from_labels(std::vector<std::optional<int>>(scene.points.size()));
  for (const auto mode : {PipelineMode::gc, PipelineMode::per_mask_lsq}) {
    const auto result = run_pipeline(scene.points, prior, FitConfig{}, mode, 1);
    CHECK(result.models.empty());
    REQUIRE(result.notes.size() == 1);
    CHECK(result.notes[0] == "no proposals");
  }
  CHECK_THROWS_AS(run_pipeline(scene.points, SegmentationPrior{}, FitConfig{}, PipelineMode::gc, 1),
                  std::invalid_argument);
}

TEST_CASE("pipeline: graph-cut fitting beats per-mask least squares under leakage") {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Scene scene = synth_scene(two_plane_spec(100 + seed, 0.3, 0.01, 0.1));
    const auto gc = run_pipeline(scene.points, scene.prior, FitConfig{}, PipelineMode::gc, seed);
    const auto lsq = run_pipeline(scene.points, scene.prior, FitConfig{}, PipelineMode::per_mask_lsq, seed);
    const auto eg = evaluate(gc.models, scene.truth.planes, scene.truth.point_plane);
    const auto el = evaluate(lsq.models, scene.truth.planes, scene.truth.point_plane);
    if (eg.mean_angle_deg < el.mean_angle_deg) ++wins;
  }
  CHECK(wins == 5);
}

TEST_CASE("evaluation agrees with a confusion-matrix recount") {
  const Scene scene = synth_scene(two_plane_spec(6, 0.3, 0.01, 0.1));
  const auto result = run_pipeline(scene.points, scene.prior, FitConfig{}, PipelineMode::gc, 3);
  const auto report = evaluate(result.models, scene.truth.planes, scene.truth.point_plane);
  for (const auto& m : report.models) {
    if (!m.truth) continue;
    const std::set<std::size_t> est(result.models[m.model].point_ids.begin(),
                                    result.models[m.model].point_ids.end());
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < scene.points.size(); ++i) {
      const bool predicted = est.count(i) > 0;
      const bool actual = scene.truth.point_plane[i] == static_cast<int>(*m.truth);
      tp += predicted && actual;
      fp += predicted && !actual;
      fn += !predicted && actual;
    }
    CHECK(m.precision == doctest::Approx(double(tp) / double(tp + fp)).epsilon(1e-15));
    CHECK(m.recall == doctest::Approx(double(tp) / double(tp + fn)).epsilon(1e-15));
    CHECK(m.precision >= 0.0);
    CHECK(m.precision <= 1.0);
    CHECK(m.recall >= 0.0);
    CHECK(m.recall <= 1.0);
  }
}

TEST_CASE("evaluation: unmatched estimates are false positives") {
  const std::vector<Plane> truth{Plane::canonical({0, 0, 1}, 0)};
  std::vector<PlaneModel> models{{Plane::canonical({0, 0.1, 1}, 0), {0}}, {Plane::canonical({1, 0, 0}, 0), {1}}};
  const std::vector<int> labels{0, -1, 0};
  const auto r = evaluate(models, truth, labels);
  CHECK(r.false_positives == 1);
  CHECK(r.models[0].truth == 0u);
  CHECK_FALSE(r.models[1].truth);
  CHECK(r.models[0].recall == 0.5);
  CHECK(r.misclassification_rate == doctest::Approx(2.0 / 3.0));
  CHECK(r.missed_truth.empty());
}

TEST_CASE("reports are reproducible and parse back") {
  const Scene scene = synth_scene(two_plane_spec(8, 0.3, 0.01, 0.1));
  auto run = [&] {
    const auto r = run_pipeline(scene.points, scene.prior, FitConfig{}, PipelineMode::gc, 5);
    return to_json(r, scene.points, false).dump(2);
  };
  const std::string a = run();
  CHECK(a == run());
  const auto models = models_from_json(nlohmann::json::parse(a));
  const auto truth = truth_from_json(to_json(scene.truth));
  CHECK(truth.point_plane == scene.truth.point_plane);
  CHECK(!models.empty());
}
