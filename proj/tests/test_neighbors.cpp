#include <doctest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "seqgc/neighbors.hpp"

using namespace seqgc;

namespace {

Correspondence at(double x, double y, std::size_t id) {
  Correspondence c;
  c.ref_point = {x, y};
  c.cur_point = {x, y};
  c.id = id;
  return c;
}

std::vector<std::pair<std::size_t, std::size_t>> pairs_of(const NeighborGraph& g) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& e : g.edges()) out.emplace_back(e.i, e.j);
  return out;
}

}  // namespace

TEST_CASE("grid graph: same cell gives one edge") {
  const std::vector<Correspondence> pts{at(5, 5, 0), at(6, 7, 1)};
  const auto g = grid_graph(pts, {640, 480}, 8);
  REQUIRE(g.edges().size() == 1);
  CHECK(g.edges()[0] == Edge{0, 1, 1.0});
  CHECK(g.kind() == GraphKind::grid);
}

TEST_CASE("grid graph: far cells are not adjacent") {
  const std::vector<Correspondence> pts{at(10, 10, 0), at(630, 470, 1)};
  CHECK(grid_graph(pts, {640, 480}, 8).edges().empty());
}

TEST_CASE("grid graph: 3x3 block of cells has 20 edges") {
  std::vector<Correspondence> pts;
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 3; ++x) pts.push_back(at(50 + 100 * x, 50 + 100 * y, pts.size()));
  }
  const auto g = grid_graph(pts, {300, 300}, 3);
  CHECK(g.edges().size() == 20);
  CHECK_FALSE(g.adjacent(0, 8));
  CHECK(g.adjacent(4, 0));
  CHECK(g.adjacent(8, 4));
}

TEST_CASE("grid graph: out-of-image point names its id") {
  const std::vector<Correspondence> pts{at(1, 1, 0), at(640, 10, 42)};
  try {
    (void)grid_graph(pts, {640, 480}, 8);
    FAIL("expected an exception");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("42") != std::string::npos);
  }
  const std::vector<Correspondence> neg{at(-0.5, 1, 3)};
  CHECK_THROWS_AS(grid_cells(neg, {640, 480}, 8), std::domain_error);
}

TEST_CASE("grid graph is invariant under whole-cell shifts") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ux(0, 400), uy(0, 300);
  std::vector<Correspondence> pts, shifted;
  for (std::size_t i = 0; i < 60; ++i) {
    const double x = ux(rng), y = uy(rng);
    pts.push_back(at(x, y, i));
    shifted.push_back(at(x + 2 * 80, y + 60, i));  // cells are 80 x 60 on 640 x 480
  }
  CHECK(grid_graph(pts, {640, 480}, 8).edges() == grid_graph(shifted, {640, 480}, 8).edges());
}

TEST_CASE("neighbor graph invariants are enforced") {
  CHECK_THROWS_AS(NeighborGraph(3, {{1, 1, 1.0}}, GraphKind::radius, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(NeighborGraph(3, {{0, 1, 1.0}, {1, 0, 1.0}}, GraphKind::radius, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(NeighborGraph(3, {{0, 3, 1.0}}, GraphKind::radius, 1.0), std::out_of_range);
  CHECK_THROWS_AS(NeighborGraph(3, {{0, 1, 0.0}}, GraphKind::radius, 1.0), std::invalid_argument);
  const NeighborGraph g(3, {{2, 0, 0.5}}, GraphKind::radius, 1.0);
  CHECK(g.edges()[0] == Edge{0, 2, 0.5});
  CHECK(g.adjacent(0, 2));
  CHECK(g.adjacent(2, 0));
  CHECK_FALSE(g.adjacent(0, 1));
}

TEST_CASE("radius graph: boundary is inclusive") {
  std::vector<MapPoint> pts;
  for (int i = 0; i < 4; ++i) pts.push_back({{0.5 * i, 0, 0}, {}, static_cast<std::size_t>(i)});
  const auto g = radius_graph(pts, 0.5);
  const std::vector<std::pair<std::size_t, std::size_t>> chain{{0, 1}, {1, 2}, {2, 3}};
  CHECK(pairs_of(g) == chain);
}

TEST_CASE("radius graph: single point has no edges") {
  const std::vector<MapPoint> pts{{{1, 2, 3}, {}, 0}};
  CHECK(radius_graph(pts, 1.0).edges().empty());
}

TEST_CASE("radius graph equals the brute-force scan") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0, 1);
  for (int round = 0; round < 10; ++round) {
    std::vector<MapPoint> pts;
    for (std::size_t i = 0; i < 100; ++i) pts.push_back({{u(rng), u(rng), u(rng)}, {}, i});
    const auto g = radius_graph(pts, 0.2);
    CHECK(pairs_of(g) == oracle::radius_pairs(pts, 0.2));
    for (const auto& e : g.edges()) CHECK(g.adjacent(e.j, e.i));
  }
}

TEST_CASE("k-d tree radius search matches a scan, including duplicates") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> grid(0, 4);
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < 300; ++i) pts.emplace_back(0.25 * grid(rng), 0.25 * grid(rng), 0.25 * grid(rng));
  const KdTree tree(pts, 4);
  for (int q = 0; q < 50; ++q) {
    const Eigen::Vector3d c = pts[static_cast<std::size_t>(q)];
    std::vector<std::size_t> expect;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if ((pts[i] - c).squaredNorm() <= 0.25 * 0.25) expect.push_back(i);
    }
    CHECK(tree.radius_search(c, 0.25) == expect);
  }
}
