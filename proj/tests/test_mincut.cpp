#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "seqgc/mincut.hpp"
#include "seqgc/neighbors.hpp"

using namespace seqgc;

TEST_CASE("kernel unaries") {
  const NeighborGraph none(3, {}, GraphKind::radius, 1.0);
  const std::vector<double> r{0.0, 1e9, 0.02};
  const auto g = build_problem_graph(r, 0.02, none, 0.6);
  CHECK(g.cost_inlier()[0] == 0.0);
  CHECK(g.cost_outlier()[0] == 1.0);
  CHECK(g.cost_inlier()[1] == 1.0);
  CHECK(g.cost_outlier()[1] == 0.0);
  CHECK(g.cost_outlier()[2] == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  CHECK(g.cost_outlier()[2] == doctest::Approx(0.6065).epsilon(1e-4));
  CHECK(gaussian_kernel(3.0 * 0.02, 0.02) > 0.0);
  CHECK(gaussian_kernel(3.0 * 0.02 * (1 + 1e-12), 0.02) == 0.0);
}

TEST_CASE("problem graph edges carry lambda times the weight") {
  const NeighborGraph g(3, {{0, 1, 2.0}, {1, 2, 0.5}}, GraphKind::radius, 1.0);
  const std::vector<double> r{0, 0, 0};
  const auto pg = build_problem_graph(r, 1.0, g, 0.5);
  REQUIRE(pg.edges().size() == 2);
  CHECK(pg.edges()[0].penalty == 1.0);
  CHECK(pg.edges()[1].penalty == 0.25);
  CHECK(build_problem_graph(r, 1.0, g, 0.0).edges().empty());
  const std::vector<double> neg{0, -1e-3, 0};
  CHECK_THROWS_AS(build_problem_graph(neg, 1.0, g, 0.5), std::domain_error);
}

TEST_CASE("problem graph validation") {
  CHECK_THROWS_AS(ProblemGraph({-0.1}, {0.5}, {}), std::invalid_argument);
  CHECK_THROWS_AS(ProblemGraph({0.1}, {NAN}, {}), std::invalid_argument);
  CHECK_THROWS_AS(ProblemGraph({0.1, 0.2}, {0.5, 0.5}, {{0, 2, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(ProblemGraph({0.1}, {0.5, 0.5}, {}), std::invalid_argument);
}

TEST_CASE("three-node chain") {
  const ProblemGraph g({0, 0.6, 0}, {1, 0.4, 1}, {{0, 1, 0.3}, {1, 2, 0.3}});
  const auto cut = min_cut(g);
  CHECK(cut.labeling == std::vector<Label>(3, Label::inlier));
  CHECK(cut.energy == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(oracle::min_energy(g) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("without pairwise terms the cut thresholds the kernel") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 0.08);
  std::vector<double> r(200);
  for (auto& x : r) x = u(rng);
  const NeighborGraph graph(200, {}, GraphKind::radius, 1.0);
  const auto cut = min_cut(build_problem_graph(r, 0.02, graph, 0.0));
  for (std::size_t i = 0; i < r.size(); ++i) {
    const bool inlier = gaussian_kernel(r[i], 0.02) >= 0.5;
    CHECK((cut.labeling[i] == Label::inlier) == inlier);
  }
}

TEST_CASE("ties go to the inlier label") {
  const ProblemGraph g({0.5, 0.5}, {0.5, 0.5}, {{0, 1, 1.0}});
  const auto cut = min_cut(g);
  CHECK(cut.labeling == std::vector<Label>(2, Label::inlier));
  const ProblemGraph single({0.3}, {0.3}, {});
  CHECK(min_cut(single).labeling[0] == Label::inlier);
}

TEST_CASE("min cut equals exhaustive search on small graphs") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> size(1, 12);
  std::uniform_real_distribution<double> density(0.0, 1.0);
  for (int i = 0; i < 150; ++i) {
    const auto g = oracle::random_problem(rng, size(rng), density(rng));
    const auto cut = min_cut(g);
    CHECK(cut.energy == doctest::Approx(oracle::min_energy(g)).epsilon(1e-12));
    CHECK(std::abs(cut.energy - g.energy(cut.labeling)) < 1e-9);
  }
}

TEST_CASE("raising a unary cost never lowers the optimum") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const auto g = oracle::random_problem(rng, 8, 0.4);
    auto ci = g.cost_inlier();
    auto co = g.cost_outlier();
    const std::size_t node = static_cast<std::size_t>(u(rng) * 8) % 8;
    (u(rng) < 0.5 ? ci : co)[node] += u(rng);
    const ProblemGraph bumped(ci, co, g.edges());
    CHECK(min_cut(bumped).energy >= min_cut(g).energy - 1e-12);
  }
}

TEST_CASE("empty graph and debug dump") {
  const auto empty = min_cut(ProblemGraph({}, {}, {}));
  CHECK(empty.labeling.empty());
  CHECK(empty.energy == 0.0);

  const ProblemGraph g({0.25}, {0.75}, {});
  std::ostringstream out;
  write_problem_graph(out, g);
  std::istringstream in(out.str());
  int nodes = 0;
  in >> nodes;
  CHECK(nodes == 3);
}
