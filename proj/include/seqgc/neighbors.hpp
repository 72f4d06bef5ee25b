#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "seqgc/types.hpp"

namespace seqgc {

struct Edge {
  std::size_t i = 0;  // i < j
  std::size_t j = 0;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

enum class GraphKind { grid, radius };

/// Undirected neighborhood graph. Edges are unique, sorted by (i, j), with
/// i < j and positive weight.
class NeighborGraph {
 public:
  NeighborGraph() = default;
  NeighborGraph(std::size_t node_count, std::vector<Edge> edges, GraphKind kind, double parameter);

  std::size_t node_count() const { return node_count_; }
  const std::vector<Edge>& edges() const { return edges_; }
  GraphKind kind() const { return kind_; }
  /// Cells per axis for grid graphs, radius for radius graphs.
  double parameter() const { return parameter_; }

  bool adjacent(std::size_t a, std::size_t b) const;

 private:
  std::size_t node_count_ = 0;
  std::vector<Edge> edges_;
  GraphKind kind_ = GraphKind::grid;
  double parameter_ = 0.0;
};

struct ImageSize {
  double width = 0.0;
  double height = 0.0;
};

using GridCell = std::array<int, 2>;

/// Cell of every reference-frame point on a cells_per_axis x cells_per_axis
/// grid. Throws std::domain_error naming the first point outside the image.
std::vector<GridCell> grid_cells(std::span<const Correspondence> points, ImageSize image,
                                 int cells_per_axis);

/// Same-cell and 8-connected neighboring-cell adjacency.
NeighborGraph grid_graph(std::span<const Correspondence> points, ImageSize image,
                         int cells_per_axis, double weight = 1.0);

/// Static 3-D k-d tree answering exact radius queries.
class KdTree {
 public:
  explicit KdTree(std::vector<Eigen::Vector3d> points, std::size_t leaf_size = 8);

  /// Indices with |p - query| <= radius, ascending.
  std::vector<std::size_t> radius_search(const Eigen::Vector3d& query, double radius) const;

  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    int axis = -1;  // -1 for leaves
    double split = 0.0;
    int left = -1;
    int right = -1;
  };

  int build(std::size_t begin, std::size_t end);
  void search(int node, const Eigen::Vector3d& q, double r2, std::vector<std::size_t>& out) const;

  std::vector<Eigen::Vector3d> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_;
};

/// Edge (i, j) iff |v_i - v_j| <= radius.
NeighborGraph radius_graph(std::span<const MapPoint> points, double radius, double weight = 1.0);

}  // namespace seqgc
