#include "seqgc/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace seqgc {

NeighborGraph::NeighborGraph(std::size_t node_count, std::vector<Edge> edges, GraphKind kind,
                             double parameter)
    : node_count_(node_count), edges_(std::move(edges)), kind_(kind), parameter_(parameter) {
  for (auto& e : edges_) {
    if (e.i == e.j) throw std::invalid_argument("self-edge in neighbor graph");
    if (e.i > e.j) std::swap(e.i, e.j);
    if (e.j >= node_count_) throw std::out_of_range("edge endpoint out of range");
    if (!(e.weight > 0.0)) throw std::invalid_argument("edge weights must be positive");
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });
  const auto dup = std::adjacent_find(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return a.i == b.i && a.j == b.j;
  });
  if (dup != edges_.end()) throw std::invalid_argument("duplicate edge in neighbor graph");
}

bool NeighborGraph::adjacent(std::size_t a, std::size_t b) const {
  if (a > b) std::swap(a, b);
  const auto it = std::lower_bound(edges_.begin(), edges_.end(), std::make_pair(a, b),
                                   [](const Edge& e, const std::pair<std::size_t, std::size_t>& k) {
                                     return std::tie(e.i, e.j) < std::tie(k.first, k.second);
                                   });
  return it != edges_.end() && it->i == a && it->j == b;
}

std::vector<GridCell> grid_cells(std::span<const Correspondence> points, ImageSize image,
                                 int cells_per_axis) {
  if (!(image.width > 0.0) || !(image.height > 0.0)) {
    throw std::domain_error("image size must be positive");
  }
  if (cells_per_axis < 1) throw std::domain_error("cells_per_axis must be >= 1");

  const double cell_w = image.width / cells_per_axis;
  const double cell_h = image.height / cells_per_axis;
  std::vector<GridCell> cells;
  cells.reserve(points.size());
  for (const auto& c : points) {
    const double x = c.ref_point.x();
    const double y = c.ref_point.y();
    if (!(x >= 0.0 && x < image.width && y >= 0.0 && y < image.height)) {
      throw std::domain_error("correspondence " + std::to_string(c.id) +
                              " lies outside the reference image");
    }
    const int cx = std::min(cells_per_axis - 1, static_cast<int>(x / cell_w));
    const int cy = std::min(cells_per_axis - 1, static_cast<int>(y / cell_h));
    cells.push_back({cx, cy});
  }
  return cells;
}

NeighborGraph grid_graph(std::span<const Correspondence> points, ImageSize image,
                         int cells_per_axis, double weight) {
  const auto cells = grid_cells(points, image, cells_per_axis);

  std::map<GridCell, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < cells.size(); ++i) buckets[cells[i]].push_back(i);

  std::vector<Edge> edges;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        const auto it = buckets.find({cells[i][0] + dx, cells[i][1] + dy});
        if (it == buckets.end()) continue;
        for (const std::size_t j : it->second) {
          if (j > i) edges.push_back({i, j, weight});
        }
      }
    }
  }
  return NeighborGraph(points.size(), std::move(edges), GraphKind::grid, cells_per_axis);
}

KdTree::KdTree(std::vector<Eigen::Vector3d> points, std::size_t leaf_size)
    : points_(std::move(points)), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (!points_.empty()) build(0, points_.size());
}

int KdTree::build(std::size_t begin, std::size_t end) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= leaf_size_) return index;

  Eigen::Vector3d lo = points_[order_[begin]];
  Eigen::Vector3d hi = lo;
  for (std::size_t k = begin; k < end; ++k) {
    lo = lo.cwiseMin(points_[order_[k]]);
    hi = hi.cwiseMax(points_[order_[k]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return index;  // all coincident

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[order_[mid]][axis];

  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[index].axis = axis;
  nodes_[index].split = split;
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

void KdTree::search(int node, const Eigen::Vector3d& q, double r2,
                    std::vector<std::size_t>& out) const {
  const Node& n = nodes_[node];
  if (n.axis < 0) {
    for (std::size_t k = n.begin; k < n.end; ++k) {
      const std::size_t idx = order_[k];
      if ((points_[idx] - q).squaredNorm() <= r2) out.push_back(idx);
    }
    return;
  }
  // Left holds coordinates <= split, right holds >= split.
  const double delta = q[n.axis] - n.split;
  if (delta <= 0.0 || delta * delta <= r2) search(n.left, q, r2, out);
  if (delta >= 0.0 || delta * delta <= r2) search(n.right, q, r2, out);
}

std::vector<std::size_t> KdTree::radius_search(const Eigen::Vector3d& query, double radius) const {
  std::vector<std::size_t> out;
  if (points_.empty()) return out;
  search(0, query, radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

NeighborGraph radius_graph(std::span<const MapPoint> points, double radius, double weight) {
  if (!(radius > 0.0)) throw std::domain_error("neighbor radius must be positive");

  std::vector<Eigen::Vector3d> positions;
  positions.reserve(points.size());
  for (const auto& p : points) positions.push_back(p.position);
  const KdTree tree(positions);

  std::vector<Edge> edges;
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (const std::size_t j : tree.radius_search(positions[i], radius)) {
      // Exact post-filter with the same expression as the brute-force definition.
      if (j > i && (positions[i] - positions[j]).squaredNorm() <= r2) {
        edges.push_back({i, j, weight});
      }
    }
  }
  return NeighborGraph(points.size(), std::move(edges), GraphKind::radius, radius);
}

}  // namespace seqgc
