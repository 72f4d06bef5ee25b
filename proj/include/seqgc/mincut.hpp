#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "seqgc/neighbors.hpp"
#include "seqgc/types.hpp"

namespace seqgc {

struct PottsEdge {
  std::size_t i = 0;
  std::size_t j = 0;
  double penalty = 0.0;  // paid iff labels of i and j differ
};

/// Binary labeling energy: per-node unary costs plus Potts pairwise terms.
class ProblemGraph {
 public:
  ProblemGraph() = default;
  /// Throws std::invalid_argument on negative or non-finite costs and on
  /// out-of-range edge endpoints.
  ProblemGraph(std::vector<double> cost_inlier, std::vector<double> cost_outlier,
               std::vector<PottsEdge> edges);

  std::size_t node_count() const { return cost_inlier_.size(); }
  const std::vector<double>& cost_inlier() const { return cost_inlier_; }
  const std::vector<double>& cost_outlier() const { return cost_outlier_; }
  const std::vector<PottsEdge>& edges() const { return edges_; }

  double energy(std::span<const Label> labeling) const;

 private:
  std::vector<double> cost_inlier_;
  std::vector<double> cost_outlier_;
  std::vector<PottsEdge> edges_;
};

struct CutResult {
  std::vector<Label> labeling;
  double energy = 0.0;
};

/// Truncated Gaussian kernel exp(-r^2 / (2 eps^2)), zero beyond 3 eps.
double gaussian_kernel(double residual, double threshold);

/// Unaries: inlier cost 1 - K(r), outlier cost K(r). Every neighbor edge
/// contributes a Potts penalty lambda * w_pq.
ProblemGraph build_problem_graph(std::span<const double> residuals, double threshold,
                                 const NeighborGraph& graph, double lambda);

/// Exact minimizer via max-flow. Among minimizers, returns the one with the
/// largest inlier set.
CutResult min_cut(const ProblemGraph& g);

/// Debug dump of the s-t network: node count line (terminals included, source
/// = n, sink = n + 1) followed by `u v cap` lines.
void write_problem_graph(std::ostream& out, const ProblemGraph& g);

}  // namespace seqgc
