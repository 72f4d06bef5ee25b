#include "seqgc/mincut.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace seqgc {

ProblemGraph::ProblemGraph(std::vector<double> cost_inlier, std::vector<double> cost_outlier,
                           std::vector<PottsEdge> edges)
    : cost_inlier_(std::move(cost_inlier)),
      cost_outlier_(std::move(cost_outlier)),
      edges_(std::move(edges)) {
  if (cost_inlier_.size() != cost_outlier_.size()) {
    throw std::invalid_argument("unary cost vectors differ in length");
  }
  for (std::size_t i = 0; i < cost_inlier_.size(); ++i) {
    const double a = cost_inlier_[i];
    const double b = cost_outlier_[i];
    if (!std::isfinite(a) || !std::isfinite(b) || a < 0.0 || b < 0.0) {
      throw std::invalid_argument("unary costs must be finite and non-negative");
    }
  }
  for (const auto& e : edges_) {
    if (e.i >= node_count() || e.j >= node_count() || e.i == e.j) {
      throw std::invalid_argument("invalid pairwise edge endpoints");
    }
    if (!std::isfinite(e.penalty) || e.penalty < 0.0) {
      throw std::invalid_argument("pairwise penalties must be finite and non-negative");
    }
  }
}

double ProblemGraph::energy(std::span<const Label> labeling) const {
  if (labeling.size() != node_count()) throw std::invalid_argument("labeling size mismatch");
  double e = 0.0;
  for (std::size_t i = 0; i < node_count(); ++i) {
    e += labeling[i] == Label::inlier ? cost_inlier_[i] : cost_outlier_[i];
  }
  for (const auto& edge : edges_) {
    if (labeling[edge.i] != labeling[edge.j]) e += edge.penalty;
  }
  return e;
}

double gaussian_kernel(double residual, double threshold) {
  if (residual > 3.0 * threshold) return 0.0;
  const double t = residual / threshold;
  return std::exp(-0.5 * t * t);
}

ProblemGraph build_problem_graph(std::span<const double> residuals, double threshold,
                                 const NeighborGraph& graph, double lambda) {
  if (!(threshold > 0.0)) throw std::domain_error("kernel threshold must be positive");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::domain_error("lambda must lie in [0, 1]");
  if (graph.node_count() != residuals.size()) {
    throw std::invalid_argument("neighbor graph and residuals differ in size");
  }
  std::vector<double> inlier(residuals.size());
  std::vector<double> outlier(residuals.size());
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    if (!(residuals[i] >= 0.0)) throw std::domain_error("residuals must be non-negative");
    const double k = gaussian_kernel(residuals[i], threshold);
    inlier[i] = 1.0 - k;
    outlier[i] = k;
  }
  std::vector<PottsEdge> edges;
  if (lambda > 0.0) {
    edges.reserve(graph.edges().size());
    for (const auto& e : graph.edges()) edges.push_back({e.i, e.j, lambda * e.weight});
  }
  return ProblemGraph(std::move(inlier), std::move(outlier), std::move(edges));
}

namespace {

// Boykov-Kolmogorov augmenting paths on two search trees. The source tree
// holds the inlier side.
class MaxFlow {
 public:
  explicit MaxFlow(std::size_t n) : nodes_(n) {}

  void add_terminal(std::size_t i, double source_cap, double sink_cap) {
    nodes_[i].tr_cap += source_cap - sink_cap;
  }

  void add_edge(std::size_t i, std::size_t j, double cap_ij, double cap_ji) {
    const int a = static_cast<int>(arcs_.size());
    arcs_.push_back({static_cast<int>(j), nodes_[i].first, a + 1, cap_ij});
    nodes_[i].first = a;
    arcs_.push_back({static_cast<int>(i), nodes_[j].first, a, cap_ji});
    nodes_[j].first = a + 1;
  }

  void solve() {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      Node& n = nodes_[i];
      if (n.tr_cap != 0.0) {
        n.is_sink = n.tr_cap < 0.0;
        n.parent = kTerminal;
        activate(static_cast<int>(i));
      }
    }
    while (!active_.empty()) {
      const int i = active_.front();
      active_.pop_front();
      nodes_[i].queued = false;
      while (nodes_[i].parent != kNone) {
        const int bridge = grow(i);
        if (bridge < 0) break;
        augment(bridge);
        adopt();
      }
    }
  }

  // Nodes that can still reach the sink in the residual network are on the
  // outlier side; everything else (maximal source set) is inlier.
  std::vector<Label> labels() const {
    std::vector<char> to_sink(nodes_.size(), 0);
    std::deque<int> queue;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].tr_cap < 0.0) {
        to_sink[i] = 1;
        queue.push_back(static_cast<int>(i));
      }
    }
    while (!queue.empty()) {
      const int y = queue.front();
      queue.pop_front();
      for (int a = nodes_[y].first; a >= 0; a = arcs_[a].next) {
        const int x = arcs_[a].head;
        if (!to_sink[x] && arcs_[arcs_[a].sister].rcap > 0.0) {
          to_sink[x] = 1;
          queue.push_back(x);
        }
      }
    }
    std::vector<Label> out(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      out[i] = to_sink[i] ? Label::outlier : Label::inlier;
    }
    return out;
  }

 private:
  static constexpr int kNone = -1;
  static constexpr int kTerminal = -2;
  static constexpr int kOrphan = -3;

  struct Arc {
    int head;
    int next;
    int sister;
    double rcap;
  };
  struct Node {
    int first = -1;
    int parent = kNone;  // arc towards the parent, or a marker above
    bool is_sink = false;
    bool queued = false;
    double tr_cap = 0.0;  // > 0: residual from source, < 0: residual to sink
  };

  void activate(int i) {
    if (!nodes_[i].queued) {
      nodes_[i].queued = true;
      active_.push_back(i);
    }
  }

  // Returns an arc from the source tree into the sink tree, or -1.
  int grow(int i) {
    Node& ni = nodes_[i];
    for (int a = ni.first; a >= 0; a = arcs_[a].next) {
      const int j = arcs_[a].head;
      Node& nj = nodes_[j];
      const double cap = ni.is_sink ? arcs_[arcs_[a].sister].rcap : arcs_[a].rcap;
      if (cap <= 0.0) continue;
      if (nj.parent == kNone) {
        nj.is_sink = ni.is_sink;
        nj.parent = arcs_[a].sister;
        activate(j);
      } else if (nj.is_sink != ni.is_sink) {
        return ni.is_sink ? arcs_[a].sister : a;
      }
    }
    return -1;
  }

  void augment(int bridge) {
    const int tail = arcs_[arcs_[bridge].sister].head;
    const int head = arcs_[bridge].head;

    double flow = arcs_[bridge].rcap;
    for (int i = tail;;) {
      const int a = nodes_[i].parent;
      if (a == kTerminal) {
        flow = std::min(flow, nodes_[i].tr_cap);
        break;
      }
      flow = std::min(flow, arcs_[arcs_[a].sister].rcap);
      i = arcs_[a].head;
    }
    for (int i = head;;) {
      const int a = nodes_[i].parent;
      if (a == kTerminal) {
        flow = std::min(flow, -nodes_[i].tr_cap);
        break;
      }
      flow = std::min(flow, arcs_[a].rcap);
      i = arcs_[a].head;
    }

    arcs_[bridge].rcap -= flow;
    arcs_[arcs_[bridge].sister].rcap += flow;

    for (int i = tail;;) {
      const int a = nodes_[i].parent;
      if (a == kTerminal) {
        nodes_[i].tr_cap -= flow;
        if (nodes_[i].tr_cap <= 0.0) {
          nodes_[i].tr_cap = 0.0;
          make_orphan(i);
        }
        break;
      }
      Arc& down = arcs_[arcs_[a].sister];
      down.rcap -= flow;
      arcs_[a].rcap += flow;
      const int next = arcs_[a].head;
      if (down.rcap <= 0.0) {
        down.rcap = 0.0;
        make_orphan(i);
      }
      i = next;
    }
    for (int i = head;;) {
      const int a = nodes_[i].parent;
      if (a == kTerminal) {
        nodes_[i].tr_cap += flow;
        if (nodes_[i].tr_cap >= 0.0) {
          nodes_[i].tr_cap = 0.0;
          make_orphan(i);
        }
        break;
      }
      Arc& up = arcs_[a];
      up.rcap -= flow;
      arcs_[up.sister].rcap += flow;
      const int next = up.head;
      if (up.rcap <= 0.0) {
        up.rcap = 0.0;
        make_orphan(i);
      }
      i = next;
    }
  }

  void make_orphan(int i) {
    nodes_[i].parent = kOrphan;
    orphans_.push_back(i);
  }

  bool rooted(int j) const {
    for (int k = j;;) {
      const int a = nodes_[k].parent;
      if (a == kTerminal) return true;
      if (a == kOrphan || a == kNone) return false;
      k = arcs_[a].head;
    }
  }

  void adopt() {
    while (!orphans_.empty()) {
      const int i = orphans_.front();
      orphans_.pop_front();
      Node& ni = nodes_[i];

      int new_parent = kNone;
      for (int a = ni.first; a >= 0; a = arcs_[a].next) {
        const int j = arcs_[a].head;
        const Node& nj = nodes_[j];
        if (nj.parent == kNone || nj.is_sink != ni.is_sink) continue;
        const double cap = ni.is_sink ? arcs_[a].rcap : arcs_[arcs_[a].sister].rcap;
        if (cap > 0.0 && rooted(j)) {
          new_parent = a;
          break;
        }
      }
      if (new_parent != kNone) {
        ni.parent = new_parent;
        continue;
      }

      for (int a = ni.first; a >= 0; a = arcs_[a].next) {
        const int j = arcs_[a].head;
        Node& nj = nodes_[j];
        if (nj.parent == kNone || nj.is_sink != ni.is_sink) continue;
        const double cap = ni.is_sink ? arcs_[a].rcap : arcs_[arcs_[a].sister].rcap;
        if (cap > 0.0) activate(j);
        if (nj.parent >= 0 && arcs_[nj.parent].head == i) make_orphan(j);
      }
      ni.parent = kNone;
    }
  }

  std::vector<Node> nodes_;
  std::vector<Arc> arcs_;
  std::deque<int> active_;
  std::deque<int> orphans_;
};

}  // namespace

CutResult min_cut(const ProblemGraph& g) {
  const std::size_t n = g.node_count();
  MaxFlow flow(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Source edge paid when the node ends up outlier, sink edge when inlier.
    flow.add_terminal(i, g.cost_outlier()[i], g.cost_inlier()[i]);
  }
  for (const auto& e : g.edges()) {
    if (e.penalty > 0.0) flow.add_edge(e.i, e.j, e.penalty, e.penalty);
  }
  flow.solve();

  CutResult result;
  result.labeling = flow.labels();
  result.energy = g.energy(result.labeling);
  return result;
}

void write_problem_graph(std::ostream& out, const ProblemGraph& g) {
  const std::size_t n = g.node_count();
  const std::size_t source = n;
  const std::size_t sink = n + 1;
  const auto old_precision = out.precision(17);
  out << n + 2 << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    const double delta = g.cost_outlier()[i] - g.cost_inlier()[i];
    if (delta > 0.0) out << source << ' ' << i << ' ' << delta << '\n';
    if (delta < 0.0) out << i << ' ' << sink << ' ' << -delta << '\n';
  }
  for (const auto& e : g.edges()) {
    out << e.i << ' ' << e.j << ' ' << e.penalty << '\n';
    out << e.j << ' ' << e.i << ' ' << e.penalty << '\n';
  }
  out.precision(old_precision);
}

}  // namespace seqgc
