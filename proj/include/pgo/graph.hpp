#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgo/se2.hpp"

namespace pgo {

/**
 * @brief Relative-pose constraint between nodes i and j.
 *
 * info is the 3x3 symmetric information matrix of the measurement in the
 * order (x, y, theta). Odometry and loop-closure edges share this type;
 * they differ only in |i - j|.
 */
struct Edge {
  int i = 0;
  int j = 0;
  Pose2 meas;
  Eigen::Matrix3d info = Eigen::Matrix3d::Identity();
};

/**
 * @brief 2D pose graph: node estimates plus relative measurements.
 *
 * Edge order is load/generation order and is semantically meaningful: the
 * refinement environment walks edges by index, so any reordering changes
 * rollout traces. Node ids are dense [0, n).
 */
struct PoseGraph {
  std::vector<Pose2> nodes;
  std::vector<Edge> edges;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }

  /// Throws std::runtime_error if any edge references a missing node.
  void validate() const {
    const int n = num_nodes();
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const Edge& e = edges[k];
      if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n) {
        throw std::runtime_error("edge " + std::to_string(k) +
                                 " references node outside [0, " +
                                 std::to_string(n) + ")");
      }
      if (e.i == e.j) {
        throw std::runtime_error("edge " + std::to_string(k) +
                                 " is a self-loop");
      }
    }
  }
};

/// Information-weighted objective F(x) = sum_e e^T Lambda e.
inline double total_cost(const PoseGraph& g) {
  double f = 0.0;
  for (const Edge& e : g.edges) {
    const Eigen::Vector3d r = edge_residual(g.nodes[e.i], g.nodes[e.j], e.meas);
    f += r.dot(e.info * r);
  }
  return f;
}

/**
 * @brief Unweighted orientation cost.
 *
 * sqrt of the sum over edges of the squared chordal distance between the
 * measured relative rotation and the estimated one. Ignores translations
 * and information weights entirely; this is the quantity the refinement
 * reward is built from.
 */
inline double orientation_cost(const PoseGraph& g) {
  double s = 0.0;
  for (const Edge& e : g.edges) {
    const double est = g.nodes[e.j].theta - g.nodes[e.i].theta;
    const double d = chordal_distance(e.meas.theta, est);
    s += d * d;
  }
  return std::sqrt(s);
}

/**
 * @brief Chain the odometry edges into an initial trajectory guess.
 *
 * Pose 0 is (0, 0, 0); pose k+1 composes pose k with the measurement of
 * edge (k, k+1). Throws if some consecutive pair has no such edge.
 */
inline std::vector<Pose2> odometry_init(const PoseGraph& g) {
  const int n = g.num_nodes();
  std::vector<int> odo(n, -1);
  for (int k = 0; k < g.num_edges(); ++k) {
    const Edge& e = g.edges[k];
    if (e.j == e.i + 1 && odo[e.i] < 0) odo[e.i] = k;
  }
  std::vector<Pose2> out;
  out.reserve(n);
  out.emplace_back(0.0, 0.0, 0.0);
  for (int k = 0; k + 1 < n; ++k) {
    if (odo[k] < 0) {
      throw std::runtime_error("no odometry edge (" + std::to_string(k) +
                               ", " + std::to_string(k + 1) + ")");
    }
    out.push_back(out.back().compose(g.edges[odo[k]].meas));
  }
  return out;
}

/// Per-node lists of incident edge indices (both directions).
struct Adjacency {
  std::vector<std::vector<int>> incoming;  // edges with j == node
  std::vector<std::vector<int>> outgoing;  // edges with i == node

  explicit Adjacency(const PoseGraph& g)
      : incoming(g.nodes.size()), outgoing(g.nodes.size()) {
    for (int k = 0; k < g.num_edges(); ++k) {
      outgoing[g.edges[k].i].push_back(k);
      incoming[g.edges[k].j].push_back(k);
    }
  }
};

}  // namespace pgo
