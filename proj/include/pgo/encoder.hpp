#pragma once

#include <stdexcept>
#include <vector>

#include "pgo/diffnet.hpp"
#include "pgo/graph.hpp"

namespace pgo {

inline constexpr int kSummaryDim = 20;
inline constexpr int kStateDim = kSummaryDim + 1;

/**
 * @brief Learnable pieces of the graph-summary encoder.
 *
 * beta scales every message; lin maps the scalar mean node cost to the
 * 20-dim summary. Trained jointly with the agent (gradients arrive
 * through the state) and serialized inside agent checkpoints.
 */
struct EncoderParams {
  dn::ParameterBlock beta{"encoder.beta", 1, 1};
  dn::ParameterBlock W_lin{"encoder.W_lin", kSummaryDim, 1};
  dn::ParameterBlock b_lin{"encoder.b_lin", kSummaryDim, 1};

  EncoderParams() { beta.value(0, 0) = 1.0; }

  void init(Rng& rng) {
    beta.value(0, 0) = 1.0;
    dn::kaiming_init(W_lin, 1, rng);
  }

  std::vector<dn::ParameterBlock*> blocks() { return {&beta, &W_lin, &b_lin}; }
};

/// Orientation mismatch message along edge (i, j): beta * ||R_i R_meas - R_j||_F.
inline double message(double theta_i, double theta_j, double theta_meas,
                      double beta) {
  return beta * chordal_distance(theta_i + theta_meas, theta_j);
}

/// Per-node cost: sum of messages over incoming edges (i, j) with j fixed.
inline std::vector<double> aggregate(const PoseGraph& g, double beta) {
  std::vector<double> cost(g.nodes.size(), 0.0);
  for (const Edge& e : g.edges) {
    cost[e.j] +=
        message(g.nodes[e.i].theta, g.nodes[e.j].theta, e.meas.theta, beta);
  }
  return cost;
}

/**
 * @brief Beta-independent per-step observation features.
 *
 * mean_cost is the node-mean of the aggregated chordal messages at
 * beta = 1; multiplying by beta recovers the actual mean cost, so replay
 * can store these raw values and re-encode under the current parameters
 * at update time. resid is the cursor edge's wrapped angular residual.
 */
struct StateFeatures {
  double mean_cost = 0.0;
  double resid = 0.0;
};

inline StateFeatures state_features(const PoseGraph& g, int cursor_edge) {
  if (g.edges.empty()) throw std::runtime_error("graph has no edges");
  if (cursor_edge < 0 || cursor_edge >= g.num_edges()) {
    throw std::runtime_error("cursor edge out of range");
  }
  StateFeatures f;
  // Each edge's message lands on exactly one node, so the node-mean of
  // aggregated costs is the edge sum divided by the node count.
  double s = 0.0;
  for (const Edge& e : g.edges) {
    s += chordal_distance(g.nodes[e.i].theta + e.meas.theta,
                          g.nodes[e.j].theta);
  }
  f.mean_cost = s / static_cast<double>(g.num_nodes());
  const Edge& e = g.edges[cursor_edge];
  f.resid =
      edge_angular_residual(g.nodes[e.i].theta, g.nodes[e.j].theta, e.meas.theta);
  return f;
}

/// s = [W_lin * (beta * mean_cost) + b_lin ; resid], length 21.
inline dn::Mat encode_state(const StateFeatures& f, const EncoderParams& p) {
  dn::Mat s(kStateDim, 1);
  s.topRows(kSummaryDim) =
      p.W_lin.value * (p.beta.value(0, 0) * f.mean_cost) + p.b_lin.value;
  s(kSummaryDim, 0) = f.resid;
  return s;
}

inline dn::Mat encode_state(const PoseGraph& g, int cursor_edge,
                            const EncoderParams& p) {
  return encode_state(state_features(g, cursor_edge), p);
}

/// Tape version of encode_state; gradients reach beta, W_lin and b_lin.
inline int encode_on(dn::Tape& t, EncoderParams& p, const StateFeatures& f) {
  dn::Mat mc(1, 1);
  mc(0, 0) = f.mean_cost;
  const int scaled = t.mul(t.param(p.beta), t.constant(mc));
  const int summary =
      t.add(t.scale_by(t.param(p.W_lin), scaled), t.param(p.b_lin));
  dn::Mat r(1, 1);
  r(0, 0) = f.resid;
  return t.vstack(summary, t.constant(r));
}

}  // namespace pgo
