#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "pgo/encoder.hpp"
#include "pgo/graph.hpp"
#include "pgo/solvers.hpp"

namespace pgo {

struct EpisodeConfig {
  int cycles = 7;             ///< cursor traversals of the full edge list
  double action_range = 0.25; ///< radians; retraction = range * tanh(u)
  bool relative_bonus = false;///< bonus rungs scaled by the initial OC
};

/**
 * @brief Once-per-episode bonus ledger for the decade thresholds.
 *
 * Absolute mode pays +25 the first time OC drops below each of
 * 1e-3 .. 1e-8. Relative mode scales the rungs by the episode's initial
 * OC (a rung per factor-of-10 decrease, six rungs).
 */
class RewardTracker {
 public:
  void start(double initial_oc, bool relative) {
    paid_.fill(false);
    static constexpr double kAbsolute[kRungs] = {1e-3, 1e-4, 1e-5,
                                                 1e-6, 1e-7, 1e-8};
    static constexpr double kRelative[kRungs] = {1e-1, 1e-2, 1e-3,
                                                 1e-4, 1e-5, 1e-6};
    for (int k = 0; k < kRungs; ++k) {
      rungs_[k] = relative ? initial_oc * kRelative[k] : kAbsolute[k];
    }
  }

  double bonus(double oc) {
    double total = 0.0;
    for (int k = 0; k < kRungs; ++k) {
      if (!paid_[k] && oc < rungs_[k]) {
        paid_[k] = true;
        total += 25.0;
      }
    }
    return total;
  }

  static constexpr int kRungs = 6;

 private:
  std::array<double, kRungs> rungs_{};
  std::array<bool, kRungs> paid_{};
};

/// Hybrid dense/sparse reward: 100/(OC+1) plus the one-shot decade bonuses.
inline double reward_fn(double oc, RewardTracker& tracker) {
  return 100.0 / (oc + 1.0) + tracker.bonus(oc);
}

struct EnvStep {
  dn::Mat state;          ///< length-21 observation for the next action
  StateFeatures features; ///< raw encoder inputs (replay re-encodes these)
  double reward = 0.0;
  bool done = false;
  double oc = 0.0;        ///< info: orientation cost after the action
  int cursor = 0;         ///< info: edge the next action applies to
};

struct FinalizeResult {
  PoseGraph graph;
  double F = 0.0;
};

/**
 * @brief Edge-cursor refinement process over one pose graph.
 *
 * The cursor walks edges in storage order, wrapping after |E|; an episode
 * is cycles * |E| steps. Each step squashes the 2-dim pre-squash action
 * through tanh, scales by action_range and retracts the headings of the
 * cursor edge's two endpoints. The environment holds no RNG: a trace is a
 * pure function of (graph, initial estimate, action sequence).
 */
class Env {
 public:
  Env(PoseGraph graph, EpisodeConfig config, const EncoderParams* encoder)
      : init_(std::move(graph)), config_(config), encoder_(encoder) {
    if (init_.edges.empty()) throw std::runtime_error("graph has no edges");
    if (config_.cycles < 1) throw std::runtime_error("cycles must be positive");
    init_.validate();
    reset();
  }

  /// Restore the initial estimate, zero the cursor, fresh bonus ledger.
  EnvStep reset() {
    graph_ = init_;
    cursor_ = 0;
    steps_ = 0;
    done_ = false;
    const double oc = orientation_cost(graph_);
    tracker_.start(oc, config_.relative_bonus);
    EnvStep s = observe();
    s.oc = oc;
    return s;
  }

  /// Apply one pre-squash action to the cursor edge's endpoints.
  EnvStep step(const Eigen::Vector2d& action) {
    if (done_) throw std::runtime_error("step() called after episode end");
    const Edge& e = graph_.edges[cursor_];
    const double a0 = config_.action_range * std::tanh(action(0));
    const double a1 = config_.action_range * std::tanh(action(1));
    graph_.nodes[e.i].theta = retract_angle(graph_.nodes[e.i].theta, a0);
    graph_.nodes[e.j].theta = retract_angle(graph_.nodes[e.j].theta, a1);
    cursor_ = (cursor_ + 1) % graph_.num_edges();
    ++steps_;
    done_ = steps_ == steps_per_episode();
    const double oc = orientation_cost(graph_);
    EnvStep s = observe();
    s.reward = reward_fn(oc, tracker_);
    s.oc = oc;
    return s;
  }

  /**
   * @brief End-of-episode translation pass.
   *
   * Keeps the agent's headings, recomputes all translations by the
   * orientation-fixed linear solve and reports the full objective. Pure:
   * does not modify the environment.
   */
  FinalizeResult finalize() const {
    FinalizeResult r;
    r.graph = graph_;
    translation_lls(r.graph);
    r.F = total_cost(r.graph);
    return r;
  }

  int steps_per_episode() const {
    return config_.cycles * init_.num_edges();
  }
  int steps_taken() const { return steps_; }
  bool done() const { return done_; }
  const PoseGraph& graph() const { return graph_; }
  const EpisodeConfig& config() const { return config_; }

 private:
  EnvStep observe() const {
    EnvStep s;
    s.features = state_features(graph_, cursor_);
    s.state = encode_state(s.features, *encoder_);
    s.done = done_;
    s.cursor = cursor_;
    return s;
  }

  PoseGraph init_;
  PoseGraph graph_;
  EpisodeConfig config_;
  const EncoderParams* encoder_;
  RewardTracker tracker_;
  int cursor_ = 0;
  int steps_ = 0;
  bool done_ = false;
};

}  // namespace pgo
