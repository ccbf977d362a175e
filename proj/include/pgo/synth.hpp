#pragma once

#include <cstdint>
#include <vector>

#include "pgo/graph.hpp"
#include "pgo/rng.hpp"

namespace pgo {

/// Parameters of the Manhattan-world trajectory generator.
struct SynthParams {
  int n = 300;            ///< number of poses
  double d = 3.0;         ///< grid step length
  double lc = 0.5;        ///< loop-closure attempt probability per pose
  double sigma_t = 0.0;   ///< translation noise stddev (per axis)
  double sigma_r = 0.0;   ///< heading noise stddev
  std::uint64_t seed = 0;
  double info_cap = 1e6;  ///< information weight used when sigma == 0
};

struct SynthResult {
  PoseGraph graph;                  ///< nodes initialized from noisy odometry
  std::vector<Pose2> ground_truth;  ///< exact simulated trajectory
};

namespace detail {

// Quadrant heading angles; index is the heading state in {0,1,2,3}.
inline double quadrant_angle(int q) {
  static const double table[4] = {0.0, 0.5 * kPi, kPi, -0.5 * kPi};
  return table[q & 3];
}

// Rotate an integer grid vector by -q * 90 degrees (exact).
inline void rotate_cw(int q, long& x, long& y) {
  for (int k = 0; k < (q & 3); ++k) {
    const long t = x;
    x = y;
    y = -t;
  }
}

inline double info_weight(double sigma, double cap) {
  if (sigma <= 0.0) return cap;
  const double w = 1.0 / (sigma * sigma);
  return w < cap ? w : cap;
}

}  // namespace detail

/**
 * @brief Generate a Manhattan-world pose graph.
 *
 * The simulated robot walks on an integer grid scaled by d, turning with
 * probability 0.5 straight / 0.25 left / 0.25 right, so ground-truth
 * positions and quadrant headings carry no trigonometric drift. Each step
 * emits an odometry edge; afterwards, with probability lc, a loop-closure
 * edge to a uniformly chosen earlier pose (index <= j-2) within 1.5*d is
 * appended. Every edge consumes exactly three Gaussian draws whether or
 * not the noise scales are zero, so graphs generated from one seed share
 * topology and noise stream positions across sigma settings. Node
 * estimates are the composition of the noisy odometry chain starting from
 * the ground-truth origin.
 */
inline SynthResult make_manhattan(const SynthParams& p) {
  if (p.n < 2) throw std::runtime_error("generator needs at least 2 poses");
  Rng rng(p.seed);
  SynthResult out;

  // Ground-truth walk over integer grid cells.
  std::vector<long> gx(p.n, 0), gy(p.n, 0);
  std::vector<int> gh(p.n, 0);
  static const long dirx[4] = {1, 0, -1, 0};
  static const long diry[4] = {0, 1, 0, -1};

  const double wt = detail::info_weight(p.sigma_t, p.info_cap);
  const double wr = detail::info_weight(p.sigma_r, p.info_cap);
  Eigen::Matrix3d info = Eigen::Matrix3d::Zero();
  info(0, 0) = wt;
  info(1, 1) = wt;
  info(2, 2) = wr;

  out.ground_truth.emplace_back(0.0, 0.0, 0.0);
  out.graph.nodes.emplace_back(0.0, 0.0, 0.0);

  auto make_edge = [&](int i, int j) {
    long dx = gx[j] - gx[i];
    long dy = gy[j] - gy[i];
    detail::rotate_cw(gh[i], dx, dy);
    const int dq = ((gh[j] - gh[i]) % 4 + 4) % 4;
    const double nx = rng.gaussian();
    const double ny = rng.gaussian();
    const double nth = rng.gaussian();
    Edge e;
    e.i = i;
    e.j = j;
    e.meas = Pose2(static_cast<double>(dx) * p.d + p.sigma_t * nx,
                   static_cast<double>(dy) * p.d + p.sigma_t * ny,
                   detail::quadrant_angle(dq) + p.sigma_r * nth);
    e.info = info;
    return e;
  };

  for (int j = 1; j < p.n; ++j) {
    // Turn, then advance one cell in the new heading.
    const double u = rng.uniform();
    int h = gh[j - 1];
    if (u >= 0.5) h = (u < 0.75) ? (h + 1) & 3 : (h + 3) & 3;
    gh[j] = h;
    gx[j] = gx[j - 1] + dirx[h];
    gy[j] = gy[j - 1] + diry[h];
    out.ground_truth.emplace_back(static_cast<double>(gx[j]) * p.d,
                                  static_cast<double>(gy[j]) * p.d,
                                  detail::quadrant_angle(h));

    const Edge odo = make_edge(j - 1, j);
    out.graph.edges.push_back(odo);
    out.graph.nodes.push_back(out.graph.nodes[j - 1].compose(odo.meas));

    if (rng.uniform() < p.lc) {
      // Grid distance <= 1.5*d means squared cell distance <= 2.
      std::vector<int> candidates;
      for (int i = 0; i <= j - 2; ++i) {
        const long ddx = gx[j] - gx[i];
        const long ddy = gy[j] - gy[i];
        if (ddx * ddx + ddy * ddy <= 2) candidates.push_back(i);
      }
      if (!candidates.empty()) {
        const int i =
            candidates[rng.uniform_int(candidates.size())];
        out.graph.edges.push_back(make_edge(i, j));
      }
    }
  }
  return out;
}

}  // namespace pgo
