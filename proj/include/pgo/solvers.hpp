#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgo/graph.hpp"

namespace pgo {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Normal equations of the objective at the current estimate.
struct LinearSystem {
  SparseMatrix H;     ///< sum of J^T Lambda J blocks (plus anchor prior)
  Eigen::VectorXd b;  ///< sum of J^T Lambda e
  double chi2 = 0.0;
};

/**
 * @brief Build H = sum J^T Lambda J and b = sum J^T Lambda e.
 *
 * State ordering is (x, y, theta) per node, 3n total. Jacobian blocks of
 * e = [R_i^T (t_j - t_i) - t_meas ; wrap(theta_j - theta_i - theta_meas)]:
 *
 *   d e_t / d t_i = -R_i^T        d e_t / d t_j = R_i^T
 *   d e_t / d theta_i = S R_i^T (t_j - t_i),  S = [[0, 1], [-1, 0]]
 *   d e_th / d theta_i = -1       d e_th / d theta_j = +1
 *
 * With gauge_fix, pose 0 gets a diagonal prior of anchor_weight on its
 * three dimensions so H stays positive definite. Tests that compare H
 * and b against finite differences of F pass gauge_fix = false.
 */
inline LinearSystem linearize(const PoseGraph& g, bool gauge_fix = true,
                              double anchor_weight = 1e12) {
  const int n = g.num_nodes();
  LinearSystem sys;
  sys.b = Eigen::VectorXd::Zero(3 * n);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(36 * g.edges.size() + 3);

  for (const Edge& e : g.edges) {
    const Pose2& pi = g.nodes[e.i];
    const Pose2& pj = g.nodes[e.j];
    const Eigen::Vector3d r = edge_residual(pi, pj, e.meas);
    sys.chi2 += r.dot(e.info * r);

    const Eigen::Matrix2d Rt = pi.rotation().inverse().matrix();
    const Eigen::Vector2d dt = pj.translation() - pi.translation();
    const Eigen::Vector2d rot_dt = Rt * dt;
    // S * R_i^T * dt where S = [[0,1],[-1,0]] rotates by -90 degrees.
    const Eigen::Vector2d ddtheta(rot_dt.y(), -rot_dt.x());

    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();  // d e / d pose_i
    Eigen::Matrix3d B = Eigen::Matrix3d::Zero();  // d e / d pose_j
    A.topLeftCorner<2, 2>() = -Rt;
    A.topRightCorner<2, 1>() = ddtheta;
    A(2, 2) = -1.0;
    B.topLeftCorner<2, 2>() = Rt;
    B(2, 2) = 1.0;

    const Eigen::Matrix3d AtL = A.transpose() * e.info;
    const Eigen::Matrix3d BtL = B.transpose() * e.info;
    const Eigen::Matrix3d Hii = AtL * A;
    const Eigen::Matrix3d Hij = AtL * B;
    const Eigen::Matrix3d Hjj = BtL * B;
    const Eigen::Vector3d bi = AtL * r;
    const Eigen::Vector3d bj = BtL * r;

    for (int r3 = 0; r3 < 3; ++r3) {
      for (int c3 = 0; c3 < 3; ++c3) {
        trip.emplace_back(3 * e.i + r3, 3 * e.i + c3, Hii(r3, c3));
        trip.emplace_back(3 * e.i + r3, 3 * e.j + c3, Hij(r3, c3));
        trip.emplace_back(3 * e.j + r3, 3 * e.i + c3, Hij(c3, r3));
        trip.emplace_back(3 * e.j + r3, 3 * e.j + c3, Hjj(r3, c3));
      }
      sys.b(3 * e.i + r3) += bi(r3);
      sys.b(3 * e.j + r3) += bj(r3);
    }
  }
  if (gauge_fix) {
    for (int k = 0; k < 3; ++k) trip.emplace_back(k, k, anchor_weight);
  }
  sys.H.resize(3 * n, 3 * n);
  sys.H.setFromTriplets(trip.begin(), trip.end());
  return sys;
}

struct SolverOptions {
  int max_iters = 100;
  double step_tol = 1e-10;     ///< stop when max |delta| falls below
  double rel_tol = 1e-12;      ///< stop on relative chi2 decrease below
  double anchor_weight = 1e12;
  double lm_lambda0 = 1e-4;    ///< LM only
  double lm_lambda_max = 1e14; ///< LM only; stall guard
};

struct SolveReport {
  std::vector<double> chi2_trace;  ///< F at start plus after every iteration
  int iterations = 0;              ///< LM counts rejected attempts too
  double wall_time = 0.0;
  bool converged = false;
  std::string message;

  double initial_cost() const { return chi2_trace.front(); }
  double final_cost() const { return chi2_trace.back(); }
};

namespace detail {

inline void apply_delta(PoseGraph& g, const Eigen::VectorXd& delta) {
  for (int i = 0; i < g.num_nodes(); ++i) {
    g.nodes[i] = retract(g.nodes[i],
                         Eigen::Vector3d(delta(3 * i), delta(3 * i + 1),
                                         delta(3 * i + 2)));
  }
}

inline double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace detail

/**
 * @brief Sparse Gauss-Newton over the pose graph, updating g in place.
 *
 * Each iteration solves H delta = -b with a fill-reducing sparse
 * Cholesky (LDLT) and retracts every node. Stops at max_iters, when the
 * step's infinity norm drops below step_tol, or when the relative chi2
 * change drops below rel_tol.
 */
inline SolveReport gauss_newton(PoseGraph& g, const SolverOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  Eigen::SimplicialLDLT<SparseMatrix> chol;
  double prev = total_cost(g);
  rep.chi2_trace.push_back(prev);
  for (int it = 0; it < opt.max_iters; ++it) {
    const LinearSystem sys = linearize(g, true, opt.anchor_weight);
    chol.compute(sys.H);
    if (chol.info() != Eigen::Success) {
      rep.message = "sparse factorization failed (singular normal matrix)";
      rep.wall_time = detail::elapsed_s(t0);
      return rep;
    }
    const Eigen::VectorXd delta = chol.solve(-sys.b);
    detail::apply_delta(g, delta);
    ++rep.iterations;
    const double cost = total_cost(g);
    rep.chi2_trace.push_back(cost);
    if (delta.lpNorm<Eigen::Infinity>() < opt.step_tol) {
      rep.converged = true;
      break;
    }
    if (std::abs(prev - cost) < opt.rel_tol * std::max(prev, 1e-300)) {
      rep.converged = true;
      break;
    }
    prev = cost;
  }
  rep.wall_time = detail::elapsed_s(t0);
  return rep;
}

/**
 * @brief Levenberg-Marquardt with multiplicative diagonal damping.
 *
 * Solves (H + lambda * diag(H)) delta = -b; lambda starts at lm_lambda0,
 * divides by 10 on an accepted step (chi2 strictly decreased) and
 * multiplies by 10 on a rejected one. iterations counts accepted and
 * rejected attempts, matching a fixed iteration budget. The accepted
 * chi2 sequence is non-increasing by construction.
 */
inline SolveReport levenberg_marquardt(PoseGraph& g,
                                       const SolverOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  Eigen::SimplicialLDLT<SparseMatrix> chol;
  double lambda = opt.lm_lambda0;
  double cost = total_cost(g);
  rep.chi2_trace.push_back(cost);

  LinearSystem sys = linearize(g, true, opt.anchor_weight);
  Eigen::VectorXd diag = sys.H.diagonal();
  while (rep.iterations < opt.max_iters) {
    SparseMatrix Hd = sys.H;
    for (int k = 0; k < Hd.rows(); ++k) {
      Hd.coeffRef(k, k) += lambda * diag(k);
    }
    chol.compute(Hd);
    if (chol.info() != Eigen::Success) {
      rep.message = "sparse factorization failed (singular normal matrix)";
      rep.wall_time = detail::elapsed_s(t0);
      return rep;
    }
    const Eigen::VectorXd delta = chol.solve(-sys.b);
    PoseGraph candidate = g;
    detail::apply_delta(candidate, delta);
    const double cand_cost = total_cost(candidate);
    ++rep.iterations;
    if (cand_cost < cost) {
      g = std::move(candidate);
      const double prev = cost;
      cost = cand_cost;
      rep.chi2_trace.push_back(cost);
      lambda = std::max(lambda * 0.1, 1e-12);
      if (delta.lpNorm<Eigen::Infinity>() < opt.step_tol ||
          prev - cost < opt.rel_tol * std::max(prev, 1e-300)) {
        rep.converged = true;
        break;
      }
      sys = linearize(g, true, opt.anchor_weight);
      diag = sys.H.diagonal();
    } else {
      rep.chi2_trace.push_back(cost);
      lambda *= 10.0;
      if (lambda > opt.lm_lambda_max) {
        rep.message = "damping exceeded limit; no further progress";
        break;
      }
    }
  }
  rep.wall_time = detail::elapsed_s(t0);
  return rep;
}

/**
 * @brief Orientation-fixed linear least-squares translation solve.
 *
 * With all headings held fixed, minimizes the translation part of the
 * objective (weighted by each edge's translation information block) over
 * t_1..t_{n-1}, anchoring t_0 = (0, 0). One sparse SPD factorization;
 * the solution is written into g. Throws if the system is singular
 * (translation-disconnected graph).
 */
inline void translation_lls(PoseGraph& g) {
  const int n = g.num_nodes();
  if (n == 0) return;
  g.nodes[0].x = 0.0;
  g.nodes[0].y = 0.0;
  if (n == 1) return;

  // A component with no path to the anchor would leave the normal matrix
  // singular only up to rounding, which LDLT happily factors; detect the
  // gauge freedom structurally instead.
  {
    std::vector<std::vector<int>> nbr(n);
    for (const Edge& e : g.edges) {
      nbr[e.i].push_back(e.j);
      nbr[e.j].push_back(e.i);
    }
    std::vector<char> seen(n, 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w : nbr[v]) {
        if (!seen[w]) {
          seen[w] = 1;
          ++reached;
          stack.push_back(w);
        }
      }
    }
    if (reached != n) {
      throw std::runtime_error(
          "translation system singular (graph translation-disconnected)");
    }
  }

  const int m = 2 * (n - 1);  // unknowns: t_1..t_{n-1}
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(16 * g.edges.size());
  auto col = [](int node) { return 2 * (node - 1); };

  for (const Edge& e : g.edges) {
    const Eigen::Matrix2d M = g.nodes[e.i].rotation().inverse().matrix();
    const Eigen::Matrix2d W = e.info.topLeftCorner<2, 2>();
    const Eigen::Matrix2d MtW = M.transpose() * W;
    const Eigen::Matrix2d MtWM = MtW * M;
    const Eigen::Vector2d c(e.meas.x, e.meas.y);  // e = M (t_j - t_i) - c
    const Eigen::Vector2d Mtc = MtW * c;

    if (e.j > 0) {
      for (int r2 = 0; r2 < 2; ++r2)
        for (int c2 = 0; c2 < 2; ++c2)
          trip.emplace_back(col(e.j) + r2, col(e.j) + c2, MtWM(r2, c2));
      rhs.segment<2>(col(e.j)) += Mtc;
    }
    if (e.i > 0) {
      for (int r2 = 0; r2 < 2; ++r2)
        for (int c2 = 0; c2 < 2; ++c2)
          trip.emplace_back(col(e.i) + r2, col(e.i) + c2, MtWM(r2, c2));
      rhs.segment<2>(col(e.i)) -= Mtc;
    }
    if (e.i > 0 && e.j > 0) {
      for (int r2 = 0; r2 < 2; ++r2) {
        for (int c2 = 0; c2 < 2; ++c2) {
          trip.emplace_back(col(e.i) + r2, col(e.j) + c2, -MtWM(r2, c2));
          trip.emplace_back(col(e.j) + r2, col(e.i) + c2, -MtWM(r2, c2));
        }
      }
    }
  }
  SparseMatrix H(m, m);
  H.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<SparseMatrix> chol;
  chol.compute(H);
  if (chol.info() != Eigen::Success) {
    throw std::runtime_error(
        "translation system singular (graph translation-disconnected)");
  }
  const Eigen::VectorXd t = chol.solve(rhs);
  if (chol.info() != Eigen::Success) {
    throw std::runtime_error("translation solve failed");
  }
  for (int i = 1; i < n; ++i) {
    g.nodes[i].x = t(col(i));
    g.nodes[i].y = t(col(i) + 1);
  }
}

}  // namespace pgo
